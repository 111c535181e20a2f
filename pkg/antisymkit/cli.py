"""
The ``antisymkit`` command line.

Subcommands
-----------
verify
    run the property suite (the one-dimensional theorem check, the ``Ψ``
    injectivity probe, the scaling demo, the ``Q`` equivalence, the oracle
    cross-checks and the gradient checks) and write one report per probe
gen-data
    generate a determinant-regression dataset
train
    train an ansatz on a dataset and write a checkpoint plus a per-epoch log
eval
    evaluate a checkpoint on a dataset split and append a results row

Every parameter is resolved in this order, lowest first: the built-in
default, the JSON ``--config`` file (keys are the long flag names with
dashes replaced by underscores), the environment (paths only) and the flags
given on the command line. Every command writes ``<output>.manifest.json``
with the resolved configuration.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 training
divergence.
"""
import numpy
import os
import sys
import json
import argparse
import logging

from antisymkit import CurrentMPIComm, set_options, setup_logging, _global_options, __version__
from antisymkit.utils import JSONEncoder
from antisymkit.data import SPLITS, gen_dataset, save_dataset, load_dataset, export_csv
from antisymkit.io.csv import append_row
from antisymkit.neural.ansatz import KINDS, build_model
from antisymkit.neural.checkpoint import save_checkpoint, load_checkpoint
from antisymkit.neural.train import TrainConfig, TrainingLoop, DivergenceError, evaluate
from antisymkit import probe

logger = logging.getLogger('cli')

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_DIVERGENCE = 0, 1, 2, 3

PATH_ENV = {
    'data': 'ANTISYMKIT_DATA',
    'out': 'ANTISYMKIT_OUT',
    'checkpoint': 'ANTISYMKIT_CHECKPOINT',
    'results': 'ANTISYMKIT_RESULTS',
    'feature_cache_dir': 'ANTISYMKIT_FEATURE_CACHE',
}

GLOBAL_DEFAULTS = {'threads': None, 'log_level': 'info', 'feature_cache_dir': None}

DEFAULTS = {
    'verify': {
        'n': list(range(2, 9)), 'trials': 10000, 'pairs': 10000, 'orbit_pairs': None, 'psi_n': 3, 'd': 2, 'm': None,
        'psi_seeds': 5, 'scale_n': 3, 't_values': [0.5, 1.0, 2.0, 10.0], 'q_trials': 10000,
        'oracle_trials': 1000, 'grad_trials': 100, 'seed': 0, 'tol': 1e-9, 'out': 'verify-results',
    },
    'gen-data': {
        'n': 10, 'train': 20000, 'val': 2000, 'test': 4000, 'seed': 7, 'out': None, 'csv': False,
    },
    'train': {
        'data': None, 'ansatz': 'bilipschitz', 'seed': 0, 'activation': 'relu',
        'm': None, 'hidden': None, 'K': None, 'phi_sizes': None, 'rho_hidden': None,
        'epochs': 100, 'batch_size': 256, 'lr': 1e-3, 'factor': 0.5, 'patience': 5,
        'min_lr': 1e-5, 'shuffle_seed': 0, 'out': None, 'log': None,
    },
    'eval': {
        'checkpoint': None, 'data': None, 'split': 'test', 'results': 'results.csv',
        'check_antisym': False, 'antisym_trials': 1000, 'seed': 0,
    },
}

ARCH_KEYS = {
    'bilipschitz': ('m', 'hidden'),
    'vandermonde': ('K', 'phi_sizes', 'rho_hidden'),
    'mlp': ('hidden',),
}

class UsageError(ValueError):
    """ An invalid command line or configuration. """
    pass

class ArgumentParser(argparse.ArgumentParser):
    """ An :class:`argparse.ArgumentParser` that raises :class:`UsageError`. """
    def error(self, message):
        raise UsageError(message)

def _int_list(s):
    try:
        return [int(v) for v in s.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers, not '%s'" % s)

def _float_list(s):
    try:
        return [float(v) for v in s.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers, not '%s'" % s)

def make_parser():
    """
    The argument parser. Every option defaults to ``SUPPRESS`` so that the
    namespace only holds flags given explicitly.
    """
    S = argparse.SUPPRESS
    parser = ArgumentParser(prog='antisymkit', argument_default=S,
                            description="bi-Lipschitz features for antisymmetric function approximation")
    parser.add_argument('--version', action='version', version='antisymkit %s' % __version__)
    parser.add_argument('--config', help="JSON file of parameter values")
    parser.add_argument('--threads', type=int, help="worker lanes; 1 runs the deterministic reference path")
    parser.add_argument('--log-level', choices=['debug', 'info', 'warning'], help="logging level (default info)")
    parser.add_argument('--feature-cache-dir', help="directory of the on-disk feature cache (default: memory only)")
    sub = parser.add_subparsers(dest='command', parser_class=ArgumentParser)

    p = sub.add_parser('verify', argument_default=S, help="run the property suite")
    p.add_argument('--n', type=int, nargs='+', help="point counts of the 1d theorem check (default 2..8)")
    p.add_argument('--trials', type=int, help="pairs per n in the 1d theorem check")
    p.add_argument('--pairs', type=int, help="distinct-orbit pairs per ensemble in the Ψ probe")
    p.add_argument('--orbit-pairs', type=int, help="same-orbit pairs per ensemble in the Ψ probe (default pairs // 2)")
    p.add_argument('--psi-n', type=int, help="points of the Ψ probe")
    p.add_argument('--d', type=int, help="dimension of the Ψ probe and the scaling demo")
    p.add_argument('--m', type=int, help="features of the Ψ probe (default 2nd+1)")
    p.add_argument('--psi-seeds', type=int, help="number of sampled ensembles")
    p.add_argument('--scale-n', type=int, help="points of the scaling demo")
    p.add_argument('--t-values', type=_float_list, help="scaling factors, comma-separated")
    p.add_argument('--q-trials', type=int, help="vectors in the Q equivalence check")
    p.add_argument('--oracle-trials', type=int, help="pairs in the oracle cross-check")
    p.add_argument('--grad-trials', type=int, help="instances per ansatz in the gradient check")
    p.add_argument('--seed', type=int, help="base seed")
    p.add_argument('--tol', type=float, help="relative tolerance of the 1d bounds")
    p.add_argument('--out', help="output directory of the reports")

    p = sub.add_parser('gen-data', argument_default=S, help="generate a determinant dataset")
    p.add_argument('--n', type=int, help="matrix size (>= 2)")
    for split in SPLITS:
        p.add_argument('--%s' % split, type=int, help="number of %s samples" % split)
    p.add_argument('--seed', type=int, help="dataset seed")
    p.add_argument('--out', help="output dataset file")
    p.add_argument('--csv', action='store_true', help="also export <out>.csv")

    p = sub.add_parser('train', argument_default=S, help="train an ansatz")
    p.add_argument('--data', help="dataset file")
    p.add_argument('--ansatz', choices=KINDS, help="the ansatz")
    p.add_argument('--seed', type=int, help="model seed")
    p.add_argument('--activation', choices=['relu', 'tanh'], help="hidden activation")
    p.add_argument('--m', type=int, help="bilipschitz: number of Ψ features")
    p.add_argument('--hidden', type=_int_list, help="bilipschitz/mlp: hidden widths")
    p.add_argument('--K', type=int, help="vandermonde: number of features")
    p.add_argument('--phi-sizes', type=_int_list, help="vandermonde: widths of φ")
    p.add_argument('--rho-hidden', type=_int_list, help="vandermonde: hidden widths of ρ")
    p.add_argument('--epochs', type=int)
    p.add_argument('--batch-size', type=int)
    p.add_argument('--lr', type=float)
    p.add_argument('--factor', type=float, help="learning rate reduction factor")
    p.add_argument('--patience', type=int, help="epochs without improvement before a reduction")
    p.add_argument('--min-lr', type=float)
    p.add_argument('--shuffle-seed', type=int, help="seed of the minibatch order")
    p.add_argument('--out', help="output checkpoint file")
    p.add_argument('--log', help="per-epoch CSV (default <out>.log.csv)")

    p = sub.add_parser('eval', argument_default=S, help="evaluate a checkpoint")
    p.add_argument('--checkpoint', help="checkpoint file")
    p.add_argument('--data', help="dataset file")
    p.add_argument('--split', choices=SPLITS)
    p.add_argument('--results', help="results CSV the row is appended to")
    p.add_argument('--check-antisym', action='store_true', help="also measure the antisymmetry error")
    p.add_argument('--antisym-trials', type=int)
    p.add_argument('--seed', type=int, help="seed of the antisymmetry check")
    return parser

def read_config(path):
    """ The parameter values of a JSON config file. """
    if path is None:
        return {}
    if not os.path.exists(path):
        raise UsageError("config file '%s' does not exist" % path)
    with open(path, 'r') as ff:
        try:
            config = json.load(ff)
        except ValueError as e:
            raise UsageError("config file '%s' is not valid JSON: %s" % (path, e))
    if not isinstance(config, dict):
        raise UsageError("config file '%s' must hold a JSON object" % path)
    return config

def resolve(defaults, config, flags, environ=None):
    """
    Merge the parameter sources: defaults, then config values, then the
    path environment variables, then explicit flags.
    """
    if environ is None:
        environ = os.environ
    params = dict(defaults)
    params.update({k: v for k, v in config.items() if k in params})
    for key, var in PATH_ENV.items():
        if key in params and environ.get(var):
            params[key] = environ[var]
    params.update({k: v for k, v in flags.items() if k in params})
    return params

def _require(params, *keys):
    for key in keys:
        if params.get(key) is None:
            raise UsageError("missing required parameter '%s'" % key.replace('_', '-'))

def _positive(params, *keys):
    for key in keys:
        if int(params[key]) < 1:
            raise UsageError("'%s' must be a positive integer, not %s" % (key.replace('_', '-'), params[key]))

@CurrentMPIComm.enable
def write_manifest(output, command, params, comm=None, **extra):
    """ Write ``<output>.manifest.json`` on the root rank. """
    if comm.rank != 0:
        return None
    path = output.rstrip(os.sep) + '.manifest.json'
    manifest = {'command': command, 'version': __version__, 'config': params,
                'options': dict(_global_options)}
    manifest.update(extra)
    with open(path, 'w') as ff:
        json.dump(manifest, ff, cls=JSONEncoder, indent=2, sort_keys=True)
    logger.info("wrote manifest '%s'" % path)
    return path

@CurrentMPIComm.enable
def cmd_verify(params, comm=None):
    """ Run the property suite; exit 0 iff no probe found a violation. """
    ns = [int(n) for n in numpy.atleast_1d(params['n'])]
    for n in ns:
        if not 2 <= n <= 8:
            raise UsageError("the 1d theorem check needs 2 <= n <= 8, got n = %d" % n)
    _positive(params, 'trials', 'pairs', 'psi_seeds', 'q_trials', 'oracle_trials', 'grad_trials')
    if params['orbit_pairs'] is not None and int(params['orbit_pairs']) < 0:
        raise UsageError("'orbit-pairs' must be non-negative, not %s" % params['orbit_pairs'])
    if not 2 <= int(params['psi_n']) <= 8:
        raise UsageError("the Ψ probe needs 2 <= psi-n <= 8, got %s" % params['psi_n'])
    seed = int(params['seed'])

    reports = []
    for n in ns:
        reports.append(probe.verify_theorem_1d(n, int(params['trials']), seed=seed, tol=float(params['tol'])))
    for s in range(int(params['psi_seeds'])):
        reports.append(probe.probe_psi(int(params['psi_n']), int(params['d']), m=params['m'],
                                       pairs=int(params['pairs']), seed=seed + s,
                                       orbit_pairs=params['orbit_pairs']))
    reports.append(probe.vandermonde_scaling_demo(int(params['scale_n']), int(params['d']),
                                                  params['t_values'], seed=seed))
    reports.append(probe.check_q_equivalence(int(params['q_trials']), seed=seed))
    reports.append(probe.check_oracles(int(params['oracle_trials']), seed=seed))
    for kind in KINDS:
        reports.append(probe.check_gradients(kind, trials=int(params['grad_trials']), seed=seed))

    out = params['out']
    failed = [r.name for r in reports if not r.ok]
    if comm.rank == 0:
        os.makedirs(out, exist_ok=True)
        for r in reports:
            r.to_csv(os.path.join(out, '%s.csv' % r.name))
            print(r.summary())
    for r in reports:
        r.save(os.path.join(out, '%s.json' % r.name))
    write_manifest(out, 'verify', params, failed=failed)

    if failed:
        if comm.rank == 0:
            logger.warning("violations found in %s" % ", ".join(failed))
        return EXIT_VIOLATION
    return EXIT_OK

@CurrentMPIComm.enable
def cmd_gen_data(params, comm=None):
    """ Generate a dataset file, and optionally its CSV export. """
    _require(params, 'out')
    if int(params['n']) < 2:
        raise UsageError("datasets need n >= 2, got n = %s" % params['n'])
    counts = [int(params[split]) for split in SPLITS]
    ds = gen_dataset(int(params['n']), counts, int(params['seed']), comm=comm)
    if comm.rank == 0:
        save_dataset(ds, params['out'])
        if params['csv']:
            export_csv(ds, params['out'] + '.csv')
    write_manifest(params['out'], 'gen-data', params, checksum=ds.checksum, low=ds.attrs['low'],
                   high=ds.attrs['high'])
    return EXIT_OK

def cmd_train(params):
    """ Train an ansatz; exit 3 with a diagnostic if the loss diverges. """
    _require(params, 'data', 'out')
    kind = params['ansatz']
    if kind not in KINDS:
        raise UsageError("ansatz should be one of %s, not '%s'" % (KINDS, kind))
    arch = {}
    for key in ('m', 'hidden', 'K', 'phi_sizes', 'rho_hidden'):
        if params[key] is None:
            continue
        if key not in ARCH_KEYS[kind]:
            raise UsageError("'%s' does not apply to the %s ansatz" % (key.replace('_', '-'), kind))
        arch[key] = params[key]

    if not os.path.exists(params['data']):
        raise UsageError("dataset '%s' does not exist" % params['data'])
    data = load_dataset(params['data'])
    model = build_model(kind, data.n, data.n, seed=int(params['seed']),
                        activation=params['activation'], **arch)
    cfg = TrainConfig(epochs=params['epochs'], batch_size=params['batch_size'], lr=params['lr'],
                      factor=params['factor'], patience=params['patience'], min_lr=params['min_lr'],
                      seed=params['shuffle_seed'])

    log_path = params['log'] or params['out'] + '.log.csv'
    params = dict(params, log=log_path)
    loop = TrainingLoop(model, data, cfg)
    try:
        loop.run()
    except DivergenceError as e:
        if len(loop.log):
            loop.log.to_csv(log_path)
        print("antisymkit: %s" % e, file=sys.stderr)
        write_manifest(params['out'], 'train', params, param_count=model.param_count,
                       model=model.attrs, train_config=cfg.attrs, dataset_checksum=data.checksum,
                       diverged_epoch=e.epoch)
        return EXIT_DIVERGENCE

    save_checkpoint(model, params['out'])
    loop.log.to_csv(log_path)
    write_manifest(params['out'], 'train', params, param_count=model.param_count,
                   model=model.attrs, train_config=cfg.attrs, dataset_checksum=data.checksum)
    return EXIT_OK

def cmd_eval(params):
    """ Print MAE and MARE of a checkpoint on one split and append a results row. """
    _require(params, 'checkpoint', 'data', 'results')
    for key in ('checkpoint', 'data'):
        if not os.path.exists(params[key]):
            raise UsageError("%s '%s' does not exist" % (key, params[key]))
    if params['split'] not in SPLITS:
        raise UsageError("split should be one of %s, not '%s'" % (SPLITS, params['split']))

    model = load_checkpoint(params['checkpoint'])
    data = load_dataset(params['data'])
    if model.n != data.n or model.d != data.n:
        raise UsageError("checkpoint expects (%d, %d) point clouds, dataset holds %d x %d matrices"
                         % (model.n, model.d, data.n, data.n))

    stats = evaluate(model, data, params['split'])
    row = {'ansatz': model.kind, 'n': model.n, 'split': params['split'], 'mae': stats['mae'],
           'mare': stats['mare'], 'param_count': model.param_count}
    print("%s n=%d %s: mae = %.6e, mare = %.6e (%d of %d excluded from mare), params = %d"
          % (model.kind, model.n, params['split'], stats['mae'], stats['mare'],
             stats['excluded'], stats['count'], model.param_count))

    extra = {'stats': stats}
    if params['check_antisym']:
        X, _ = data.split(params['split'])
        report = probe.check_antisymmetry(model, trials=int(params['antisym_trials']),
                                          seed=int(params['seed']), X=X)
        extra['antisymmetry'] = report.attrs
        print(report.summary())

    append_row(params['results'], row)
    write_manifest(params['results'], 'eval', params, **extra)
    return EXIT_OK

COMMANDS = {'verify': cmd_verify, 'gen-data': cmd_gen_data, 'train': cmd_train, 'eval': cmd_eval}

def main(argv=None):
    """
    Run the command line ``argv`` (default ``sys.argv[1:]``) and return the
    exit code.
    """
    parser = make_parser()
    try:
        ns = vars(parser.parse_args(argv))
        command = ns.pop('command', None)
        if command is None:
            raise UsageError("a command is required: one of %s" % ", ".join(sorted(COMMANDS)))

        config = read_config(ns.pop('config', None))
        glob = resolve(GLOBAL_DEFAULTS, config, ns)
        setup_logging(glob['log_level'])
        params = resolve(DEFAULTS[command], config, ns)
        ignored = sorted(set(config) - set(params) - set(glob))
        if ignored:
            logger.warning("ignoring config keys not used by '%s': %s" % (command, ", ".join(ignored)))

        options = {'feature_cache_dir': glob['feature_cache_dir']}
        if glob['threads'] is not None:
            options['threads'] = int(glob['threads'])
        with set_options(**options):
            # the manifest echoes the options in effect, defaults included
            params.update(threads=_global_options['threads'], log_level=glob['log_level'],
                          feature_cache_dir=glob['feature_cache_dir'])
            return COMMANDS[command](params)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except (UsageError, ValueError, TypeError, FileNotFoundError) as e:
        print("antisymkit: error: %s" % e, file=sys.stderr)
        return EXIT_USAGE

if __name__ == '__main__':
    sys.exit(main())
