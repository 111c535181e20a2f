"""
Empirical checks of the feature-map theorems and of the implementation.

Every check returns a :class:`ProbeReport`; a report with ``ok == True``
found no violation.
"""
import numpy
import os
import json
import logging
from mpi4py import MPI
from scipy.special import logsumexp

from antisymkit import CurrentMPIComm
from antisymkit.mpirng import MPIRandomState
from antisymkit.utils import local_range, JSONEncoder, JSONDecoder
from antisymkit.io.csv import write_table
from antisymkit.symmetry import (random_permutation, apply_perm, l1_norm_diff,
                                 dist_plus_bruteforce, dist_sym_bruteforce, dist_sym_1d)
from antisymkit.features import (feature_1d, q_fast, q_naive, q_fast_many, sample_ensemble,
                                 psi_features, psi_features_batch, sample_vandermonde_bank,
                                 vandermonde_log_features)
from antisymkit.data import det_label, det_cofactor

logger = logging.getLogger('probe')

#: pairs with a smaller ``d₊`` are left out of the ratio statistics
RATIO_FLOOR = 1e-12

FAMILIES_1D = ('gaussian', 'near_tie', 'shared', 'odd_copy')
FAMILIES_PSI = ('gaussian', 'same_orbit', 'odd_copy')

class ProbeReport(object):
    """
    The outcome of one empirical check.

    Parameters
    ----------
    name : str
        the name of the check
    trials : int
        the number of sampled cases
    violations : int
        the number of cases breaching the checked bound
    ratio_min, ratio_max : float
        the extreme ratios ``‖ΔF‖₁ / d₊`` over the cases with ``d₊ > 1e-12``
        (NaN if not applicable)
    excluded : int
        the number of cases left out of the ratio statistics
    attrs : dict
        the configuration of the check (sizes, seeds, tolerances) and
        derived scalars
    counters : dict
        further named violation counts
    families : dict
        per-family ``{'trials', 'violations'}`` counts
    data : dict of array_like, optional
        tabular output, column by column
    """
    logger = logging.getLogger('ProbeReport')

    def __init__(self, name, trials, violations=0, ratio_min=numpy.nan, ratio_max=numpy.nan,
                 excluded=0, attrs=None, counters=None, families=None, data=None):
        self.name = name
        self.trials = int(trials)
        self.violations = int(violations)
        self.ratio_min = float(ratio_min)
        self.ratio_max = float(ratio_max)
        self.excluded = int(excluded)
        self.attrs = dict(attrs or {})
        self.counters = dict(counters or {})
        self.families = dict(families or {})
        self.data = None if data is None else {k: numpy.asarray(v) for k, v in data.items()}

    @property
    def ok(self):
        """ Whether no violation of any kind was found. """
        return self.violations == 0 and all(v == 0 for v in self.counters.values())

    def __getstate__(self):
        return {'name': self.name, 'trials': self.trials, 'violations': self.violations,
                'ratio_min': self.ratio_min, 'ratio_max': self.ratio_max,
                'excluded': self.excluded, 'attrs': self.attrs, 'counters': self.counters,
                'families': self.families, 'data': self.data}

    def __setstate__(self, state):
        self.__dict__.update(state)

    def __repr__(self):
        return "<ProbeReport: %s, trials=%d, violations=%d>" % (self.name, self.trials, self.violations)

    def summary(self):
        """ A human-readable multi-line summary. """
        lines = ["%s: %s" % (self.name, "ok" if self.ok else "FAILED")]
        lines.append("  trials = %d, violations = %d" % (self.trials, self.violations))
        for k in sorted(self.counters):
            lines.append("  %s = %d" % (k, self.counters[k]))
        if numpy.isfinite(self.ratio_min):
            lines.append("  ratio in [%.6g, %.6g] over %d cases (%d excluded)"
                         % (self.ratio_min, self.ratio_max, self.trials - self.excluded, self.excluded))
        for fam in sorted(self.families):
            c = self.families[fam]
            lines.append("  family %-10s trials = %d, violations = %d" % (fam, c['trials'], c['violations']))
        for k in sorted(self.attrs):
            lines.append("  %s = %s" % (k, self.attrs[k]))
        return "\n".join(lines)

    def to_csv(self, path):
        """
        Write the tabular :attr:`data` as CSV, or a single summary row when
        the report has no table.
        """
        if self.data is not None:
            write_table(path, self.data)
            return
        row = {'name': [self.name], 'trials': [self.trials], 'violations': [self.violations],
               'ratio_min': [self.ratio_min], 'ratio_max': [self.ratio_max], 'excluded': [self.excluded]}
        for k in sorted(self.counters):
            row[k] = [self.counters[k]]
        for k in sorted(self.attrs):
            if numpy.isscalar(self.attrs[k]):
                row[k] = [self.attrs[k]]
        write_table(path, row)

    @CurrentMPIComm.enable
    def save(self, output, comm=None):
        """
        Save the report to disk as JSON; only the root rank writes.
        """
        if comm.rank == 0:
            self.logger.info('saving %r to %s' % (self, output))
            with open(output, 'w') as ff:
                json.dump(self.__getstate__(), ff, cls=JSONEncoder)

    @classmethod
    @CurrentMPIComm.enable
    def load(cls, output, comm=None):
        """
        Load a report saved with :func:`save`.
        """
        if comm.rank == 0:
            with open(output, 'r') as ff:
                state = json.load(ff, cls=JSONDecoder)
        else:
            state = None
        state = comm.bcast(state)
        self = object.__new__(cls)
        self.__setstate__(state)
        return self

class _Tally(object):
    """
    Local counters of a distributed check, reduced over ranks by :meth:`reduce`.
    """
    def __init__(self, families):
        self.families = {f: [0, 0] for f in families}
        self.counters = {}
        self.violations = 0
        self.excluded = 0
        self.ratio_min = numpy.inf
        self.ratio_max = -numpy.inf

    def count(self, name, flag=True):
        self.counters[name] = self.counters.get(name, 0) + int(flag)

    def ratio(self, num, den):
        if den > RATIO_FLOOR:
            r = num / den
            self.ratio_min = min(self.ratio_min, r)
            self.ratio_max = max(self.ratio_max, r)
        else:
            self.excluded += 1

    def reduce(self, comm, counter_names):
        fams = sorted(self.families)
        local = [self.violations, self.excluded] + [self.counters.get(k, 0) for k in counter_names]
        local += sum((self.families[f] for f in fams), [])
        total = comm.allreduce(numpy.array(local, dtype='i8'), op=MPI.SUM)
        rmin = comm.allreduce(self.ratio_min, op=MPI.MIN)
        rmax = comm.allreduce(self.ratio_max, op=MPI.MAX)

        violations, excluded = int(total[0]), int(total[1])
        counters = dict(zip(counter_names, (int(c) for c in total[2:2 + len(counter_names)])))
        rest = total[2 + len(counter_names):].reshape(-1, 2)
        families = {f: {'trials': int(t), 'violations': int(v)} for f, (t, v) in zip(fams, rest)}
        if not numpy.isfinite(rmin):
            rmin, rmax = numpy.nan, numpy.nan
        return violations, excluded, counters, families, rmin, rmax

def _breach(lhs, rhs, tol):
    """ ``lhs <= rhs`` fails beyond the relative tolerance ``tol``. """
    return lhs > rhs + tol * max(abs(lhs), abs(rhs))

def _pair_1d(rng, n, family):
    """ One ``(x, y)`` pair of vectors from the named family. """
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    if family == 'near_tie':
        i, j = rng.choice(n, size=2, replace=False)
        x[j] = x[i] + 1e-10 * rng.uniform(-1, 1)
        if rng.uniform() < 0.5:
            y[j] = y[i] + 1e-10 * rng.uniform(-1, 1)
        else:
            y[:] = x + 1e-10 * rng.uniform(-1, 1, size=n)
    elif family == 'shared':
        # exact duplicates within x and values shared between x and y
        i, j = rng.choice(n, size=2, replace=False)
        x[j] = x[i]
        k = rng.integers(1, n + 1)
        y[:k] = x[rng.choice(n, size=k, replace=False)]
    elif family == 'odd_copy':
        y = apply_perm(x, random_permutation(n, rng, parity=-1))
        if rng.uniform() < 0.5:
            y = y + 1e-6 * rng.standard_normal(n)
    return x, y

@CurrentMPIComm.enable
def verify_theorem_1d(n, trials, seed=0, tol=1e-9, comm=None):
    """
    Check ``d₊(x, y) <= ‖F(x) - F(y)‖₁ <= 2 d₊(x, y)`` for one-dimensional
    clouds of ``n`` points, together with
    ``d±(x, y) <= d₊(x, y) <= d±(x, y) + |Q(x)| + |Q(y)|``.

    The trials cycle through Gaussian pairs, near-ties, exactly shared
    values and odd permutations of the same cloud; every trial draws from
    its own random stream, so the result does not depend on the number of
    ranks.

    Parameters
    ----------
    n : int
        the number of points, ``2 <= n <= 8``
    trials : int
        the number of sampled pairs
    seed : int
        the random seed
    tol : float
        the relative tolerance of the bounds
    comm : MPI communicator, optional
        the communicator the trials are split over

    Returns
    -------
    ProbeReport :
        ``violations`` counts breaches of the bi-Lipschitz bounds; the
        counter ``sandwich_violations`` counts breaches of the intermediate
        inequality
    """
    if not 2 <= n <= 8:
        raise ValueError("verify_theorem_1d needs 2 <= n <= 8, got n = %d" % n)
    if trials < 1:
        raise ValueError("`trials` must be a positive integer, not %d" % trials)

    start, stop = local_range(trials, comm)
    streams = MPIRandomState(comm, seed, stop - start)
    tally = _Tally(FAMILIES_1D)
    for t in range(start, stop):
        rng = streams.item_rng(t)
        family = FAMILIES_1D[t % len(FAMILIES_1D)]
        x, y = _pair_1d(rng, n, family)

        dp = dist_plus_bruteforce(x, y)
        dF = l1_norm_diff(feature_1d(x), feature_1d(y))
        bad = _breach(dp, dF, tol) or _breach(dF, 2 * dp, tol)

        ds = dist_sym_1d(x, y)
        qx, qy = abs(q_fast(x)), abs(q_fast(y))
        tally.count('sandwich_violations', _breach(ds, dp, tol) or _breach(dp, ds + qx + qy, tol))

        tally.violations += bad
        tally.families[family][0] += 1
        tally.families[family][1] += bad
        tally.ratio(dF, dp)

    violations, excluded, counters, families, rmin, rmax = tally.reduce(comm, ['sandwich_violations'])
    report = ProbeReport('theorem_1d_n%d' % n, trials, violations, rmin, rmax, excluded,
                         attrs={'n': n, 'd': 1, 'seed': seed, 'tol': tol},
                         counters=counters, families=families)
    if comm.rank == 0:
        logger.info("n = %d: %d violations, %d sandwich violations over %d pairs, ratio in [%.4g, %.4g]"
                    % (n, violations, counters['sandwich_violations'], trials, rmin, rmax))
    return report

@CurrentMPIComm.enable
def probe_psi(n, d, m=None, pairs=10000, seed=0, tol=1e-12, orbit_pairs=None, comm=None):
    """
    Probe injectivity and the bi-Lipschitz ratios of ``Ψ`` for one sampled
    ensemble.

    Pairs are normalized to ``‖x‖₁ + ‖y‖₁ = 1``, which loses nothing since
    both ``Ψ`` and ``d₊`` are positively homogeneous. A pair with
    ``d₊ > tol`` but ``‖Ψ(x) - Ψ(y)‖₁ <= tol`` is an injectivity violation;
    a pair from one orbit with ``Ψ(x) != Ψ(y)`` is counted as an invariance
    violation.

    Parameters
    ----------
    n, d : int
        the number of points (``2 <= n <= 8``) and their dimension
    m : int, optional
        the number of features; default ``2nd+1``
    pairs : int
        the number of distinct-orbit pairs, alternating Gaussian pairs
        and odd-permuted copies
    seed : int
        the seed of the ensemble and of the pairs
    tol : float
        the injectivity tolerance
    orbit_pairs : int, optional
        the number of additional same-orbit pairs that check invariance;
        default ``pairs // 2``
    """
    if not 2 <= n <= 8:
        raise ValueError("probe_psi needs 2 <= n <= 8, got n = %d" % n)
    if d < 1:
        raise ValueError("probe_psi needs d >= 1, got d = %d" % d)
    if pairs < 1:
        raise ValueError("`pairs` must be a positive integer, not %d" % pairs)
    if orbit_pairs is None:
        orbit_pairs = pairs // 2
    if orbit_pairs < 0:
        raise ValueError("`orbit_pairs` must be non-negative, not %d" % orbit_pairs)
    total = pairs + orbit_pairs

    ensemble = sample_ensemble(n, d, m=m, seed=seed)
    start, stop = local_range(total, comm)
    streams = MPIRandomState(comm, seed, stop - start)
    tally = _Tally(FAMILIES_PSI)
    for t in range(start, stop):
        rng = streams.item_rng(t)
        family = 'same_orbit' if t >= pairs else ('gaussian', 'odd_copy')[t % 2]
        x = rng.standard_normal((n, d))
        if family == 'gaussian':
            y = rng.standard_normal((n, d))
        elif family == 'same_orbit':
            y = apply_perm(x, random_permutation(n, rng, parity=1))
        else:
            y = apply_perm(x, random_permutation(n, rng, parity=-1))

        scale = 1.0 / (numpy.abs(x).sum() + numpy.abs(y).sum())
        x, y = x * scale, y * scale

        dp = dist_plus_bruteforce(x, y)
        dpsi = l1_norm_diff(psi_features(x, ensemble), psi_features(y, ensemble))
        if family == 'same_orbit':
            tally.count('invariance_violations', dpsi != 0)

        bad = dp > tol and dpsi <= tol
        tally.violations += bad
        tally.families[family][0] += 1
        tally.families[family][1] += bad
        tally.ratio(dpsi, dp)

    violations, excluded, counters, families, rmin, rmax = tally.reduce(comm, ['invariance_violations'])
    report = ProbeReport('psi_n%d_d%d_seed%d' % (n, d, seed), total, violations, rmin, rmax, excluded,
                         attrs={'n': n, 'd': d, 'm': ensemble.m, 'seed': seed, 'tol': tol,
                                'pairs': pairs, 'orbit_pairs': orbit_pairs},
                         counters=counters, families=families)
    if comm.rank == 0:
        logger.info("n = %d, d = %d, m = %d, seed = %d: %d injectivity violations, ratio in [%.4g, %.4g]"
                    % (n, d, ensemble.m, seed, violations, rmin, rmax))
    return report

def vandermonde_scaling_demo(n, d, t_values, seed=0, tol=1e-9, slope_tol=1e-6):
    """
    Contrast how the Vandermonde features and ``Ψ`` respond to scaling the
    points by ``t > 0``.

    For a random cloud ``x``, ``‖f(t x)‖₁ / ‖f(x)‖₁`` is compared with
    ``t ** (n (n-1) / 2)`` in the log domain and ``‖Ψ(t x)‖₁ / ‖Ψ(x)‖₁``
    with ``t``, both within the relative tolerance ``tol``. With two or more
    distinct ``t`` the log-log slopes are fitted and compared with the
    exponents within ``slope_tol``.

    Returns
    -------
    ProbeReport :
        with a table of ``t``, the log ratios and the ratios
    """
    if n < 2 or d < 1:
        raise ValueError("the scaling demo needs n >= 2 and d >= 1, not n = %d, d = %d" % (n, d))
    t_values = numpy.asarray(t_values, dtype='f8').ravel()
    if len(t_values) == 0:
        raise ValueError("`t_values` is empty")
    if (t_values <= 0).any() or not numpy.isfinite(t_values).all():
        raise ValueError("scaling factors must be positive and finite")

    rng = numpy.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    bank = sample_vandermonde_bank(n, d, seed=seed)
    ensemble = sample_ensemble(n, d, seed=seed)
    exponent = n * (n - 1) // 2

    def log_norm_f(cloud):
        sign, logabs = vandermonde_log_features(cloud[None], bank)
        return logsumexp(logabs[0][sign[0] != 0])

    def log_norm_psi(cloud):
        return numpy.log(numpy.abs(psi_features(cloud, ensemble)).sum())

    f0, p0 = log_norm_f(x), log_norm_psi(x)
    log_f = numpy.array([log_norm_f(t * x) - f0 for t in t_values])
    log_p = numpy.array([log_norm_psi(t * x) - p0 for t in t_values])
    log_t = numpy.log(t_values)

    counters = {'vandermonde_violations': 0, 'psi_violations': 0}
    for lt, lf, lp in zip(log_t, log_f, log_p):
        counters['vandermonde_violations'] += abs(lf - exponent * lt) > tol * max(1.0, abs(exponent * lt))
        counters['psi_violations'] += abs(numpy.expm1(lp - lt)) > tol

    attrs = {'n': n, 'd': d, 'seed': seed, 'exponent': exponent, 'tol': tol}
    if len(numpy.unique(t_values)) > 1:
        attrs['vandermonde_slope'] = float(numpy.polyfit(log_t, log_f, 1)[0])
        attrs['psi_slope'] = float(numpy.polyfit(log_t, log_p, 1)[0])
        counters['slope_violations'] = int(abs(attrs['vandermonde_slope'] - exponent) > slope_tol) \
                                     + int(abs(attrs['psi_slope'] - 1) > slope_tol)

    with numpy.errstate(over='ignore'):
        data = {'t': t_values, 'vandermonde_log_ratio': log_f, 'vandermonde_ratio': numpy.exp(log_f),
                'expected_log_ratio': exponent * log_t, 'psi_ratio': numpy.exp(log_p)}

    report = ProbeReport('scaling_n%d_d%d' % (n, d), len(t_values), 0, attrs=attrs,
                         counters={k: int(v) for k, v in counters.items()}, data=data)
    logger.info("scaling demo n = %d: exponent %d, %s" % (n, exponent,
                ", ".join("%s = %.9g" % (k, attrs[k]) for k in ('vandermonde_slope', 'psi_slope') if k in attrs)))
    return report

def check_q_equivalence(trials, seed=0):
    """
    Compare :func:`q_fast` with :func:`q_naive` for exact equality on
    random vectors with ``2 <= n <= 64``; every fourth vector holds an exact
    tie and must give 0. Rows of equal length are also run through
    :func:`q_fast_many`.
    """
    if trials < 1:
        raise ValueError("`trials` must be a positive integer, not %d" % trials)
    rng = numpy.random.default_rng(seed)
    mismatches = ties_nonzero = 0
    by_length = {}
    for t in range(trials):
        n = int(rng.integers(2, 65))
        x = rng.standard_normal(n) * 10.0 ** rng.uniform(-6, 6)
        if t % 4 == 3:
            i, j = rng.choice(n, size=2, replace=False)
            x[j] = x[i]
        qf, qn = q_fast(x), q_naive(x)
        mismatches += qf != qn
        if t % 4 == 3:
            ties_nonzero += qf != 0
        by_length.setdefault(n, []).append((x, qn))

    batch_mismatches = 0
    for n, rows in by_length.items():
        X = numpy.array([r[0] for r in rows])
        batch_mismatches += int((q_fast_many(X) != numpy.array([r[1] for r in rows])).sum())

    report = ProbeReport('q_equivalence', trials, int(mismatches), attrs={'seed': seed},
                         counters={'tie_violations': int(ties_nonzero), 'batch_mismatches': batch_mismatches})
    logger.info("q_fast vs q_naive: %d mismatches over %d vectors" % (mismatches, trials))
    return report

def check_oracles(trials, seed=0, det_trials=None, det_tol=1e-10):
    """
    Cross-check the independent oracles.

    *   :func:`dist_sym_1d` against :func:`dist_sym_bruteforce` for exact
        equality on ``trials`` pairs with ``n <= 7``.
    *   :func:`det_label` (LU) against :func:`det_cofactor` on ``det_trials``
        uniform matrices with ``n <= 5`` (default ``trials // 10``), within
        ``det_tol`` relative, plus a rounding allowance proportional to the
        Hadamard bound of the matrix for nearly singular draws.
    """
    if trials < 1:
        raise ValueError("`trials` must be a positive integer, not %d" % trials)
    if det_trials is None:
        det_trials = max(1, trials // 10)
    rng = numpy.random.default_rng(seed)

    dist_mismatches = 0
    for t in range(trials):
        n = int(rng.integers(1, 8))
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        if t % 3 == 2:
            y[:n // 2] = x[:n // 2]
        dist_mismatches += dist_sym_1d(x, y) != dist_sym_bruteforce(x, y)

    det_mismatches = 0
    eps = numpy.finfo('f8').eps
    for t in range(det_trials):
        n = int(rng.integers(1, 6))
        A = rng.uniform(0.0, 1.1, size=(n, n))
        lu, cof = det_label(A), det_cofactor(A)
        hadamard = numpy.prod(numpy.linalg.norm(A, axis=1))
        det_mismatches += abs(lu - cof) > det_tol * max(abs(lu), abs(cof)) + 64 * eps * hadamard

    report = ProbeReport('oracles', trials + det_trials, int(dist_mismatches + det_mismatches),
                         attrs={'seed': seed, 'dist_trials': trials, 'det_trials': det_trials, 'det_tol': det_tol},
                         counters={'dist_mismatches': int(dist_mismatches), 'det_mismatches': int(det_mismatches)})
    logger.info("oracles: %d distance mismatches over %d pairs, %d determinant mismatches over %d matrices"
                % (dist_mismatches, trials, det_mismatches, det_trials))
    return report

_TINY_ARCH = {
    'bilipschitz': {'hidden': (5, 4)},
    'vandermonde': {'K': 4, 'phi_sizes': (4, 3), 'rho_hidden': (4,)},
    'mlp': {'hidden': (5, 4)},
}

def gradient_error(model, X, weights, step=1e-5):
    """
    The norm-wise relative difference between the reverse-mode gradient of
    ``Σ weights * model(X)`` and its central finite-difference estimate.
    """
    F = model.features(X)
    _, cache = model.forward_features(X, F)
    analytic = numpy.concatenate([g.ravel() for g in model.backward(cache, weights)])

    def objective():
        pred, _ = model.forward_features(X, F)
        return float((weights * pred).sum())

    numeric = []
    for p in model.params:
        flat = p.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = objective()
            flat[i] = orig - step
            down = objective()
            flat[i] = orig
            numeric.append((up - down) / (2 * step))
    numeric = numpy.array(numeric)

    scale = max(numpy.linalg.norm(analytic), numpy.linalg.norm(numeric), 1e-300)
    return float(numpy.linalg.norm(analytic - numeric) / scale)

def check_gradients(kind, trials=100, seed=0, tol=1e-5, n=3, d=2, batch=3):
    """
    Compare reverse-mode gradients with central finite differences (step
    ``1e-5``) on ``trials`` random tiny instances of the ansatz ``kind``.

    The networks use ``tanh`` so that no instance sits on an activation kink.
    """
    from antisymkit.neural.ansatz import build_model

    if trials < 1:
        raise ValueError("`trials` must be a positive integer, not %d" % trials)
    rng = numpy.random.default_rng(seed)
    errors = []
    for t in range(trials):
        model = build_model(kind, n, d, seed=seed + t, activation='tanh', **_TINY_ARCH[kind])
        for p in model.params:
            p += 0.1 * rng.standard_normal(p.shape)
        X = rng.uniform(0.0, 1.1, size=(batch, n, d))
        w = rng.standard_normal(batch)
        errors.append(gradient_error(model, X, w))

    errors = numpy.array(errors)
    report = ProbeReport('gradients_%s' % kind, trials, int((errors > tol).sum()),
                         attrs={'kind': kind, 'seed': seed, 'tol': tol, 'n': n, 'd': d,
                                'max_rel_error': float(errors.max())})
    logger.info("%s gradients: max relative error %.3e over %d instances" % (kind, errors.max(), trials))
    return report

def check_antisymmetry(model, trials=1000, seed=0, X=None, tol=1e-12):
    """
    The largest relative asymmetry ``|f(σx) - sign(σ) f(x)| / |f(x)|`` of
    ``model`` over random permutations ``σ``.

    Parameters
    ----------
    model : AnsatzModel
        the model
    trials : int
        the number of ``(σ, x)`` cases
    seed : int
        the random seed
    X : array_like, optional
        clouds to draw ``x`` from in order; default uniform on ``[0, 1.1)``
    tol : float
        the asymmetry allowed; the plain MLP is reported but never counted
        as a violation
    """
    if trials < 1:
        raise ValueError("`trials` must be a positive integer, not %d" % trials)
    rng = numpy.random.default_rng(seed)
    if X is None:
        X = rng.uniform(0.0, 1.1, size=(trials, model.n, model.d))
    else:
        X = model._check_batch(X)
        X = X[numpy.arange(trials) % len(X)]

    perms = [random_permutation(model.n, rng) for _ in range(trials)]
    Xp = numpy.stack([x[p.mapping] for x, p in zip(X, perms)])
    signs = numpy.array([p.sign for p in perms], dtype='f8')

    f = model.forward(X)
    fp = model.forward(Xp)
    asym = numpy.abs(fp - signs * f) / numpy.maximum(numpy.abs(f), numpy.finfo('f8').tiny)
    worst = float(asym.max())

    counted = model.kind != 'mlp'
    violations = int((asym > tol).sum()) if counted else 0
    report = ProbeReport('antisymmetry_%s' % model.kind, trials, violations,
                         attrs={'kind': model.kind, 'seed': seed, 'tol': tol,
                                'max_rel_asymmetry': worst, 'asserted': counted})
    logger.info("%s antisymmetry: max relative asymmetry %.3e over %d cases" % (model.kind, worst, trials))
    return report
