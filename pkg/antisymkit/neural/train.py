import numpy
import os
import time
import logging
from dask import delayed
from dask.base import tokenize

from antisymkit import _global_options, compute_lanes, GlobalCache
from antisymkit.io.csv import write_table
from antisymkit.utils import timer
from .optim import AdamState, adam_step, ReduceLROnPlateau

#: labels with a smaller magnitude are left out of the relative error
MARE_LABEL_FLOOR = 1e-12

class DivergenceError(RuntimeError):
    """
    Raised when training produces a non-finite loss.

    Attributes
    ----------
    epoch : int
        the epoch in which the loss diverged
    losses : list of dict
        the last finite epoch records
    """
    def __init__(self, epoch, losses, reason=''):
        self.epoch = epoch
        self.losses = list(losses)
        last = self.losses[-1] if self.losses else None
        msg = "training diverged in epoch %d" % epoch
        if reason:
            msg += " (%s)" % reason
        if last is not None:
            msg += "; last finite epoch %d had train_mae = %.6e, val_mae = %.6e" % (
                    last['epoch'], last['train_mae'], last['val_mae'])
        RuntimeError.__init__(self, msg)

class TrainConfig(object):
    """
    The optimization settings, shared by every ansatz.

    Parameters
    ----------
    epochs : int
        the number of passes over the training split
    batch_size : int
        the minibatch size
    lr : float
        the initial Adam learning rate
    factor, patience, min_lr :
        the :class:`~antisymkit.neural.optim.ReduceLROnPlateau` settings
    seed : int
        the seed of the shuffling stream
    """
    loss = 'l1'

    def __init__(self, epochs=100, batch_size=256, lr=1e-3, factor=0.5, patience=5, min_lr=1e-5, seed=0):
        if epochs < 1:
            raise ValueError("`epochs` must be a positive integer, not %d" % epochs)
        if batch_size < 1:
            raise ValueError("`batch_size` must be a positive integer, not %d" % batch_size)
        if not lr > 0:
            raise ValueError("`lr` must be positive, not %g" % lr)
        if not 0 < factor < 1:
            raise ValueError("`factor` must be in (0, 1), not %g" % factor)
        if patience < 0 or min_lr < 0:
            raise ValueError("`patience` and `min_lr` must be non-negative")

        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.lr = float(lr)
        self.factor = float(factor)
        self.patience = int(patience)
        self.min_lr = float(min_lr)
        self.seed = int(seed)

    @property
    def attrs(self):
        return {'epochs': self.epochs, 'batch_size': self.batch_size, 'lr': self.lr,
                'factor': self.factor, 'patience': self.patience, 'min_lr': self.min_lr,
                'seed': self.seed, 'loss': self.loss}

    def __repr__(self):
        return "TrainConfig(%s)" % ", ".join("%s=%r" % kv for kv in sorted(self.attrs.items()))

class TrainingLog(object):
    """
    The per-epoch records of a training run.
    """
    columns = ['epoch', 'train_mae', 'val_mae', 'lr', 'wall_seconds']

    def __init__(self):
        self.records = []

    def append(self, **record):
        self.records.append({k: record[k] for k in self.columns})

    def __len__(self):
        return len(self.records)

    def __getitem__(self, col):
        return numpy.array([r[col] for r in self.records])

    def to_csv(self, path):
        """ Write the records as CSV with a header row. """
        write_table(path, {col: self[col] for col in self.columns}, index=self.columns)

def _lane_slices(size):
    chunk = int(_global_options['lane_chunk_size'])
    return [slice(start, min(start + chunk, size)) for start in range(0, size, chunk)]

class FeatureCache(object):
    """
    Precompute the frozen features of dataset splits in worker lanes and
    keep them in the process-wide :class:`~antisymkit.GlobalCache`, and
    on disk when ``cache_dir`` is set.

    Keys are :func:`dask.base.tokenize` tokens of the model tag, the frozen
    parameters, the dataset checksum and the split name, so every cache
    of the same model and dataset shares its entries.

    Parameters
    ----------
    model : AnsatzModel
        the model whose :meth:`features` are cached
    cache_dir : str, optional
        the directory of the cache files; default is the
        ``feature_cache_dir`` option
    """
    logger = logging.getLogger('FeatureCache')

    def __init__(self, model, cache_dir=None):
        self.model = model
        self.cache_dir = cache_dir if cache_dir is not None else _global_options['feature_cache_dir']

    @property
    def memory(self):
        """ The underlying :class:`cachey.Cache`. """
        return GlobalCache.get().cache

    def key(self, data, split):
        model = self.model
        blocks = [(name, numpy.asarray(a, dtype='<f8')) for name, a in model.frozen_blocks()]
        return tokenize('features', model.kind, model.n, model.d, model.frozen_seed,
                        blocks, int(data.checksum), split)

    def compute(self, X):
        """ The features of ``X``, computed chunk by chunk in worker lanes. """
        tasks = [delayed(self.model.features, pure=False)(X[s]) for s in _lane_slices(len(X))]
        if not tasks:
            return self.model.features(X)
        return numpy.concatenate(compute_lanes(tasks), axis=0)

    def _remember(self, key, F, cost):
        # shared by every caller
        F.setflags(write=False)
        if F.nbytes > 0:
            self.memory.put(key, F, cost=cost)

    def get(self, data, split):
        """ The features of the split ``split`` of ``data``. """
        key = self.key(data, split)
        F = self.memory.get(key)
        if F is not None:
            self.logger.debug("reusing %s features of shape %s" % (split, str(F.shape)))
            return F

        path = None
        if self.cache_dir is not None:
            path = os.path.join(self.cache_dir, 'features-%s.npy' % key)
            if os.path.exists(path):
                t0 = time.time()
                F = numpy.load(path)
                self.logger.info("loaded %s features of shape %s from '%s'" % (split, str(F.shape), path))
                self._remember(key, F, time.time() - t0)
                return F

        X, _ = data.split(split)
        t0 = time.time()
        F = self.compute(X)
        elapsed = time.time() - t0
        self.logger.info("computed %s features of shape %s in %s" % (split, str(F.shape), timer(t0, t0 + elapsed)))

        if path is not None:
            os.makedirs(self.cache_dir, exist_ok=True)
            numpy.save(path, F)
        self._remember(key, F, elapsed)
        return F

def _chunk_loss_and_grads(model, X, F, y):
    pred, cache = model.forward_features(X, F)
    resid = pred - y
    return numpy.abs(resid).sum(), model.backward(cache, numpy.sign(resid))

def _chunk_predict(model, X, F):
    pred, _ = model.forward_features(X, F)
    return pred

def predict(model, X, F=None):
    """
    Predictions for a ``(B, n, d)`` stack, evaluated chunk by chunk in
    worker lanes.
    """
    X = model._check_batch(X)
    if F is None:
        F = FeatureCache(model).compute(X)
    tasks = [delayed(_chunk_predict, pure=False)(model, X[s], F[s]) for s in _lane_slices(len(X))]
    if not tasks:
        return numpy.zeros(0)
    return numpy.concatenate(compute_lanes(tasks))

def batch_loss_and_grads(model, X, F, y):
    """
    The mean absolute error of a minibatch and its gradient with respect to
    ``model.params``.

    Chunks run in worker lanes; their gradients are summed in chunk order.
    """
    tasks = [delayed(_chunk_loss_and_grads, pure=False)(model, X[s], F[s], y[s])
             for s in _lane_slices(len(y))]
    results = compute_lanes(tasks)
    total = 0.0
    grads = [numpy.zeros_like(p) for p in model.params]
    for loss, chunk_grads in results:
        total += loss
        for g, cg in zip(grads, chunk_grads):
            g += cg
    B = len(y)
    return total / B, [g / B for g in grads]

def _error_stats(pred, labels):
    err = numpy.abs(pred - labels)
    keep = numpy.abs(labels) >= MARE_LABEL_FLOOR
    mae = float(err.mean())
    mare = float((err[keep] / numpy.abs(labels[keep])).mean()) if keep.any() else float('nan')
    return {'mae': mae, 'mare': mare, 'excluded': int((~keep).sum()), 'count': len(labels)}

def evaluate(model, data, split, cache=None):
    """
    The mean absolute error and mean absolute relative error of ``model``
    on one split.

    Samples with ``|label| < 1e-12`` do not enter the relative error; their
    number is reported as ``excluded``.

    Returns
    -------
    dict :
        ``mae``, ``mare``, ``excluded`` and ``count``
    """
    X, labels = data.split(split)
    if len(labels) == 0:
        raise ValueError("cannot evaluate on the empty '%s' split" % split)
    if cache is None:
        cache = FeatureCache(model)
    pred = predict(model, X, cache.get(data, split))
    return _error_stats(pred, labels)

class TrainingLoop(object):
    """
    Minibatch Adam on the mean absolute error, with the learning rate
    reduced on validation plateaus.

    Only the networks of the model are trained; the frozen feature
    parameters are read once through a :class:`FeatureCache`.

    Parameters
    ----------
    model : AnsatzModel
        the model, trained in place
    data : Dataset
        the dataset; its ``train`` and ``val`` splits are used
    cfg : TrainConfig
        the optimization settings
    """
    logger = logging.getLogger('TrainingLoop')

    def __init__(self, model, data, cfg):
        if model.n != data.n or model.d != data.n:
            raise ValueError("model expects (%d, %d) point clouds, dataset holds %d x %d matrices"
                             % (model.n, model.d, data.n, data.n))
        for split in ('train', 'val'):
            if len(data.split(split)[1]) == 0:
                raise ValueError("the '%s' split of the dataset is empty" % split)

        self.model = model
        self.data = data
        self.cfg = cfg
        self.cache = FeatureCache(model)
        self.log = TrainingLog()

    def run(self):
        model, cfg = self.model, self.cfg
        Xtr, ytr = self.data.split('train')
        Xva, yva = self.data.split('val')
        try:
            Ftr = self.cache.get(self.data, 'train')
            Fva = self.cache.get(self.data, 'val')
        except FloatingPointError as e:
            # epoch 0 is the feature precomputation
            raise DivergenceError(0, [], "feature precomputation: %s" % e)

        state = AdamState(model.params)
        scheduler = ReduceLROnPlateau(cfg.lr, factor=cfg.factor, patience=cfg.patience, min_lr=cfg.min_lr)
        rng = numpy.random.default_rng(cfg.seed)
        lr = cfg.lr

        self.logger.info("training %r on %d samples with %r" % (model, len(ytr), cfg))
        t0 = time.time()
        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(len(ytr))
            total = 0.0
            try:
                for start in range(0, len(order), cfg.batch_size):
                    idx = order[start:start + cfg.batch_size]
                    loss, grads = batch_loss_and_grads(model, Xtr[idx], Ftr[idx], ytr[idx])
                    if not numpy.isfinite(loss):
                        raise FloatingPointError("non-finite training loss")
                    adam_step(state, grads, lr)
                    total += loss * len(idx)
                    self.logger.debug("epoch %d, batch at %d: loss = %.6e" % (epoch, start, loss))

                val_mae = float(numpy.abs(predict(model, Xva, Fva) - yva).mean())
            except FloatingPointError as e:
                raise DivergenceError(epoch, self.log.records[-3:], str(e))

            if not numpy.isfinite(val_mae):
                raise DivergenceError(epoch, self.log.records[-3:], "validation loss is %s" % val_mae)

            train_mae = total / len(ytr)
            self.log.append(epoch=epoch, train_mae=train_mae, val_mae=val_mae, lr=lr,
                            wall_seconds=time.time() - t0)
            self.logger.info("epoch %d: train_mae = %.6e, val_mae = %.6e, lr = %.3e"
                             % (epoch, train_mae, val_mae, lr))
            lr = scheduler.step(val_mae)

        self.logger.info("training finished in %s" % timer(t0, time.time()))
        return model, self.log

def train(model, data, cfg):
    """
    Train ``model`` on ``data`` with the settings ``cfg``.

    Returns
    -------
    model : AnsatzModel
        the trained model (updated in place)
    log : TrainingLog
        the per-epoch records

    Raises
    ------
    DivergenceError :
        if a loss becomes non-finite
    """
    return TrainingLoop(model, data, cfg).run()
