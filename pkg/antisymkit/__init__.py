from .version import __version__

from mpi4py import MPI

import dask
import os

_global_options = {}
_global_options['threads'] = os.cpu_count() or 1
_global_options['lane_chunk_size'] = 64
_global_options['bruteforce_chunk_size'] = 2 ** 22
_global_options['feature_cache_dir'] = None
_global_options['global_cache_size'] = 1e8 # 100 MB

from contextlib import contextmanager
import functools
import logging
import time

class CurrentMPIComm(object):
    """
    The communicator that collective routines use when they are not
    handed one explicitly. It starts as ``MPI.COMM_WORLD``; ``enter``
    swaps it for the duration of a block.
    """
    _stack = [MPI.COMM_WORLD]
    logger = logging.getLogger("CurrentMPIComm")

    @staticmethod
    def enable(func):
        """
        Decorate a collective routine so that ``comm=None`` (or no
        ``comm`` at all) means the current communicator.
        """
        @functools.wraps(func)
        def wrapped(*args, **kwargs):
            if kwargs.get('comm') is None:
                kwargs['comm'] = CurrentMPIComm.get()
            return func(*args, **kwargs)
        return wrapped

    @classmethod
    @contextmanager
    def enter(cls, comm):
        """
        Make ``comm`` the current communicator inside a ``with`` block::

            with CurrentMPIComm.enter(MPI.COMM_SELF):
                report = verify_theorem_1d(4, trials=1000)
        """
        cls._stack.append(comm)
        if comm.rank == 0:
            cls.logger.debug("using a communicator of %d rank(s)" % comm.size)
        try:
            yield comm
        finally:
            cls._stack.pop()

    @classmethod
    def get(cls):
        return cls._stack[-1]

import dask.cache
class GlobalCache(dask.cache.Cache):
    """
    The process-wide in-memory store of precomputed feature arrays.

    It is not registered as a dask callback; feature arrays are put and
    looked up explicitly, under content tokens, through ``cache``.
    """
    @classmethod
    def get(cls):
        """
        The global cache; its size in bytes is the ``global_cache_size``
        option.

        Returns
        -------
        cache : :class:`dask.cache.Cache`
            the cache object; ``cache.cache`` is the underlying
            :class:`cachey.Cache`
        """
        return _global_cache

    @classmethod
    def resize(cls, nbytes):
        cache = _global_cache.cache
        cache.available_bytes = nbytes
        cache.shrink()

_global_cache = GlobalCache(_global_options['global_cache_size'])

class set_options(object):
    """
    Change entries of the global options, either for good or, used as a
    context manager, until the block exits.

    Parameters
    ----------
    threads : int
        worker lanes for chunked work (feature precomputation, training
        passes, prediction); ``1`` keeps everything on the calling thread
    lane_chunk_size : int
        rows per worker-lane task; chunk results are reduced in chunk
        order, so outputs do not depend on ``threads``
    bruteforce_chunk_size : int
        the most float64 elements the brute-force metric oracles hold
        in memory at once
    feature_cache_dir : str, None
        where precomputed feature arrays are cached on disk; ``None``
        keeps them in :class:`GlobalCache` only
    global_cache_size : float
        the size of :class:`GlobalCache` in bytes; default is 1e8
    """
    def __init__(self, **kwargs):
        unknown = sorted(set(kwargs) - set(_global_options))
        if unknown:
            raise KeyError("unknown option(s) %s; valid options are %s" % (unknown, sorted(_global_options)))
        for key in ['threads', 'lane_chunk_size']:
            if key in kwargs and int(kwargs[key]) < 1:
                raise ValueError("`%s` must be a positive integer, got %r" % (key, kwargs[key]))
        if 'global_cache_size' in kwargs and not float(kwargs['global_cache_size']) >= 0:
            raise ValueError("`global_cache_size` must be non-negative, got %r" % kwargs['global_cache_size'])

        self.old = dict(_global_options)
        _global_options.update(kwargs)
        if 'global_cache_size' in kwargs:
            GlobalCache.resize(_global_options['global_cache_size'])

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        _global_options.clear()
        _global_options.update(self.old)
        GlobalCache.resize(_global_options['global_cache_size'])

def compute_lanes(tasks):
    """
    Evaluate a list of :func:`dask.delayed` tasks in the configured number
    of worker lanes, returning the results in task order.

    With ``threads=1`` the synchronous scheduler is used, which is the
    bitwise-reference path.
    """
    threads = int(_global_options['threads'])
    if threads == 1 or len(tasks) <= 1:
        return list(dask.compute(*tasks, scheduler='synchronous'))
    return list(dask.compute(*tasks, scheduler='threads', num_workers=threads))

class _RankFormatter(logging.Formatter):
    """
    Prefix every record with the seconds since logging was set up and
    the MPI rank, e.g.::

        [ 000000.43 ]   0: 06-28 14:49  TrainingLoop    INFO     epoch 3: train_mae = 0.0412
    """
    def __init__(self):
        logging.Formatter.__init__(self, fmt='%(asctime)s %(name)-15s %(levelname)-8s %(message)s',
                                   datefmt='%m-%d %H:%M ')
        self.t0 = time.time()
        self.rank = MPI.COMM_WORLD.rank

    def format(self, record):
        prefix = '[ %09.2f ] % 3d: ' % (time.time() - self.t0, self.rank)
        return prefix + logging.Formatter.format(self, record)

_logging_handler = None
_levels = {'debug': logging.DEBUG, 'info': logging.INFO, 'warning': logging.WARNING}

def setup_logging(log_level="info"):
    """
    Send log records to stderr through a single root handler.

    Calling it again only resets the clock and the level.

    Parameters
    ----------
    log_level : 'debug', 'info', 'warning'
        records below this level are dropped
    """
    if log_level not in _levels:
        raise ValueError("log level should be one of %s, got %r" % (sorted(_levels), log_level))

    global _logging_handler
    root = logging.getLogger()
    if _logging_handler is None:
        _logging_handler = logging.StreamHandler()
        root.addHandler(_logging_handler)
    _logging_handler.setFormatter(_RankFormatter())
    root.setLevel(_levels[log_level])
