from antisymkit import set_options, _global_options, compute_lanes, CurrentMPIComm, GlobalCache
from dask import delayed
from runtests.mpi import MPITest
import numpy
import dask
import pytest

def test_bad_options():
    with pytest.raises(KeyError):
        set_options(no_this_option=3)
    with pytest.raises(ValueError):
        set_options(threads=0)
    with pytest.raises(ValueError):
        set_options(lane_chunk_size=0)

def test_options_context():
    old = _global_options['lane_chunk_size']
    with set_options(lane_chunk_size=3, feature_cache_dir='/tmp'):
        assert _global_options['lane_chunk_size'] == 3
        assert _global_options['feature_cache_dir'] == '/tmp'
    assert _global_options['lane_chunk_size'] == old
    assert _global_options['feature_cache_dir'] is None

def square(x):
    return x * x

def test_compute_lanes():
    tasks = [delayed(square)(i) for i in range(10)]
    expected = [i * i for i in range(10)]

    with set_options(threads=1):
        assert compute_lanes(tasks) == expected
    with set_options(threads=4):
        assert compute_lanes(tasks) == expected

    assert compute_lanes([]) == []

@MPITest([1, 4])
def test_current_comm(comm):
    with CurrentMPIComm.enter(comm):
        assert CurrentMPIComm.get() is comm

    @CurrentMPIComm.enable
    def size(comm=None):
        return comm.size

    assert size(comm=comm) == comm.size

def test_global_cache():
    cache = GlobalCache.get().cache
    cache.put('test-global-cache', numpy.ones(100), cost=1.0)
    assert 'test-global-cache' in cache.data
    assert cache.available_bytes == _global_options['global_cache_size']

    # shrinking evicts, leaving the block restores the size
    with set_options(global_cache_size=0):
        assert cache.available_bytes == 0
        assert 'test-global-cache' not in cache.data
    assert cache.available_bytes == _global_options['global_cache_size']

    with pytest.raises(ValueError):
        set_options(global_cache_size=-1)

def test_import_leaves_dask_config():
    # only compute_lanes picks a scheduler, per call
    assert dask.config.get('scheduler', None) != 'synchronous'
