from runtests.mpi import MPITest
from antisymkit import setup_logging
from antisymkit.utils import local_range, GatherArray, JSONEncoder, JSONDecoder, timer
from antisymkit.symmetry import Permutation
from numpy.testing import assert_array_equal
import numpy
import json
import os
import tempfile
import pytest

setup_logging("debug")

@MPITest([1, 4])
def test_local_range(comm):
    start, stop = local_range(10, comm)
    ranges = comm.allgather((start, stop))

    # contiguous, in rank order, covering everything
    assert ranges[0][0] == 0
    assert ranges[-1][1] == 10
    for (s1, e1), (s2, e2) in zip(ranges[:-1], ranges[1:]):
        assert e1 == s2

    # fewer items than ranks
    start, stop = local_range(2, comm)
    assert sum(comm.allgather(stop - start)) == 2

@MPITest([1])
def test_json(comm):
    data = {'a': numpy.float64(10.0), 'b': 10, 'i': numpy.int32(3), 'flag': numpy.bool_(True),
            'arr': numpy.arange(6.).reshape(2, 3), 'perm': Permutation([1, 2, 0]),
            'nested': {'x': numpy.ones(2, dtype='i4')}}

    tmpfile = tempfile.mktemp()
    with open(tmpfile, 'w') as ff:
        json.dump(data, ff, cls=JSONEncoder)

    with open(tmpfile, 'r') as ff:
        data2 = json.load(ff, cls=JSONDecoder)

    assert data2['a'] == 10.0
    assert data2['b'] == 10
    assert data2['i'] == 3
    assert data2['flag'] is True
    assert_array_equal(data2['arr'], data['arr'])
    assert data2['arr'].shape == (2, 3)
    assert data2['nested']['x'].dtype == numpy.dtype('i4')
    assert data2['perm'] == data['perm']
    assert data2['perm'].sign == 1

    os.remove(tmpfile)

@MPITest([2])
def test_gather_array(comm):

    # object arrays must fail
    data1a = numpy.ones(10, dtype=[('test', 'f8')])
    with pytest.raises(ValueError):
        GatherArray(data1a, comm, root=0)

    # not an array
    with pytest.raises(ValueError):
        GatherArray([1, 2], comm, root=0)

    data = numpy.arange(3 * (comm.rank + 1) * 4, dtype='f8').reshape(-1, 4) + 100 * comm.rank
    full = GatherArray(data, comm, root=0)
    expected = numpy.concatenate(comm.allgather(data), axis=0)
    if comm.rank == 0:
        assert_array_equal(full, expected)
    else:
        assert full is None

    # to everyone
    full = GatherArray(data, comm, root=Ellipsis)
    assert_array_equal(full, expected)

@MPITest([2])
def test_gather_array_mismatch(comm):
    data = numpy.ones((3, comm.rank + 1))
    with pytest.raises(ValueError):
        GatherArray(data, comm, root=0)

def test_timer():
    assert timer(0, 3723.5) == "01:02:03.50"
    assert timer(10, 10) == "00:00:00.00"
