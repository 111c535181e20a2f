from runtests.mpi import MPITest
from antisymkit import setup_logging
from antisymkit.data import *
from antisymkit.data import det_label_many
from antisymkit.io.binary import FileFormatError
from antisymkit.io.csv import read_table
from antisymkit.symmetry import random_permutation
from numpy.testing import assert_array_equal, assert_allclose
from mpi4py import MPI
import numpy
import os
import tempfile
import pytest

setup_logging("debug")

def test_det_label():
    assert det_label([[2., 0.], [0., 3.]]) == 6.
    assert det_label([[0., 1.], [1., 0.]]) == -1.
    assert det_label(numpy.eye(5)) == 1.

    # singular
    assert det_label([[1., 2.], [2., 4.]]) == 0.
    assert det_label(numpy.zeros((3, 3))) == 0.

    rng = numpy.random.default_rng(0)
    A = rng.uniform(0, 1.1, size=(20, 6, 6))
    assert_allclose(det_label_many(A), numpy.linalg.det(A), rtol=1e-10, atol=1e-12)

    with pytest.raises(ValueError):
        det_label(numpy.ones((2, 3)))
    with pytest.raises(ValueError):
        det_label([[1., numpy.nan], [0., 1.]])

def test_det_cofactor():
    rng = numpy.random.default_rng(1)
    for n in range(1, 6):
        A = rng.uniform(0, 1.1, size=(n, n))
        assert_allclose(det_cofactor(A), det_label(A), rtol=1e-10, atol=1e-13)

    with pytest.raises(ValueError):
        det_cofactor(numpy.eye(9))

def test_det_antisymmetry():
    rng = numpy.random.default_rng(2)
    A = rng.uniform(0, 1.1, size=(5, 5))
    d = det_label(A)
    for i in range(20):
        sigma = random_permutation(5, rng)
        assert_allclose(det_label(A[sigma.mapping]), sigma.sign * d, rtol=1e-12)

@MPITest([1, 4])
def test_gen_dataset(comm):
    ds = gen_dataset(3, (20, 5, 7), seed=7, comm=comm)
    assert len(ds) == 32
    assert ds.samples.shape == (32, 3, 3)
    assert ds.counts == (20, 5, 7)
    assert ds.gen == {'seed': 7, 'low': 0.0, 'high': 1.1}

    # entries in [0, 1.1)
    assert (ds.samples >= 0).all() and (ds.samples < 1.1).all()
    assert_array_equal(ds.labels, det_label_many(ds.samples))

    # independent of the number of ranks
    ds1 = gen_dataset(3, (20, 5, 7), seed=7, comm=MPI.COMM_SELF)
    assert_array_equal(ds.samples, ds1.samples)
    assert_array_equal(ds.labels, ds1.labels)
    assert ds.checksum == ds1.checksum

    # another seed, another dataset
    ds2 = gen_dataset(3, (20, 5, 7), seed=8, comm=comm)
    assert ds2.checksum != ds.checksum

@MPITest([1])
def test_gen_dataset_bad(comm):
    with pytest.raises(ValueError):
        gen_dataset(1, (10, 1, 1), seed=0, comm=comm)
    with pytest.raises(ValueError):
        gen_dataset(3, (10, 0, 1), seed=0, comm=comm)
    with pytest.raises(ValueError):
        gen_dataset(3, (10, 1), seed=0, comm=comm)

@MPITest([1])
def test_splits(comm):
    ds = gen_dataset(2, (6, 3, 4), seed=1, comm=comm)
    X, y = ds.split('val')
    assert ds.bounds('val') == (6, 9)
    assert_array_equal(X, ds.samples[6:9])
    assert_array_equal(y, ds.labels[6:9])
    assert len(ds.split('test')[1]) == 4

    # read-only
    with pytest.raises(ValueError):
        X[0, 0, 0] = 1.

    with pytest.raises(ValueError):
        ds.split('validation')

@MPITest([1])
def test_save_load(comm):
    ds = gen_dataset(4, (10, 3, 2), seed=11, comm=comm)

    tmpfile = tempfile.mktemp()
    save_dataset(ds, tmpfile)
    ds2 = load_dataset(tmpfile)

    assert ds2.n == 4
    assert ds2.counts == ds.counts
    assert ds2.attrs == ds.attrs
    assert_array_equal(ds2.samples, ds.samples)
    assert_array_equal(ds2.labels, ds.labels)

    # writing twice gives identical bytes
    tmpfile2 = tempfile.mktemp()
    save_dataset(ds2, tmpfile2)
    with open(tmpfile, 'rb') as f1, open(tmpfile2, 'rb') as f2:
        assert f1.read() == f2.read()

    # truncation is detected
    with open(tmpfile, 'r+b') as ff:
        ff.truncate(os.path.getsize(tmpfile) - 8)
    with pytest.raises(FileFormatError):
        load_dataset(tmpfile)

    os.remove(tmpfile)
    os.remove(tmpfile2)

@MPITest([1])
def test_export_csv(comm):
    ds = gen_dataset(2, (3, 1, 1), seed=3, comm=comm)

    tmpfile = tempfile.mktemp()
    export_csv(ds, tmpfile)
    df = read_table(tmpfile)

    assert list(df.columns) == ['a_0_0', 'a_0_1', 'a_1_0', 'a_1_1', 'label']
    assert len(df) == 5
    assert_array_equal(df['a_1_0'], ds.samples[:, 1, 0])
    assert_array_equal(df['label'], ds.labels)

    os.remove(tmpfile)

def test_dataset_bad_shapes():
    with pytest.raises(ValueError):
        Dataset(2, (1, 1, 1), numpy.zeros((3, 2, 3)), numpy.zeros(3), seed=0)
    with pytest.raises(ValueError):
        Dataset(2, (1, 1, 1), numpy.zeros((3, 2, 2)), numpy.zeros(2), seed=0)
    with pytest.raises(ValueError):
        Dataset(2, (1, 2), numpy.zeros((3, 2, 2)), numpy.zeros(3), seed=0)
