from antisymkit import setup_logging, set_options
from antisymkit.features import *
from antisymkit.symmetry import random_permutation, apply_perm, Permutation, dist_plus_bruteforce, l1_norm_diff
from antisymkit.io.binary import FileFormatError
from numpy.testing import assert_array_equal, assert_allclose
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
import numpy
import os
import pytest

setup_logging("debug")

def test_sort_with_perm():
    x = numpy.array([3., 1., 2., 1.])
    xs, perm, ties = sort_with_perm(x)
    assert_array_equal(xs, [1., 1., 2., 3.])
    assert_array_equal(apply_perm(x, perm), xs)
    assert ties

    # stable: equal entries keep their order
    assert_array_equal(perm.mapping, [1, 3, 2, 0])

    res = sort_with_perm([2., 0., 1.])
    assert not res.has_ties
    assert res.perm.sign == perm_sign_of([1, 2, 0])
    assert 'has_ties=False' in repr(res)

    with pytest.raises(ValueError):
        sort_with_perm([1., numpy.nan])
    with pytest.raises(ValueError):
        sort_with_perm([[1., 2.], [3., 4.]])

def perm_sign_of(mapping):
    return Permutation(mapping).sign

def test_q_examples():
    assert q_fast([0., 1.]) == 1.
    assert q_fast([1., 0.]) == -1.
    assert q_fast([0., 3., 1.]) == -1.
    assert q_fast([0., 1., 1.]) == 0.
    assert q_naive([0., 3., 1.]) == -1.

    with pytest.raises(ValueError):
        q_fast([1.])
    with pytest.raises(ValueError):
        q_naive([])

def test_q_fast_many():
    rng = numpy.random.default_rng(3)
    X = rng.standard_normal((50, 9))
    X[::5, 3] = X[::5, 7]
    assert_array_equal(q_fast_many(X), [q_naive(x) for x in X])

    with pytest.raises(ValueError):
        q_fast_many(numpy.zeros((4, 1)))

@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=2, max_value=64).flatmap(
        lambda n: arrays(numpy.float64, (n,), elements=st.floats(-1e6, 1e6, allow_nan=False))))
def test_q_fast_equals_naive(x):
    assert q_fast(x) == q_naive(x)

@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=2, max_value=32).flatmap(
        lambda n: arrays(numpy.float64, (n,), elements=st.integers(-1000, 1000).map(float))),
       st.integers(-10 ** 6, 10 ** 6))
def test_q_translation_invariance(x, c):
    # integer-valued entries keep every shift and gap exact
    assert q_fast(x + c) == q_fast(x)
    assert q_fast(x + c) == q_naive(x + c)

def test_q_translation_invariance_floats():
    rng = numpy.random.default_rng(11)
    for i in range(50):
        x = rng.standard_normal(rng.integers(2, 10))
        c = rng.uniform(-5, 5)
        # gaps move by a few ulps of the shifted entries
        assert_allclose(q_fast(x + c), q_fast(x), rtol=0, atol=1e-13)

def test_feature_1d():
    # F(x) = (sort(x), Q(x))
    assert_array_equal(feature_1d([0., 1.]), [0., 1., 1.])
    assert_array_equal(feature_1d([1., 0.]), [0., 1., -1.])

    rng = numpy.random.default_rng(0)
    X = rng.standard_normal((30, 6))
    assert_array_equal(feature_1d_many(X), [feature_1d(x) for x in X])

def test_feature_1d_even_invariance():
    rng = numpy.random.default_rng(4)
    for i in range(50):
        x = rng.standard_normal(6)
        even = random_permutation(6, rng, parity=1)
        odd = random_permutation(6, rng, parity=-1)

        assert_array_equal(feature_1d(apply_perm(x, even)), feature_1d(x))
        F = feature_1d(apply_perm(x, odd))
        assert_array_equal(F[:-1], feature_1d(x)[:-1])
        assert F[-1] == -feature_1d(x)[-1]

def test_feature_1d_bilipschitz():
    rng = numpy.random.default_rng(8)
    for i in range(200):
        n = 2 + i % 5
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        dp = dist_plus_bruteforce(x, y)
        dF = l1_norm_diff(feature_1d(x), feature_1d(y))
        assert dp <= dF * (1 + 1e-12)
        assert dF <= 2 * dp * (1 + 1e-12)

def test_project():
    x = numpy.arange(6.).reshape(3, 2)
    assert_array_equal(project(x, [1., 0.]), [0., 2., 4.])
    assert project(x, numpy.ones((4, 2))).shape == (3, 4)
    assert project(numpy.ones((5, 3, 2)), numpy.ones((4, 2))).shape == (5, 3, 4)

    with pytest.raises(ValueError):
        project(x, [1., 0., 0.])

def test_psi_matches_features():
    e = sample_ensemble(4, 3, seed=9)
    assert e.m == 2 * 4 * 3 + 1

    x = numpy.random.default_rng(1).standard_normal((4, 3))
    Psi = psi_features(x, e)
    assert Psi.shape == (e.m,)
    assert_allclose(Psi, [psi(x, a, b) for a, b in zip(e.a, e.b)], rtol=1e-14, atol=1e-14)

    with pytest.raises(ValueError):
        psi(x, e.a[0], e.b[0][:-1])
    with pytest.raises(ValueError):
        psi_features(x[:, :2], e)

def test_psi_invariance():
    rng = numpy.random.default_rng(12)
    e = sample_ensemble(5, 2, seed=0)
    for i in range(50):
        x = rng.standard_normal((5, 2))
        sigma = random_permutation(5, rng, parity=1)

        # bitwise
        assert_array_equal(psi_features(apply_perm(x, sigma), e), psi_features(x, e))

def test_psi_homogeneous():
    rng = numpy.random.default_rng(13)
    e = sample_ensemble(4, 2, seed=3)
    x = rng.standard_normal((4, 2))
    for t in [0.5, 2.0, 7.0]:
        assert_allclose(psi_features(t * x, e), t * psi_features(x, e), rtol=1e-12, atol=1e-12)

def test_psi_batch():
    rng = numpy.random.default_rng(14)
    e = sample_ensemble(3, 2, m=7, seed=2)
    X = rng.standard_normal((20, 3, 2))
    expected = numpy.array([psi_features(x, e) for x in X])

    assert_array_equal(psi_features_batch(X, e), expected)
    with set_options(bruteforce_chunk_size=10):
        assert_array_equal(psi_features_batch(X, e), expected)

    with pytest.raises(ValueError):
        psi_features_batch(X[:, :2], e)

def test_sample_ensemble():
    e1 = sample_ensemble(3, 2, seed=5)
    e2 = sample_ensemble(3, 2, seed=5)
    assert_array_equal(e1.a, e2.a)
    assert_array_equal(e1.b, e2.b)
    assert e1.b.shape == (13, 4)

    with pytest.raises(ValueError):
        sample_ensemble(1, 2)
    with pytest.raises(ValueError):
        sample_ensemble(3, 2, m=0)
    with pytest.raises(ValueError):
        ProjectionEnsemble(3, 2, numpy.zeros((2, 2)), numpy.ones((2, 4)), 0)

def test_ensemble_save_load(tmpdir):
    e = sample_ensemble(4, 2, seed=21)
    path = os.path.join(str(tmpdir), 'ensemble.bin')
    e.save(path)

    e2 = ProjectionEnsemble.load(path)
    assert (e2.n, e2.d, e2.m, e2.seed) == (4, 2, e.m, 21)
    assert_array_equal(e2.a, e.a)
    assert_array_equal(e2.b, e.b)

    # a bank file is rejected by its magic
    bank = sample_vandermonde_bank(4, 2, seed=1)
    bank_path = os.path.join(str(tmpdir), 'bank.bin')
    bank.save(bank_path)
    with pytest.raises(FileFormatError):
        ProjectionEnsemble.load(bank_path)
    assert_array_equal(VandermondeBank.load(bank_path).y, bank.y)

def test_ensemble_corrupt(tmpdir):
    e = sample_ensemble(3, 1, seed=0)
    path = os.path.join(str(tmpdir), 'ensemble.bin')
    e.save(path)

    with open(path, 'r+b') as ff:
        ff.seek(-3, os.SEEK_END)
        ff.write(b'\x00\x01\x02')
    with pytest.raises(FileFormatError):
        ProjectionEnsemble.load(path)

def test_vandermonde_feature():
    x = numpy.array([[0.], [1.], [3.]])
    # (0 - 1)(0 - 3)(1 - 3)
    assert vandermonde_feature(x, [1.]) == -6.
    sign, logabs = vandermonde_feature(x, [1.], log=True)
    assert sign == -1.
    assert_allclose(logabs, numpy.log(6.))

    # coincident projections give zero
    assert vandermonde_feature([[0.], [1.], [1.]], [1.]) == 0.
    assert vandermonde_feature([[0.], [1.], [1.]], [1.], log=True) == (0., -numpy.inf)

    with pytest.raises(ValueError):
        vandermonde_feature([[1.]], [1.])

def test_vandermonde_antisymmetry():
    rng = numpy.random.default_rng(6)
    bank = sample_vandermonde_bank(5, 2, seed=4)
    X = rng.standard_normal((10, 5, 2))
    f = vandermonde_features(X, bank)
    s, l = vandermonde_log_features(X, bank)

    for i in range(10):
        sigma = random_permutation(5, rng)
        Xp = X[:, sigma.mapping]
        sp, lp = vandermonde_log_features(Xp, bank)
        assert_array_equal(lp, l)
        assert_array_equal(sp, sigma.sign * s)
        assert_allclose(vandermonde_features(Xp, bank), sigma.sign * f, rtol=1e-13)

    assert_allclose(f, s * numpy.exp(l), rtol=1e-12)

def test_vandermonde_scaling():
    rng = numpy.random.default_rng(7)
    x = rng.standard_normal((4, 3))
    y = sample_vandermonde_bank(4, 3, seed=0).y[0]
    f = vandermonde_feature(x, y)
    assert_allclose(vandermonde_feature(2 * x, y), 2 ** 6 * f, rtol=1e-13)

def test_vandermonde_overflow():
    bank = sample_vandermonde_bank(20, 1, K=2, seed=0)
    X = numpy.arange(20.)[None, :, None] * 1e3
    with pytest.raises(FloatingPointError):
        vandermonde_features(X, bank)

    # the log domain has no trouble
    sign, logabs = vandermonde_log_features(X, bank)
    assert numpy.isfinite(logabs).all()

def test_sample_vandermonde_bank():
    bank = sample_vandermonde_bank(3, 4, seed=1)
    assert bank.K == 3 * 4 + 1
    assert_allclose(numpy.linalg.norm(bank.y, axis=1), 1., rtol=1e-14)

    with pytest.raises(ValueError):
        VandermondeBank(3, 2, numpy.ones((2, 2)), 0)
    with pytest.raises(ValueError):
        sample_vandermonde_bank(1, 2)
