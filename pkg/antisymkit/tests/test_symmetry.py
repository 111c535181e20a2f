from antisymkit import setup_logging, set_options
from antisymkit.symmetry import *
from antisymkit.symmetry import group_table, enumerate_group, MAX_ENUMERATION_N
from numpy.testing import assert_array_equal
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
import numpy
import math
import pytest

setup_logging("debug")

def test_perm_sign():
    assert perm_sign([0, 1, 2]) == 1
    assert perm_sign([1, 0, 2]) == -1
    assert perm_sign([1, 2, 0]) == 1
    assert perm_sign([]) == 1
    assert perm_sign([0]) == 1

    # the reversal of n items has n(n-1)/2 inversions
    for n in range(1, 12):
        assert perm_sign(numpy.arange(n)[::-1]) == (-1) ** (n * (n - 1) // 2)

def test_perm_sign_bad():
    with pytest.raises(ValueError):
        perm_sign([0, 0, 1])
    with pytest.raises(ValueError):
        perm_sign([0, 3, 1])
    with pytest.raises(ValueError):
        perm_sign([[0, 1]])
    with pytest.raises(TypeError):
        perm_sign([0.5, 1.0])

def test_perm_sign_many():
    rng = numpy.random.default_rng(42)
    mappings = numpy.array([rng.permutation(7) for i in range(200)])
    expected = [perm_sign(m) for m in mappings]

    assert_array_equal(perm_sign_many(mappings), expected)

    # chunking does not change the result
    with set_options(bruteforce_chunk_size=100):
        assert_array_equal(perm_sign_many(mappings), expected)

def test_permutation():
    sigma = Permutation([2, 0, 1])
    assert sigma.n == 3
    assert len(sigma) == 3
    assert sigma.sign == 1
    assert sigma.is_even

    tau = Permutation.transposition(3, 0, 2)
    assert tau.sign == -1
    assert_array_equal(tau.mapping, [2, 1, 0])

    assert Permutation.identity(4) == Permutation([0, 1, 2, 3])
    assert sigma != tau
    assert hash(sigma) == hash(Permutation([2, 0, 1]))
    assert 'sign=+1' in repr(sigma)

    # the mapping is frozen
    with pytest.raises(ValueError):
        sigma.mapping[0] = 1

    with pytest.raises(ValueError):
        Permutation.transposition(3, 1, 1)

def test_inverse_and_compose():
    rng = numpy.random.default_rng(1)
    x = rng.standard_normal((6, 2))
    for i in range(20):
        sigma = random_permutation(6, rng)
        tau = random_permutation(6, rng)

        assert compose(sigma, sigma.inverse()) == Permutation.identity(6)
        assert sigma.inverse().sign == sigma.sign

        composed = compose(sigma, tau)
        assert perm_sign(composed.mapping) == sigma.sign * tau.sign
        assert composed.sign == perm_sign(composed.mapping)
        assert_array_equal(apply_perm(x, composed), apply_perm(apply_perm(x, tau), sigma))

    with pytest.raises(ValueError):
        compose(Permutation.identity(2), Permutation.identity(3))

def test_random_permutation_parity():
    rng = numpy.random.default_rng(5)
    for parity in [1, -1]:
        for i in range(50):
            assert random_permutation(5, rng, parity=parity).sign == parity

    # the draw is reproducible from an integer seed
    assert random_permutation(8, 3) == random_permutation(8, 3)

    with pytest.raises(ValueError):
        random_permutation(1, rng, parity=-1)
    with pytest.raises(ValueError):
        random_permutation(3, rng, parity=0)

def test_apply_perm():
    x = numpy.array([[0., 1.], [2., 3.], [4., 5.]])
    y = apply_perm(x, [2, 0, 1])
    assert_array_equal(y, [[4., 5.], [0., 1.], [2., 3.]])

    # a vector stays a vector
    assert_array_equal(apply_perm([1., 2., 3.], [1, 0, 2]), [2., 1., 3.])

    with pytest.raises(ValueError):
        apply_perm(x, [1, 0])
    with pytest.raises(ValueError):
        apply_perm([numpy.nan, 1.], [1, 0])

def test_group_table():
    for n in range(1, 7):
        table, signs = group_table(n)
        assert len(table) == math.factorial(n)
        assert len(numpy.unique(table, axis=0)) == len(table)

        even, esigns = group_table(n, True)
        assert len(even) == max(1, math.factorial(n) // 2)
        assert (esigns == 1).all()

        # lexicographic order starts with the identity
        assert_array_equal(table[0], numpy.arange(n))
        assert not table.flags.writeable

    assert len(list(enumerate_group(4, even_only=True))) == 12
    with pytest.raises(ValueError):
        group_table(MAX_ENUMERATION_N + 1)

def test_l1_norm_diff():
    assert l1_norm_diff([1., 2.], [0., 4.]) == 3.
    assert l1_norm_diff([[1., 2.], [0., 0.]], [[1., 2.], [0., 0.]]) == 0.

    # cancellation is resolved exactly
    assert l1_norm_diff([1e16, 1.], [1e16 + 2, 0.]) == 3.

    with pytest.raises(ValueError):
        l1_norm_diff([1., 2.], [1., 2., 3.])

def test_dist_plus_examples():
    # n = 2: the alternating group is trivial
    assert dist_plus_bruteforce([0., 1.], [1., 0.]) == 2.
    assert dist_sym_bruteforce([0., 1.], [1., 0.]) == 0.

    # an even cyclic relabeling is in the orbit
    x = [[0.], [1.], [2.]]
    y = [[2.], [0.], [1.]]
    assert dist_plus_bruteforce(x, y) == 0.

    # a transposition is not, for distinct points
    z = [[1.], [0.], [2.]]
    assert dist_plus_bruteforce(x, z) > 0
    assert dist_sym_bruteforce(x, z) == 0.

    with pytest.raises(ValueError):
        dist_plus_bruteforce(numpy.zeros(10), numpy.zeros(10))
    with pytest.raises(ValueError):
        dist_plus_bruteforce(numpy.zeros((3, 2)), numpy.zeros((3, 1)))

def test_dist_plus_orbit_invariance():
    rng = numpy.random.default_rng(11)
    for i in range(20):
        x = rng.standard_normal((5, 2))
        y = rng.standard_normal((5, 2))
        sigma = random_permutation(5, rng, parity=1)
        tau = random_permutation(5, rng, parity=1)

        d = dist_plus_bruteforce(x, y)
        assert dist_plus_bruteforce(apply_perm(x, sigma), apply_perm(y, tau)) == d
        assert dist_plus_bruteforce(y, x) == d
        assert dist_sym_bruteforce(x, y) <= d

        # an odd relabeling of both clouds leaves d₊ unchanged too
        odd = random_permutation(5, rng, parity=-1)
        assert dist_plus_bruteforce(apply_perm(x, odd), apply_perm(y, odd)) == d

def test_dist_many():
    rng = numpy.random.default_rng(2)
    X = rng.standard_normal((6, 4, 3))
    Y = rng.standard_normal((6, 4, 3))

    assert_array_equal(dist_plus_many(X, Y), [dist_plus_bruteforce(x, y) for x, y in zip(X, Y)])
    assert_array_equal(dist_sym_many(X, Y), [dist_sym_bruteforce(x, y) for x, y in zip(X, Y)])

    # small chunks give the same answer
    with set_options(bruteforce_chunk_size=7):
        assert_array_equal(dist_plus_many(X, Y), [dist_plus_bruteforce(x, y) for x, y in zip(X, Y)])

    # (B, n) stacks are clouds with d = 1
    assert dist_sym_many(X[..., 0], Y[..., 0]).shape == (6,)

    with pytest.raises(ValueError):
        dist_plus_many(X, Y[:3])

def test_dist_sym_1d():
    assert dist_sym_1d([3., 1., 2.], [1., 2., 3.]) == 0.
    assert dist_sym_1d([0., 1.], [0., 3.]) == 2.

    with pytest.raises(ValueError):
        dist_sym_1d([1., 2.], [1.])
    with pytest.raises(ValueError):
        dist_sym_1d([1., numpy.inf], [1., 2.])

@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=7).flatmap(
        lambda n: st.tuples(*[arrays(numpy.float64, (n,), elements=st.floats(-1e3, 1e3, allow_nan=False))] * 2)))
def test_dist_sym_1d_matches_bruteforce(pair):
    x, y = pair
    assert dist_sym_1d(x, y) == dist_sym_bruteforce(x, y)

@settings(max_examples=100, deadline=None)
@given(arrays(numpy.float64, (4, 2), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False)),
       arrays(numpy.float64, (4, 2), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False)),
       arrays(numpy.float64, (4, 2), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False)))
def test_dist_triangle(x, y, z):
    # exact up to the final rounding of each term
    for dist in [dist_plus_bruteforce, dist_sym_bruteforce]:
        lhs = dist(x, z)
        rhs = dist(x, y) + dist(y, z)
        assert lhs <= rhs * (1 + 4 * numpy.finfo('f8').eps) + 1e-12

@settings(max_examples=100, deadline=None)
@given(arrays(numpy.float64, (4, 2), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False)),
       arrays(numpy.float64, (4, 2), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False)))
def test_dist_symmetric(x, y):
    for dist in [dist_plus_bruteforce, dist_sym_bruteforce]:
        assert abs(dist(x, y) - dist(y, x)) <= 1e-12
