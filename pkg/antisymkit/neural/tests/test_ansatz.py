from antisymkit import setup_logging
from antisymkit.neural.ansatz import *
from antisymkit.neural.ansatz import KINDS
from antisymkit.features import psi_features
from antisymkit.symmetry import random_permutation, Permutation
from numpy.testing import assert_array_equal, assert_allclose
import numpy
import pytest

setup_logging("debug")

SMALL = {'bilipschitz': {'hidden': (8, 4)},
         'vandermonde': {'phi_sizes': (6, 5), 'rho_hidden': (4,)},
         'mlp': {'hidden': (8,)}}

def test_defaults():
    model = build_model('bilipschitz', 3, 3, seed=0)
    assert model.attrs['m'] == 2 * 3 * 3 + 1
    assert model.nets['net'].layer_sizes == [19, 256, 256, 64, 1]

    model = build_model('vandermonde', 3, 3, seed=0)
    assert model.attrs['K'] == 3 * 3 + 1
    assert model.nets['phi'].layer_sizes == [3, 128, 128]
    assert model.nets['rho'].layer_sizes == [128, 128, 10]

    model = build_model('mlp', 3, 3, seed=0)
    assert model.nets['net'].layer_sizes == [9, 256, 256, 64, 1]
    assert model.frozen_blocks() == []

def test_build_bad():
    with pytest.raises(ValueError):
        build_model('transformer', 3, 3)
    with pytest.raises(TypeError):
        build_model('mlp', 3, 3, K=4)
    with pytest.raises(TypeError):
        build_model('vandermonde', 3, 3, hidden=(4,))
    with pytest.raises(ValueError):
        build_model('mlp', 3, 3, activation='sigmoid', **SMALL['mlp'])

def test_seeds():
    a = build_model('vandermonde', 3, 2, seed=4, **SMALL['vandermonde'])
    b = build_model('vandermonde', 3, 2, seed=4, **SMALL['vandermonde'])
    for p1, p2 in zip(a.params, b.params):
        assert_array_equal(p1, p2)
    assert_array_equal(a.bank.y, b.bank.y)

    c = build_model('vandermonde', 3, 2, seed=5, **SMALL['vandermonde'])
    assert (c.bank.y != a.bank.y).any()
    assert a.frozen_seed == 4

    # the frozen parameters are not trained
    assert a.param_count == sum(p.size for p in a.params)

@pytest.mark.parametrize('kind', ['bilipschitz', 'vandermonde'])
def test_antisymmetric(kind):
    model = build_model(kind, 4, 3, seed=2, **SMALL[kind])
    rng = numpy.random.default_rng(0)
    X = rng.uniform(0, 1.1, size=(10, 4, 3))
    base = model(X)

    for i in range(10):
        sigma = random_permutation(4, rng)
        assert_allclose(model(X[:, sigma.mapping]), sigma.sign * base, rtol=1e-12, atol=1e-14)

def test_bilipschitz_vanishes_on_repeated_points():
    model = build_model('bilipschitz', 3, 2, seed=0, **SMALL['bilipschitz'])
    x = numpy.array([[0.3, 0.1], [0.3, 0.1], [0.7, 0.2]])
    assert forward_h(model, x) == 0.

@pytest.mark.parametrize('kind', ['bilipschitz', 'vandermonde'])
def test_vanishes_on_duplicates_anywhere(kind):
    rng = numpy.random.default_rng(5)
    for n in [3, 4, 5]:
        model = build_model(kind, n, 2, seed=n, **SMALL[kind])
        X = rng.uniform(0, 1.1, size=(60, n, 2))
        for x in X:
            i, j = rng.choice(n, size=2, replace=False)
            x[j] = x[i]
        # zero up to how the batched rows are rounded
        assert_allclose(model(X), numpy.zeros(len(X)), rtol=0, atol=1e-13)

def test_bilipschitz_features():
    model = build_model('bilipschitz', 3, 2, seed=1, **SMALL['bilipschitz'])
    x = numpy.random.default_rng(1).uniform(size=(3, 2))
    F = model.features(x)
    assert F.shape == (1, 2, model.ensemble.m)
    assert_array_equal(F[0, 0], psi_features(x, model.ensemble))
    assert_array_equal(F[0, 1], psi_features(x[[1, 0, 2]], model.ensemble))

def test_single_cloud():
    model = build_model('vandermonde', 3, 2, seed=0, **SMALL['vandermonde'])
    x = numpy.random.default_rng(2).uniform(size=(3, 2))
    y = model(x)
    assert isinstance(y, float)
    assert y == forward_vandermonde_baseline(model, x)
    assert y == model(x[None])[0]

    # points on a line have d = 1 entries
    model = build_model('mlp', 4, 1, seed=0, **SMALL['mlp'])
    assert model(numpy.ones((2, 4))).shape == (2,)

def test_forward_type_checks():
    mlp = build_model('mlp', 3, 2, seed=0, **SMALL['mlp'])
    with pytest.raises(TypeError):
        forward_h(mlp, numpy.zeros((3, 2)))
    with pytest.raises(TypeError):
        forward_vandermonde_baseline(mlp, numpy.zeros((3, 2)))

    model = build_model('bilipschitz', 3, 2, seed=0, **SMALL['bilipschitz'])
    with pytest.raises(ValueError):
        forward_h(model, numpy.zeros((2, 3, 2)))
    with pytest.raises(ValueError):
        model(numpy.zeros((5, 4, 2)))
    with pytest.raises(ValueError):
        model([[0., numpy.inf], [0., 0.], [1., 1.]])

def test_plain_mlp_is_not_antisymmetric():
    model = build_model('mlp', 3, 2, seed=0, **SMALL['mlp'])
    X = numpy.random.default_rng(3).uniform(size=(20, 3, 2))
    swapped = X[:, [1, 0, 2]]
    assert not numpy.allclose(model(swapped), -model(X))

def test_model_from_parts():
    for kind in KINDS:
        model = build_model(kind, 3, 2, seed=3, **SMALL[kind])
        frozen = dict(model.frozen_blocks())
        clone = model_from_parts(kind, 3, 2, model.seed, model.nets, frozen, model.frozen_seed)
        X = numpy.random.default_rng(4).uniform(size=(5, 3, 2))
        assert_array_equal(clone(X), model(X))
        assert repr(clone) == repr(model)

    with pytest.raises(ValueError):
        model_from_parts('nope', 3, 2, 0, {}, {}, 0)
