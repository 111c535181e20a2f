from antisymkit import setup_logging
from antisymkit.neural import build_model, save_checkpoint, load_checkpoint
from antisymkit.io.binary import FileFormatError
from numpy.testing import assert_array_equal
import numpy
import os
import pytest

setup_logging("debug")

SMALL = {'bilipschitz': {'hidden': (8, 4)},
         'vandermonde': {'phi_sizes': (6, 5), 'rho_hidden': (4,)},
         'mlp': {'hidden': (8,)}}

@pytest.mark.parametrize('kind', ['bilipschitz', 'vandermonde', 'mlp'])
def test_save_load(kind, tmpdir):
    model = build_model(kind, 4, 4, seed=9, activation='tanh', **SMALL[kind])
    path = os.path.join(str(tmpdir), 'model.ckpt')
    save_checkpoint(model, path)
    model2 = load_checkpoint(path)

    assert model2.kind == kind
    assert (model2.n, model2.d, model2.seed) == (4, 4, 9)
    assert model2.activation == 'tanh'
    assert model2.attrs == model.attrs
    for p1, p2 in zip(model.params, model2.params):
        assert_array_equal(p1, p2)
    for (n1, a1), (n2, a2) in zip(model.frozen_blocks(), model2.frozen_blocks()):
        assert n1 == n2
        assert_array_equal(a1, a2)

    X = numpy.random.default_rng(0).uniform(0, 1.1, size=(6, 4, 4))
    assert_array_equal(model2(X), model(X))

    # writing again gives the same bytes
    path2 = os.path.join(str(tmpdir), 'model2.ckpt')
    save_checkpoint(model2, path2)
    with open(path, 'rb') as f1, open(path2, 'rb') as f2:
        assert f1.read() == f2.read()

def test_corrupt(tmpdir):
    model = build_model('vandermonde', 3, 3, seed=0, **SMALL['vandermonde'])
    path = os.path.join(str(tmpdir), 'model.ckpt')
    save_checkpoint(model, path)
    with open(path, 'rb') as ff:
        good = ff.read()

    # a flipped byte in the body
    bad = bytearray(good)
    bad[-3] ^= 0xFF
    with open(path, 'wb') as ff:
        ff.write(bytes(bad))
    with pytest.raises(FileFormatError):
        load_checkpoint(path)

    # an unknown model tag
    bad = bytearray(good)
    bad[12:28] = b'transformer'.ljust(16, b'\x00')
    with open(path, 'wb') as ff:
        ff.write(bytes(bad))
    with pytest.raises(FileFormatError):
        load_checkpoint(path)

    # truncated
    with open(path, 'wb') as ff:
        ff.write(good[:-16])
    with pytest.raises(FileFormatError):
        load_checkpoint(path)

    # empty
    with open(path, 'wb') as ff:
        pass
    with pytest.raises(FileFormatError):
        load_checkpoint(path)

    with pytest.raises(FileNotFoundError):
        load_checkpoint(os.path.join(str(tmpdir), 'missing.ckpt'))
