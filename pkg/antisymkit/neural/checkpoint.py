"""
Model checkpoints.

Layout: a fixed header (model tag, ``n``, ``d``, seeds, activation and the
number of layers of each network), a ``(nblocks, 3)`` table of
``(ndim, shape0, shape1)`` rows, then every block as little-endian doubles:
the weights and biases of each network in parameter order, followed by the
frozen feature parameters.
"""
import numpy
import logging

from antisymkit.io.binary import BinaryFile, FileFormatError, write_binary, read_header, check_body
from .mlp import MLPParams
from .ansatz import NET_NAMES, FROZEN_NAMES, model_from_parts

logger = logging.getLogger('checkpoint')

_HEADER = numpy.dtype([('magic', 'S8'), ('version', '<u4'), ('kind', 'S16'),
                       ('n', '<u4'), ('d', '<u4'), ('seed', '<u8'), ('frozen_seed', '<u8'),
                       ('activation', 'S8'), ('nlayers', '<u4', (2,)), ('nblocks', '<u4'),
                       ('checksum', '<u4')])
_MAGIC = b'ASKCKPT\x00'
_VERSION = 1

def _layout_row(a):
    shape = tuple(a.shape) + (1,) * (2 - a.ndim)
    return [a.ndim, shape[0], shape[1]]

def save_checkpoint(model, path):
    """
    Write ``model`` to ``path``; :func:`load_checkpoint` restores it bit for bit.
    """
    blocks = []
    nlayers = [0, 0]
    for i, name in enumerate(model.net_names):
        net = model.nets[name]
        nlayers[i] = len(net.weights)
        blocks += net.params
    blocks += [a for _, a in model.frozen_blocks()]
    blocks = [numpy.ascontiguousarray(b, dtype='<f8') for b in blocks]
    layout = numpy.array([_layout_row(b) for b in blocks], dtype='<u4')

    header = numpy.zeros(1, dtype=_HEADER)
    header['magic'] = _MAGIC
    header['version'] = _VERSION
    header['kind'] = model.kind.encode()
    header['n'], header['d'] = model.n, model.d
    header['seed'] = model.seed
    header['frozen_seed'] = model.frozen_seed
    header['activation'] = model.activation.encode()
    header['nlayers'] = nlayers
    header['nblocks'] = len(blocks)

    write_binary(path, header, [layout] + blocks)
    logger.info("saved %r to '%s'" % (model, path))

def load_checkpoint(path):
    """
    Read a model written by :func:`save_checkpoint`.

    Raises
    ------
    FileFormatError :
        if the file is empty, truncated, foreign, of another version, or
        fails its checksum
    """
    header = read_header(path, _HEADER, _MAGIC, _VERSION)
    kind = bytes(header['kind']).decode()
    if kind not in NET_NAMES:
        raise FileFormatError("'%s' holds an unknown model tag '%s'" % (path, kind))

    nblocks = int(header['nblocks'])
    layout = numpy.fromfile(path, dtype='<u4', count=3 * nblocks, offset=_HEADER.itemsize)
    if len(layout) != 3 * nblocks:
        raise FileFormatError("'%s' is truncated inside the block table" % path)
    layout = layout.reshape(nblocks, 3)
    shapes = [tuple(int(s) for s in row[1:1 + row[0]]) for row in layout]

    dtype = numpy.dtype([('block%d' % i, ('<f8', shape)) for i, shape in enumerate(shapes)])
    check_body(path, _HEADER.itemsize, layout.nbytes + dtype.itemsize, header['checksum'])

    f = BinaryFile(path, dtype, header_size=_HEADER.itemsize + layout.nbytes, size=1)
    row = f[0]
    blocks = [numpy.array(row['block%d' % i][0], dtype='f8') for i in range(nblocks)]

    activation = bytes(header['activation']).decode()
    nets = {}
    for name, nlayers in zip(NET_NAMES[kind], header['nlayers']):
        nlayers = int(nlayers)
        params, blocks = blocks[:2 * nlayers], blocks[2 * nlayers:]
        if len(params) != 2 * nlayers:
            raise FileFormatError("'%s' is missing parameter blocks of network '%s'" % (path, name))
        weights, biases = params[0::2], params[1::2]
        sizes = [w.shape[0] for w in weights] + [weights[-1].shape[1]]
        nets[name] = MLPParams(sizes, weights, biases, activation)

    names = FROZEN_NAMES[kind]
    if len(blocks) != len(names):
        raise FileFormatError("'%s' holds %d frozen blocks, expected %d" % (path, len(blocks), len(names)))
    frozen = dict(zip(names, blocks))

    model = model_from_parts(kind, int(header['n']), int(header['d']), int(header['seed']),
                             nets, frozen, int(header['frozen_seed']))
    logger.info("loaded %r from '%s'" % (model, path))
    return model
