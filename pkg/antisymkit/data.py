"""
Determinant-regression datasets: uniformly random ``n x n`` matrices whose
rows are the permutable points, labeled by their determinant.
"""
import numpy
import logging
import warnings
import zlib
from scipy import linalg

from antisymkit import CurrentMPIComm
from antisymkit.mpirng import MPIRandomState
from antisymkit.utils import GatherArray, local_range
from antisymkit.io.binary import BinaryFile, write_binary, read_header, check_body
from antisymkit.io.csv import write_table

SPLITS = ('train', 'val', 'test')

def det_label(A):
    """
    The determinant of a square matrix from its LU decomposition with
    partial pivoting: the product of the diagonal of ``U`` times the sign
    of the row exchanges. A singular matrix gives 0.
    """
    A = numpy.asarray(A, dtype='f8')
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("det_label expects a square matrix, not shape %s" % str(A.shape))
    if not numpy.isfinite(A).all():
        raise ValueError("det_label expects finite entries")

    with warnings.catch_warnings():
        warnings.simplefilter('ignore', linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A, check_finite=False)

    swaps = numpy.count_nonzero(piv != numpy.arange(len(piv)))
    sign = -1.0 if swaps % 2 else 1.0
    return sign * float(numpy.prod(numpy.diag(lu)))

def det_label_many(A):
    """ :func:`det_label` for a ``(B, n, n)`` stack. """
    A = numpy.asarray(A, dtype='f8')
    return numpy.array([det_label(a) for a in A], dtype='f8')

def det_cofactor(A):
    """
    The determinant by Laplace expansion along the first row; an
    independent oracle for small matrices (``n <= 8``).
    """
    A = numpy.asarray(A, dtype='f8')
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("det_cofactor expects a square matrix, not shape %s" % str(A.shape))
    if len(A) > 8:
        raise ValueError("det_cofactor is limited to n <= 8, got n = %d" % len(A))

    def expand(M):
        if len(M) == 1:
            return M[0, 0]
        if len(M) == 2:
            return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        total = 0.0
        for j in range(len(M)):
            minor = numpy.delete(M[1:], j, axis=1)
            total += (-1) ** j * M[0, j] * expand(minor)
        return total

    return float(expand(A))

class Dataset(object):
    """
    Labeled matrices split into consecutive ``train``, ``val`` and ``test``
    blocks.

    Parameters
    ----------
    n : int
        the matrix order; each sample is ``n`` points in ``R^n``
    counts : tuple of int
        the sizes of the train, validation and test splits
    samples : array_like
        ``(N, n, n)`` matrices, ``N = sum(counts)``
    labels : array_like
        ``(N,)`` determinants
    seed : int
        the generation seed
    low, high : float
        the sampling interval ``[low, high)`` of the entries

    Attributes
    ----------
    attrs : dict
        the generation metadata
    """
    logger = logging.getLogger('Dataset')

    def __init__(self, n, counts, samples, labels, seed, low=0.0, high=1.1):
        samples = numpy.ascontiguousarray(samples, dtype='f8')
        labels = numpy.ascontiguousarray(labels, dtype='f8')
        counts = tuple(int(c) for c in counts)
        if len(counts) != 3:
            raise ValueError("`counts` must hold the train, val and test sizes")
        if samples.shape != (sum(counts), n, n):
            raise ValueError("`samples` must have shape %s, not %s" % (str((sum(counts), n, n)), str(samples.shape)))
        if labels.shape != (sum(counts),):
            raise ValueError("`labels` must have shape (%d,), not %s" % (sum(counts), str(labels.shape)))

        samples.setflags(write=False)
        labels.setflags(write=False)
        self.n = int(n)
        self.counts = counts
        self.samples = samples
        self.labels = labels
        self.attrs = {'n': self.n, 'counts': list(counts), 'seed': int(seed),
                      'low': float(low), 'high': float(high)}

    @property
    def gen(self):
        """ The generation record ``{seed, low, high}``. """
        return {k: self.attrs[k] for k in ('seed', 'low', 'high')}

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        return "Dataset(n=%d, counts=%s, seed=%d)" % (self.n, self.counts, self.attrs['seed'])

    def bounds(self, name):
        """ The ``[start, stop)`` rows of the split ``name``. """
        if name not in SPLITS:
            raise ValueError("split should be one of %s, not '%s'" % (SPLITS, name))
        i = SPLITS.index(name)
        start = sum(self.counts[:i])
        return start, start + self.counts[i]

    def split(self, name):
        """
        The ``(samples, labels)`` of one split, as read-only views.
        """
        start, stop = self.bounds(name)
        return self.samples[start:stop], self.labels[start:stop]

    @property
    def checksum(self):
        """ CRC32 of the samples and labels, as stored on disk. """
        crc = zlib.crc32(self.samples.astype('<f8').tobytes())
        return zlib.crc32(self.labels.astype('<f8').tobytes(), crc) & 0xffffffff

def _check_counts(counts):
    counts = tuple(counts)
    if len(counts) != 3 or any(int(c) != c or c < 1 for c in counts):
        raise ValueError("`counts` must be three positive integers (train, val, test), not %s" % str(counts))
    return tuple(int(c) for c in counts)

@CurrentMPIComm.enable
def gen_dataset(n, counts, seed, low=0.0, high=1.1, comm=None):
    """
    Generate a determinant dataset of i.i.d. uniform entries on ``[low, high)``.

    Every sample draws from its own counter-based stream, so the result does
    not depend on the number of ranks. Samples are generated and labeled
    in parallel and gathered on all ranks.

    Parameters
    ----------
    n : int
        the matrix order, ``n >= 2``
    counts : tuple of int
        the train, validation and test sizes
    seed : int
        the random seed
    comm : MPI communicator, optional
        the communicator; default is the current one
    """
    if int(n) != n or n < 2:
        raise ValueError("`n` must be an integer >= 2, not %s" % str(n))
    counts = _check_counts(counts)
    N = sum(counts)

    start, stop = local_range(N, comm)
    rng = MPIRandomState(comm, seed, stop - start)
    samples = rng.uniform(low, high, itemshape=(n, n))
    # a product (high - low) * u may round up to high
    numpy.minimum(samples, numpy.nextafter(high, low), out=samples)
    labels = det_label_many(samples)

    samples = GatherArray(samples, comm, root=Ellipsis)
    labels = GatherArray(labels, comm, root=Ellipsis)

    ds = Dataset(n, counts, samples, labels, seed, low=low, high=high)
    if comm.rank == 0:
        ds.logger.info("generated %r, %d positive / %d negative labels"
                       % (ds, (labels > 0).sum(), (labels < 0).sum()))
    return ds

_HEADER = numpy.dtype([('magic', 'S8'), ('version', '<u4'), ('n', '<u4'),
                       ('counts', '<u8', (3,)), ('seed', '<u8'),
                       ('low', '<f8'), ('high', '<f8'), ('checksum', '<u4')])
_MAGIC = b'ASKDSET\x00'
_VERSION = 1

def save_dataset(ds, path):
    """
    Write ``ds`` to ``path``: a header, then the samples, then the labels,
    as little-endian doubles.
    """
    header = numpy.zeros(1, dtype=_HEADER)
    header['magic'] = _MAGIC
    header['version'] = _VERSION
    header['n'] = ds.n
    header['counts'] = ds.counts
    header['seed'] = ds.attrs['seed']
    header['low'] = ds.attrs['low']
    header['high'] = ds.attrs['high']
    write_binary(path, header, [ds.samples.astype('<f8'), ds.labels.astype('<f8')])
    ds.logger.info("saved %r to '%s'" % (ds, path))

def load_dataset(path):
    """
    Read a dataset written by :func:`save_dataset`.

    Raises
    ------
    FileFormatError :
        if the file is empty, truncated, foreign, of another version, or
        fails its checksum
    """
    header = read_header(path, _HEADER, _MAGIC, _VERSION)
    n = int(header['n'])
    counts = tuple(int(c) for c in header['counts'])
    N = sum(counts)

    dtype = numpy.dtype([('samples', ('<f8', (n, n))), ('label', '<f8')])
    check_body(path, _HEADER.itemsize, N * dtype.itemsize, header['checksum'])

    f = BinaryFile(path, dtype, header_size=_HEADER.itemsize, size=N)
    data = f[:]
    return Dataset(n, counts, data['samples'].astype('f8'), data['label'].astype('f8'),
                   int(header['seed']), low=float(header['low']), high=float(header['high']))

def export_csv(ds, path):
    """
    Write one row per sample: the ``n^2`` entries in row-major order,
    then the label.
    """
    n = ds.n
    columns = {}
    flat = ds.samples.reshape(len(ds), n * n)
    for k in range(n * n):
        columns['a_%d_%d' % divmod(k, n)] = flat[:, k]
    columns['label'] = ds.labels
    write_table(path, columns)
    ds.logger.info("exported %d rows to '%s'" % (len(ds), path))
