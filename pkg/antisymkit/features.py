"""
Feature maps invariant under even permutations of the points.

*   :func:`feature_1d` maps a vector ``x`` to ``[sort(x); Q(x)]`` where
    ``Q(x)`` is the product of the signs of all pairwise differences times
    the smallest pairwise gap.
*   :func:`psi` and :func:`psi_features` lift it to point clouds in
    ``R^d`` through random projections ``a_k`` and read-outs ``b_k``.
*   :func:`vandermonde_feature` is the antisymmetric product of projected
    pairwise differences used by the baseline ansatz.
"""
import numpy
import logging

from antisymkit import _global_options
from antisymkit.symmetry import Permutation, perm_sign_many, point_cloud
from antisymkit.io.binary import BinaryFile, write_binary, read_header, check_body

logger = logging.getLogger('features')

#: above this many pairwise factors Vandermonde products go through logs
LOG_DOMAIN_PAIRS = 64

def _vector(x, name='x'):
    x = numpy.asarray(x, dtype='f8')
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError("`%s` must be a vector, not shape %s" % (name, str(x.shape)))
    if numpy.isnan(x).any():
        raise ValueError("`%s` contains NaN entries" % name)
    if not numpy.isfinite(x).all():
        raise ValueError("`%s` contains infinite entries" % name)
    return x

def _stack(X, name='X'):
    X = numpy.asarray(X, dtype='f8')
    if X.ndim != 2:
        raise ValueError("`%s` must be a (B, n) stack of vectors, not shape %s" % (name, str(X.shape)))
    if not numpy.isfinite(X).all():
        raise ValueError("`%s` contains non-finite entries" % name)
    return X

class SortResult(object):
    """
    The output of :func:`sort_with_perm`.

    Attributes
    ----------
    sorted : numpy.ndarray
        the nondecreasing rearrangement of the input
    perm : Permutation
        a permutation with ``apply_perm(x, perm) == sorted``
    has_ties : bool
        whether two entries of the input are equal
    """
    def __init__(self, sorted, perm, has_ties):
        self.sorted = sorted
        self.perm = perm
        self.has_ties = has_ties

    def __iter__(self):
        return iter((self.sorted, self.perm, self.has_ties))

    def __repr__(self):
        return "SortResult(sorted=%s, sign=%+d, has_ties=%s)" % (self.sorted.tolist(), self.perm.sign, self.has_ties)

def sort_with_perm(x):
    """
    Sort ``x`` ascending with a stable sort, returning the sorting
    permutation and whether ``x`` holds a repeated value.
    """
    x = _vector(x)
    mapping = numpy.argsort(x, kind='stable')
    xs = x[mapping]
    has_ties = bool(len(xs) > 1 and (xs[1:] == xs[:-1]).any())
    return SortResult(xs, Permutation(mapping), has_ties)

def _check_q_size(n):
    if n < 2:
        raise ValueError("Q is only defined for n >= 2, got n = %d" % n)

def q_naive(x):
    """
    ``Q(x)`` by its definition: the product of ``sign(x_j - x_i)`` over all
    pairs ``i < j`` times the smallest ``|x_j - x_i|``. Costs ``O(n^2)``.
    """
    x = _vector(x)
    _check_q_size(len(x))
    i, j = numpy.triu_indices(len(x), k=1)
    diff = x[j] - x[i]
    if (diff == 0).any():
        return 0.0
    sign = -1.0 if (diff < 0).sum() % 2 else 1.0
    return sign * float(numpy.abs(diff).min())

def q_fast(x):
    """
    ``Q(x)`` in ``O(n log n)``: the sign of the sorting permutation times
    the smallest gap between adjacent sorted entries.

    Equal to :func:`q_naive` bit for bit: rounding of a difference is
    monotone, so the smallest rounded pairwise gap is an adjacent one.
    """
    res = sort_with_perm(x)
    _check_q_size(len(res.sorted))
    if res.has_ties:
        return 0.0
    return res.perm.sign * float(numpy.diff(res.sorted).min())

def q_fast_many(X):
    """
    :func:`q_fast` for every row of a ``(B, n)`` stack.
    """
    X = _stack(X)
    _check_q_size(X.shape[1])
    mappings = numpy.argsort(X, axis=1, kind='stable')
    Xs = numpy.take_along_axis(X, mappings, axis=1)
    gaps = numpy.diff(Xs, axis=1).min(axis=1)
    q = perm_sign_many(mappings) * gaps
    q[gaps == 0] = 0.0
    return q

def feature_1d(x):
    """
    The bi-Lipschitz feature ``F(x) = [sort(x); Q(x)]`` of length ``n + 1``.
    """
    res = sort_with_perm(x)
    _check_q_size(len(res.sorted))
    q = 0.0 if res.has_ties else res.perm.sign * float(numpy.diff(res.sorted).min())
    return numpy.append(res.sorted, q)

def feature_1d_many(X):
    """
    :func:`feature_1d` for every row of a ``(B, n)`` stack, giving ``(B, n + 1)``.
    """
    X = _stack(X)
    _check_q_size(X.shape[1])
    mappings = numpy.argsort(X, axis=1, kind='stable')
    Xs = numpy.take_along_axis(X, mappings, axis=1)
    gaps = numpy.diff(Xs, axis=1).min(axis=1)
    q = perm_sign_many(mappings) * gaps
    q[gaps == 0] = 0.0
    return numpy.concatenate([Xs, q[:, None]], axis=1)

def project(x, a):
    """
    The projections ``a · x_i`` of every point of ``x``.

    Each point is reduced independently in the same order, so permuting the
    points permutes the projections exactly.

    Parameters
    ----------
    x : array_like
        an ``(n, d)`` point cloud, or a ``(..., n, d)`` stack of them
    a : array_like
        a direction in ``R^d``, or ``(m, d)`` directions

    Returns
    -------
    numpy.ndarray :
        shape ``(..., n)`` for a single direction, ``(..., n, m)`` otherwise
    """
    x = numpy.asarray(x, dtype='f8')
    a = numpy.asarray(a, dtype='f8')
    if x.shape[-1] != a.shape[-1]:
        raise ValueError("points have dimension %d but the direction has %d" % (x.shape[-1], a.shape[-1]))
    if a.ndim == 1:
        return (x * a).sum(axis=-1)
    return (x[..., None, :] * a).sum(axis=-1)

def psi(x, a, b):
    """
    One invariant feature ``ψ(x; a, b) = b · F(a · x_1, ..., a · x_n)``.
    """
    x = point_cloud(x)
    n, d = x.shape
    a = numpy.asarray(a, dtype='f8')
    b = numpy.asarray(b, dtype='f8')
    if a.shape != (d,):
        raise ValueError("`a` must have shape (%d,), not %s" % (d, str(a.shape)))
    if b.shape != (n + 1,):
        raise ValueError("`b` must have shape (%d,), not %s" % (n + 1, str(b.shape)))
    return float((b * feature_1d(project(x, a))).sum())

class _Sidecar(object):
    """
    Binary persistence shared by the frozen parameter blocks.
    """
    header_dtype = numpy.dtype([('magic', 'S8'), ('version', '<u4'),
                                ('n', '<u4'), ('d', '<u4'), ('count', '<u4'),
                                ('seed', '<u8'), ('checksum', '<u4')])
    version = 1

    @classmethod
    def _write(cls, path, n, d, count, seed, columns):
        header = numpy.zeros(1, dtype=cls.header_dtype)
        header['magic'] = cls.magic
        header['version'] = cls.version
        header['n'], header['d'], header['count'] = n, d, count
        header['seed'] = seed
        write_binary(path, header, [numpy.asarray(c, dtype='<f8') for c in columns])

    @classmethod
    def _read(cls, path, columns):
        header = read_header(path, cls.header_dtype, cls.magic, cls.version)
        n, d, count = int(header['n']), int(header['d']), int(header['count'])
        dtype = numpy.dtype([(name, ('<f8', shape(n, d))) for name, shape in columns])
        check_body(path, cls.header_dtype.itemsize, count * dtype.itemsize, header['checksum'])
        f = BinaryFile(path, dtype, header_size=cls.header_dtype.itemsize, size=count)
        data = f[:]
        return header, [data[name].astype('f8') for name, _ in columns]

class ProjectionEnsemble(_Sidecar):
    """
    The frozen parameters ``(a_k, b_k), k = 1..m`` of :func:`psi_features`.

    Parameters
    ----------
    n, d : int
        the number of points and their dimension
    a : array_like
        ``(m, d)`` projection directions; none may vanish
    b : array_like
        ``(m, n + 1)`` read-out vectors
    seed : int
        the seed the parameters were drawn with, kept as a record
    """
    magic = b'ASKPSI\x00\x00'
    logger = logging.getLogger('ProjectionEnsemble')

    def __init__(self, n, d, a, b, seed):
        a = numpy.array(a, dtype='f8')
        b = numpy.array(b, dtype='f8')
        if a.ndim != 2 or a.shape[1] != d:
            raise ValueError("`a` must have shape (m, %d), not %s" % (d, str(a.shape)))
        if b.shape != (len(a), n + 1):
            raise ValueError("`b` must have shape (%d, %d), not %s" % (len(a), n + 1, str(b.shape)))
        if len(a) < 1:
            raise ValueError("an ensemble needs at least one feature")
        if not (numpy.isfinite(a).all() and numpy.isfinite(b).all()):
            raise ValueError("ensemble parameters must be finite")
        if (numpy.abs(a).max(axis=1) == 0).any():
            raise ValueError("projection directions `a` must be nonzero")

        a.setflags(write=False)
        b.setflags(write=False)
        self.n, self.d = int(n), int(d)
        self.a, self.b = a, b
        self.seed = int(seed)

    @property
    def m(self):
        return len(self.a)

    def __repr__(self):
        return "ProjectionEnsemble(n=%d, d=%d, m=%d, seed=%d)" % (self.n, self.d, self.m, self.seed)

    def save(self, path):
        """ Write the ensemble to a versioned binary sidecar file. """
        self._write(path, self.n, self.d, self.m, self.seed, [self.a, self.b])
        self.logger.info("saved %r to '%s'" % (self, path))

    @classmethod
    def load(cls, path):
        """ Read an ensemble written by :meth:`save`, bit for bit. """
        header, (a, b) = cls._read(path, [('a', lambda n, d: (d,)), ('b', lambda n, d: (n + 1,))])
        return cls(int(header['n']), int(header['d']), a, b, int(header['seed']))

def default_m(n, d):
    return 2 * n * d + 1

def sample_ensemble(n, d, m=None, seed=0):
    """
    Draw ``(a_k, b_k)`` i.i.d. from standard Gaussians; ``m`` defaults to
    ``2 n d + 1``.
    """
    if n < 2:
        raise ValueError("an ensemble needs n >= 2, not %d" % n)
    if d < 1:
        raise ValueError("an ensemble needs d >= 1, not %d" % d)
    if m is None:
        m = default_m(n, d)
    if m < 1:
        raise ValueError("an ensemble needs m >= 1, not %d" % m)
    if seed is None or seed < 0:
        raise ValueError("`seed` must be a non-negative integer")

    rng = numpy.random.default_rng(seed)
    a = rng.standard_normal((m, d))
    b = rng.standard_normal((m, n + 1))
    return ProjectionEnsemble(n, d, a, b, seed)

def _check_cloud_for(x, n, d, name):
    x = numpy.asarray(x, dtype='f8')
    if x.ndim == 1 and d == 1:
        x = x[:, None]
    return point_cloud(x, n=n, d=d, name=name)

def psi_features(x, e):
    """
    ``Ψ(x) = (ψ(x; a_1, b_1), ..., ψ(x; a_m, b_m))``.

    Invariant under even permutations of the points and positively
    homogeneous of degree one.
    """
    x = _check_cloud_for(x, e.n, e.d, 'x')
    P = project(x, e.a)  # (n, m)
    F = feature_1d_many(P.T)
    return (F * e.b).sum(axis=-1)

def _row_chunk(item_size):
    return max(1, int(_global_options['bruteforce_chunk_size']) // max(int(item_size), 1))

def psi_features_batch(X, e):
    """
    :func:`psi_features` for a ``(B, n, d)`` stack, returning ``(B, m)``.
    """
    X = numpy.asarray(X, dtype='f8')
    if X.ndim == 2 and e.d == 1:
        X = X[..., None]
    if X.ndim != 3 or X.shape[1:] != (e.n, e.d):
        raise ValueError("expected a (B, %d, %d) stack, not shape %s" % (e.n, e.d, str(X.shape)))
    if not numpy.isfinite(X).all():
        raise ValueError("point cloud stack contains non-finite entries")

    B = len(X)
    out = numpy.empty((B, e.m))
    chunk = _row_chunk(e.n * e.m * max(e.d, 2))
    for start in range(0, B, chunk):
        P = project(X[start:start+chunk], e.a)  # (b, n, m)
        F = feature_1d_many(P.transpose(0, 2, 1).reshape(-1, e.n))
        F = F.reshape(len(P), e.m, e.n + 1)
        out[start:start+chunk] = (F * e.b).sum(axis=-1)
    return out

class VandermondeBank(_Sidecar):
    """
    ``K`` frozen unit directions ``y_k`` in ``R^d`` for the Vandermonde
    features ``f_k(x) = Π_{i<j} y_k · (x_i - x_j)``.
    """
    magic = b'ASKVDM\x00\x00'
    logger = logging.getLogger('VandermondeBank')

    def __init__(self, n, d, y, seed):
        y = numpy.array(y, dtype='f8')
        if y.ndim != 2 or y.shape[1] != d or len(y) < 1:
            raise ValueError("`y` must have shape (K, %d) with K >= 1, not %s" % (d, str(y.shape)))
        if not numpy.isfinite(y).all():
            raise ValueError("bank directions must be finite")
        if numpy.abs(numpy.linalg.norm(y, axis=1) - 1).max() > 1e-12:
            raise ValueError("bank directions must have unit norm")
        y.setflags(write=False)
        self.n, self.d = int(n), int(d)
        self.y = y
        self.seed = int(seed)

    @property
    def K(self):
        return len(self.y)

    def __repr__(self):
        return "VandermondeBank(n=%d, d=%d, K=%d, seed=%d)" % (self.n, self.d, self.K, self.seed)

    def save(self, path):
        """ Write the bank to a versioned binary sidecar file. """
        self._write(path, self.n, self.d, self.K, self.seed, [self.y])
        self.logger.info("saved %r to '%s'" % (self, path))

    @classmethod
    def load(cls, path):
        """ Read a bank written by :meth:`save`, bit for bit. """
        header, (y,) = cls._read(path, [('y', lambda n, d: (d,))])
        return cls(int(header['n']), int(header['d']), y, int(header['seed']))

def sample_vandermonde_bank(n, d, K=None, seed=0):
    """
    Draw ``K`` directions uniformly on the unit sphere of ``R^d`` as
    normalized Gaussians. ``K`` defaults to ``n d + 1``, which is ``n^2 + 1``
    for square matrices read as ``n`` points in ``R^n``.
    """
    if n < 2 or d < 1:
        raise ValueError("a Vandermonde bank needs n >= 2 and d >= 1, not n = %d, d = %d" % (n, d))
    if K is None:
        K = n * d + 1
    if K < 1:
        raise ValueError("a Vandermonde bank needs K >= 1, not %d" % K)
    if seed is None or seed < 0:
        raise ValueError("`seed` must be a non-negative integer")

    rng = numpy.random.default_rng(seed)
    y = rng.standard_normal((K, d))
    norms = numpy.linalg.norm(y, axis=1)
    while (norms == 0).any():
        bad = norms == 0
        y[bad] = rng.standard_normal((bad.sum(), d))
        norms = numpy.linalg.norm(y, axis=1)
    return VandermondeBank(n, d, y / norms[:, None], seed)

def _pair_factors(P, n):
    """
    The differences ``p_i - p_j`` over pairs ``i < j`` along axis ``-2``
    of a ``(..., n, K)`` projection array.
    """
    i, j = numpy.triu_indices(n, k=1)
    return P[..., i, :] - P[..., j, :]

def _signed_log_product(factors, axis):
    """
    Sign and log-magnitude of the product of ``factors`` along ``axis``.

    Magnitudes are accumulated in ascending order, so reordering the
    factors leaves the result unchanged.
    """
    sign = numpy.where((factors < 0).sum(axis=axis) % 2 == 1, -1.0, 1.0)
    mags = numpy.sort(numpy.abs(factors), axis=axis)
    zero = (mags == 0).any(axis=axis)
    with numpy.errstate(divide='ignore'):
        logabs = numpy.log(mags).sum(axis=axis)
    return numpy.where(zero, 0.0, sign), numpy.where(zero, -numpy.inf, logabs)

def _product(factors, axis):
    mags = numpy.sort(numpy.abs(factors), axis=axis)
    sign = numpy.where((factors < 0).sum(axis=axis) % 2 == 1, -1.0, 1.0)
    return sign * mags.prod(axis=axis)

def _finite_or_raise(values, what):
    if not numpy.isfinite(values).all():
        raise FloatingPointError("%s overflowed; use the log-domain features" % what)
    return values

def vandermonde_feature(x, y, log=False):
    """
    The antisymmetric product ``Π_{i<j} y · (x_i - x_j)``.

    Parameters
    ----------
    x : array_like
        an ``(n, d)`` point cloud with ``n >= 2``
    y : array_like
        a direction in ``R^d``
    log : bool, optional
        return ``(sign, log|f|)`` instead of ``f``

    Raises
    ------
    FloatingPointError :
        if ``log`` is False and the product does not fit a double
    """
    x = point_cloud(x)
    n, d = x.shape
    y = numpy.asarray(y, dtype='f8')
    if y.shape != (d,):
        raise ValueError("`y` must have shape (%d,), not %s" % (d, str(y.shape)))
    if n < 2:
        raise ValueError("a Vandermonde feature needs n >= 2, not %d" % n)

    p = project(x, y)
    i, j = numpy.triu_indices(n, k=1)
    factors = p[i] - p[j]

    if log:
        sign, logabs = _signed_log_product(factors, axis=0)
        return float(sign), float(logabs)

    if len(factors) > LOG_DOMAIN_PAIRS:
        sign, logabs = _signed_log_product(factors, axis=0)
        with numpy.errstate(over='ignore'):
            value = sign * numpy.exp(logabs)
    else:
        with numpy.errstate(over='ignore'):
            value = _product(factors, axis=0)
    return float(_finite_or_raise(numpy.asarray(value), "Vandermonde feature"))

def _check_stack_for(X, n, d):
    X = numpy.asarray(X, dtype='f8')
    if X.ndim == 2 and d == 1:
        X = X[..., None]
    if X.ndim != 3 or X.shape[1:] != (n, d):
        raise ValueError("expected a (B, %d, %d) stack, not shape %s" % (n, d, str(X.shape)))
    if not numpy.isfinite(X).all():
        raise ValueError("point cloud stack contains non-finite entries")
    return X

def vandermonde_log_features(X, bank):
    """
    ``(sign, log|f_k|)`` of every Vandermonde feature of a ``(B, n, d)``
    stack, each of shape ``(B, K)``.
    """
    X = _check_stack_for(X, bank.n, bank.d)
    n, K = bank.n, bank.K
    sign = numpy.empty((len(X), K))
    logabs = numpy.empty((len(X), K))
    chunk = _row_chunk(n * n * K)
    for start in range(0, len(X), chunk):
        factors = _pair_factors(project(X[start:start+chunk], bank.y), n)
        s, l = _signed_log_product(factors, axis=-2)
        sign[start:start+chunk] = s
        logabs[start:start+chunk] = l
    return sign, logabs

def vandermonde_features(X, bank):
    """
    Every Vandermonde feature ``f_k`` of a ``(B, n, d)`` stack, ``(B, K)``.

    Raises
    ------
    FloatingPointError :
        if some feature does not fit a double
    """
    X = _check_stack_for(X, bank.n, bank.d)
    n = bank.n
    if n * (n - 1) // 2 > LOG_DOMAIN_PAIRS:
        sign, logabs = vandermonde_log_features(X, bank)
        with numpy.errstate(over='ignore'):
            return _finite_or_raise(sign * numpy.exp(logabs), "Vandermonde features")

    out = numpy.empty((len(X), bank.K))
    chunk = _row_chunk(n * n * bank.K)
    for start in range(0, len(X), chunk):
        factors = _pair_factors(project(X[start:start+chunk], bank.y), n)
        with numpy.errstate(over='ignore', under='ignore'):
            out[start:start+chunk] = _product(factors, axis=-2)
    return _finite_or_raise(out, "Vandermonde features")
