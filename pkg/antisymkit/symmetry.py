"""
Permutations of point clouds and the brute-force metrics on their orbits.

Conventions
-----------
*   A permutation is a 0-based index array ``mapping`` acting on a point
    cloud by ``(σx)[i] = x[σ(i)]``.
*   A point cloud is an ``(n, d)`` float64 array; a 1-d vector of length
    ``n`` is accepted as a cloud with ``d = 1``.
*   ``d₊(x, y)`` is the minimum of ``‖x - σy‖₁`` over the even
    permutations, ``d±(x, y)`` the minimum over all permutations.

All L1 costs are returned correctly rounded from their exact real value,
so two matchings with the same real cost always produce the same float.
"""
import numpy
import math
import itertools
import logging
from functools import lru_cache

from antisymkit import _global_options

logger = logging.getLogger('symmetry')

#: the largest ``n`` for which the group is enumerated (9! = 362880)
MAX_ENUMERATION_N = 9

def _check_mapping(mapping):
    """
    Validate and return ``mapping`` as a read-only 1-d ``intp`` array.
    """
    mapping = numpy.asarray(mapping)
    if mapping.ndim != 1:
        raise ValueError("permutation mapping must be one-dimensional, not shape %s" % str(mapping.shape))
    if len(mapping) and not numpy.issubdtype(mapping.dtype, numpy.integer):
        raise TypeError("permutation mapping must hold integers, not %s" % mapping.dtype)

    n = len(mapping)
    mapping = mapping.astype('intp')
    if n and (mapping.min() < 0 or mapping.max() >= n):
        raise ValueError("permutation mapping has entries outside of [0, %d)" % n)
    if n and (numpy.bincount(mapping, minlength=n) != 1).any():
        raise ValueError("permutation mapping is not a bijection: duplicate entries found")

    mapping.setflags(write=False)
    return mapping

def _merge_count(seq):
    """
    Return the sorted copy of ``seq`` and its number of inversions.
    """
    if len(seq) <= 1:
        return list(seq), 0
    mid = len(seq) // 2
    left, nleft = _merge_count(seq[:mid])
    right, nright = _merge_count(seq[mid:])

    merged = []
    count = nleft + nright
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i]); i += 1
        else:
            # every remaining element of left is larger than right[j]
            merged.append(right[j]); j += 1
            count += len(left) - i
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, count

def perm_sign(mapping):
    """
    The sign ``(-1)**inversions`` of a permutation, with the inversions
    counted by merge sort in ``O(n log n)``.

    Parameters
    ----------
    mapping : array_like, Permutation
        a bijection on ``0..n-1``

    Returns
    -------
    int :
        ``+1`` or ``-1``

    Raises
    ------
    ValueError :
        if ``mapping`` is not a bijection
    """
    if isinstance(mapping, Permutation):
        return mapping.sign
    mapping = _check_mapping(mapping)
    _, count = _merge_count(mapping.tolist())
    return -1 if count % 2 else 1

def perm_sign_many(mappings):
    """
    Vectorized :func:`perm_sign` for a ``(B, n)`` stack of mappings.

    The rows are not validated; callers pass rows produced by ``argsort``
    or by :func:`group_table`.
    """
    mappings = numpy.asarray(mappings)
    if mappings.ndim != 2:
        raise ValueError("expected a (B, n) stack of mappings, not shape %s" % str(mappings.shape))
    B, n = mappings.shape
    upper = numpy.triu(numpy.ones((n, n), dtype='?'), k=1)

    signs = numpy.empty(B, dtype='i8')
    chunk = max(1, int(_global_options['bruteforce_chunk_size']) // max(n * n, 1))
    for start in range(0, B, chunk):
        m = mappings[start:start+chunk]
        inversions = ((m[:, :, None] > m[:, None, :]) & upper).sum(axis=(1, 2))
        signs[start:start+chunk] = 1 - 2 * (inversions % 2)
    return signs

class Permutation(object):
    """
    A bijection on ``0..n-1`` with its sign cached.

    The action on a point cloud is ``(σx)[i] = x[σ(i)]``, see
    :func:`apply_perm`. Permutations compose such that
    ``apply_perm(apply_perm(x, τ), σ) == apply_perm(x, compose(σ, τ))``.

    Parameters
    ----------
    mapping : array_like of int
        the images ``σ(0), ..., σ(n-1)``
    """
    def __init__(self, mapping):
        self.mapping = _check_mapping(mapping)
        _, count = _merge_count(self.mapping.tolist())
        self.sign = -1 if count % 2 else 1

    @classmethod
    def _trusted(cls, mapping, sign):
        obj = object.__new__(cls)
        obj.mapping = numpy.array(mapping, dtype='intp')
        obj.mapping.setflags(write=False)
        obj.sign = int(sign)
        return obj

    @classmethod
    def identity(cls, n):
        """ The identity permutation on ``n`` items. """
        return cls._trusted(numpy.arange(n), 1)

    @classmethod
    def transposition(cls, n, i, j):
        """ The transposition exchanging items ``i`` and ``j``. """
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValueError("a transposition needs two distinct indices in [0, %d), not (%d, %d)" % (n, i, j))
        mapping = numpy.arange(n)
        mapping[[i, j]] = j, i
        return cls._trusted(mapping, -1)

    @property
    def n(self):
        return len(self.mapping)

    @property
    def is_even(self):
        return self.sign == 1

    def inverse(self):
        """ The permutation undoing this one. """
        return Permutation._trusted(numpy.argsort(self.mapping, kind='stable'), self.sign)

    def __call__(self, x):
        return apply_perm(x, self)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return numpy.array_equal(self.mapping, other.mapping)

    def __hash__(self):
        return hash(self.mapping.tobytes())

    def __repr__(self):
        return "Permutation(%s, sign=%+d)" % (self.mapping.tolist(), self.sign)

    def __getstate__(self):
        return {'mapping': self.mapping.tolist(), 'sign': self.sign}

    def __setstate__(self, state):
        self.mapping = numpy.array(state['mapping'], dtype='intp')
        self.mapping.setflags(write=False)
        self.sign = state['sign']

def _as_perm(sigma):
    if isinstance(sigma, Permutation):
        return sigma
    return Permutation(sigma)

def compose(sigma, tau):
    """
    The permutation ``σ ∘ τ`` whose action equals applying ``τ`` first,
    then ``σ``: ``apply_perm(x, compose(σ, τ)) == apply_perm(apply_perm(x, τ), σ)``.
    """
    sigma, tau = _as_perm(sigma), _as_perm(tau)
    if sigma.n != tau.n:
        raise ValueError("cannot compose permutations of sizes %d and %d" % (sigma.n, tau.n))
    return Permutation._trusted(tau.mapping[sigma.mapping], sigma.sign * tau.sign)

def random_permutation(n, rng, parity=None):
    """
    Draw a uniformly random permutation of ``n`` items.

    Parameters
    ----------
    n : int
        the number of items
    rng : numpy.random.Generator, int
        the random stream, or a seed for :func:`numpy.random.default_rng`
    parity : {None, 1, -1}
        restrict the draw to even (``1``) or odd (``-1``) permutations;
        the draw stays uniform on the restricted set
    """
    if not isinstance(rng, numpy.random.Generator):
        rng = numpy.random.default_rng(rng)
    if parity not in (None, 1, -1):
        raise ValueError("`parity` should be None, 1 or -1")
    if parity == -1 and n < 2:
        raise ValueError("no odd permutation exists for n = %d" % n)

    mapping = rng.permutation(n)
    perm = Permutation(mapping)
    if parity is not None and perm.sign != parity:
        mapping[[0, 1]] = mapping[[1, 0]]
        perm = Permutation._trusted(mapping, parity)
    return perm

def point_cloud(x, n=None, d=None, name='x'):
    """
    Validate ``x`` and return it as a C-contiguous ``(n, d)`` float64 array.

    A 1-d vector is read as ``n`` points in one dimension.

    Raises
    ------
    ValueError :
        on a wrong number of dimensions, an unexpected ``n`` or ``d``,
        or any non-finite entry
    """
    x = numpy.asarray(x, dtype='f8')
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("`%s` must be an (n, d) point cloud, not shape %s" % (name, str(x.shape)))
    if n is not None and x.shape[0] != n:
        raise ValueError("`%s` has %d points, expected %d" % (name, x.shape[0], n))
    if d is not None and x.shape[1] != d:
        raise ValueError("`%s` has points of dimension %d, expected %d" % (name, x.shape[1], d))
    if not numpy.isfinite(x).all():
        raise ValueError("`%s` contains non-finite entries" % name)
    return numpy.ascontiguousarray(x)

def apply_perm(x, sigma):
    """
    Relabel the points of ``x``: point ``i`` of the result is point ``σ(i)``
    of ``x``. A 1-d input gives a 1-d output.
    """
    sigma = _as_perm(sigma)
    arr = numpy.asarray(x, dtype='f8')
    point_cloud(arr)
    if len(arr) != sigma.n:
        raise ValueError("cannot apply a permutation of %d items to %d points" % (sigma.n, len(arr)))
    return arr[sigma.mapping]

def _exact_abs_terms(a, b):
    """
    Split ``|a - b|`` elementwise into a rounded part and its rounding
    error, so that their exact sum is the exact absolute difference.
    """
    s = a - b
    bb = s - a
    err = (a - (s - bb)) + (-b - bb)
    sign = numpy.sign(s)
    return numpy.abs(s), sign * err

def _exact_l1(x, y):
    hi, lo = _exact_abs_terms(numpy.ravel(x), numpy.ravel(y))
    return math.fsum(itertools.chain(hi.tolist(), lo.tolist()))

def _pair(x, y):
    x = point_cloud(x, name='x')
    y = point_cloud(y, name='y')
    if x.shape != y.shape:
        raise ValueError("point clouds differ in shape: %s and %s" % (str(x.shape), str(y.shape)))
    return x, y

def l1_norm_diff(x, y):
    """
    The entrywise L1 distance ``Σ |x_ij - y_ij|`` of two point clouds of
    the same shape.
    """
    x, y = _pair(x, y)
    return _exact_l1(x, y)

def _check_guard(n):
    if n > MAX_ENUMERATION_N:
        raise ValueError("n = %d exceeds the enumeration guard n <= %d" % (n, MAX_ENUMERATION_N))
    if n < 1:
        raise ValueError("n must be a positive integer, not %d" % n)

@lru_cache(maxsize=2 * MAX_ENUMERATION_N)
def group_table(n, even_only=False):
    """
    The elements of the symmetric group ``S_n`` (or of the alternating
    group ``A_n``) as a read-only ``(|G|, n)`` index array, in
    lexicographic order, together with their signs.

    The result is cached per ``(n, even_only)``.
    """
    _check_guard(n)
    table = numpy.array(list(itertools.permutations(range(n))), dtype='intp').reshape(-1, n)
    signs = perm_sign_many(table)
    if even_only:
        keep = signs == 1
        table, signs = table[keep], signs[keep]
    table.setflags(write=False)
    signs.setflags(write=False)
    return table, signs

def enumerate_group(n, even_only=False):
    """
    Yield every element of ``S_n`` (or ``A_n`` if ``even_only``) exactly
    once, as :class:`Permutation` objects with their signs.

    Raises
    ------
    ValueError :
        if ``n`` exceeds :data:`MAX_ENUMERATION_N`
    """
    table, signs = group_table(n, bool(even_only))
    for mapping, sign in zip(table, signs):
        yield Permutation._trusted(mapping, sign)

def _bruteforce_min(x, y, table):
    """
    ``min over rows σ of table of ‖x - σy‖₁`` for a single pair.

    Candidates within the float error bound of the vectorized minimum are
    re-evaluated exactly, so the exact minimum is returned.
    """
    n, d = x.shape
    chunk = max(1, int(_global_options['bruteforce_chunk_size']) // (n * d))

    costs = numpy.empty(len(table))
    for start in range(0, len(table), chunk):
        t = table[start:start+chunk]
        costs[start:start+chunk] = numpy.abs(x[None] - y[t]).sum(axis=(1, 2))

    best = costs.min()
    slack = 4 * (n * d + 1) * numpy.finfo('f8').eps * max(best, numpy.abs(x).sum() + numpy.abs(y).sum())
    candidates = numpy.nonzero(costs <= best + slack)[0]
    return min(_exact_l1(x, y[table[i]]) for i in candidates)

def dist_plus_bruteforce(x, y):
    """
    The exact ``d₊(x, y) = min over even σ of ‖x - σy‖₁`` by enumeration
    of the alternating group.

    Raises
    ------
    ValueError :
        on a shape mismatch or if ``n`` exceeds :data:`MAX_ENUMERATION_N`
    """
    x, y = _pair(x, y)
    _check_guard(len(x))
    table, _ = group_table(len(x), True)
    return _bruteforce_min(x, y, table)

def dist_sym_bruteforce(x, y):
    """
    The exact ``d±(x, y) = min over all σ of ‖x - σy‖₁`` by enumeration
    of the symmetric group.
    """
    x, y = _pair(x, y)
    _check_guard(len(x))
    table, _ = group_table(len(x), False)
    return _bruteforce_min(x, y, table)

def _stack_pair(X, Y):
    X = numpy.asarray(X, dtype='f8')
    Y = numpy.asarray(Y, dtype='f8')
    if X.ndim == 2: X = X[..., None]
    if Y.ndim == 2: Y = Y[..., None]
    if X.ndim != 3 or X.shape != Y.shape:
        raise ValueError("expected two (B, n, d) stacks of the same shape, not %s and %s" % (str(X.shape), str(Y.shape)))
    if not (numpy.isfinite(X).all() and numpy.isfinite(Y).all()):
        raise ValueError("point cloud stacks contain non-finite entries")
    _check_guard(X.shape[1])
    return X, Y

def dist_plus_many(X, Y):
    """
    :func:`dist_plus_bruteforce` over a batch of pairs given as ``(B, n, d)``
    stacks (``(B, n)`` for ``d = 1``).
    """
    X, Y = _stack_pair(X, Y)
    table, _ = group_table(X.shape[1], True)
    return numpy.array([_bruteforce_min(x, y, table) for x, y in zip(X, Y)])

def dist_sym_many(X, Y):
    """
    :func:`dist_sym_bruteforce` over a batch of pairs.
    """
    X, Y = _stack_pair(X, Y)
    table, _ = group_table(X.shape[1], False)
    return numpy.array([_bruteforce_min(x, y, table) for x, y in zip(X, Y)])

def dist_sym_1d(x, y):
    """
    ``d±`` for one-dimensional clouds, computed in ``O(n log n)`` as the
    L1 distance of the sorted vectors.
    """
    x = numpy.asarray(x, dtype='f8')
    y = numpy.asarray(y, dtype='f8')
    if x.ndim == 2 and x.shape[1] == 1: x = x[:, 0]
    if y.ndim == 2 and y.shape[1] == 1: y = y[:, 0]
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("dist_sym_1d expects vectors, not shapes %s and %s" % (str(x.shape), str(y.shape)))
    if len(x) != len(y):
        raise ValueError("vectors differ in length: %d and %d" % (len(x), len(y)))
    if not (numpy.isfinite(x).all() and numpy.isfinite(y).all()):
        raise ValueError("vectors contain non-finite entries")
    return _exact_l1(numpy.sort(x), numpy.sort(y))
