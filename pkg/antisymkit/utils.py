import numpy
import json
from mpi4py import MPI

def local_range(csize, comm):
    """
    The contiguous ``[start, stop)`` range of a collective index space of
    size ``csize`` that the local rank is responsible for.

    Parameters
    ----------
    csize : int
        the collective number of items
    comm : MPI communicator
        the MPI communicator

    Returns
    -------
    start, stop : int
        the global indices of the first and one-past-last local items
    """
    start = comm.rank * csize // comm.size
    stop = (comm.rank + 1) * csize // comm.size
    return start, stop

def GatherArray(data, comm, root=0):
    """
    Concatenate the per-rank blocks of ``data`` along the first axis,
    in rank order.

    The blocks travel as raw bytes through ``Gatherv`` (or ``Allgatherv``
    when ``root`` is Ellipsis); they must agree in dtype and in every
    dimension but the first.

    Parameters
    ----------
    data : numpy.ndarray
        the local block; plain numeric or boolean dtypes only
    comm : MPI communicator
        the MPI communicator
    root : int, or Ellipsis
        the receiving rank, or Ellipsis for every rank

    Returns
    -------
    full : numpy.ndarray or None
        the concatenated array on the receiving rank(s), None elsewhere
    """
    if not isinstance(data, numpy.ndarray):
        raise ValueError("GatherArray needs a numpy array, got %s" % type(data).__name__)
    if data.dtype.hasobject or data.dtype.names is not None:
        raise ValueError("GatherArray cannot ship dtype %s" % data.dtype)
    data = numpy.ascontiguousarray(data)

    layouts = comm.allgather((data.shape, data.dtype.str))
    tail = data.shape[1:]
    if any(shape[1:] != tail or dt != data.dtype.str for shape, dt in layouts):
        raise ValueError("GatherArray blocks disagree across ranks: %s" % layouts)

    rowbytes = int(numpy.prod(tail, dtype='intp')) * data.dtype.itemsize
    rows = numpy.array([shape[0] for shape, _ in layouts], dtype='intp')
    counts = rows * rowbytes
    displs = numpy.concatenate([[0], numpy.cumsum(counts)[:-1]])

    full = None
    if root is Ellipsis or comm.rank == root:
        full = numpy.empty((int(rows.sum()),) + tail, dtype=data.dtype)
        recv = [full, (counts, displs), MPI.BYTE]
    else:
        recv = None

    send = [data, data.nbytes, MPI.BYTE]
    if root is Ellipsis:
        comm.Allgatherv(send, recv)
    else:
        comm.Gatherv(send, recv, root=root)
    return full

class JSONEncoder(json.JSONEncoder):
    """
    JSON encoder for report and manifest payloads: numpy scalars become
    Python numbers, arrays keep their dtype and shape, and permutations
    keep their mapping.
    """
    def default(self, obj):
        from antisymkit.symmetry import Permutation

        if isinstance(obj, Permutation):
            return {'__perm__': obj.mapping.tolist()}
        if isinstance(obj, numpy.ndarray):
            if obj.dtype.names is not None:
                raise TypeError("structured arrays are not JSON serializable")
            return {'__dtype__': obj.dtype.str, '__shape__': list(obj.shape),
                    '__data__': obj.ravel().tolist()}
        if isinstance(obj, numpy.generic):
            return obj.item()
        return json.JSONEncoder.default(self, obj)

class JSONDecoder(json.JSONDecoder):
    """
    The inverse of :class:`JSONEncoder`.
    """
    @staticmethod
    def hook(value):
        if '__dtype__' in value:
            a = numpy.array(value['__data__'], dtype=value['__dtype__'])
            return a.reshape(value['__shape__'])
        if '__perm__' in value:
            from antisymkit.symmetry import Permutation
            return Permutation(value['__perm__'])
        return value

    def __init__(self, *args, **kwargs):
        kwargs['object_hook'] = JSONDecoder.hook
        json.JSONDecoder.__init__(self, *args, **kwargs)

def timer(start, end):
    """ Elapsed time between two ``time.time()`` stamps as ``HH:MM:SS.ss``. """
    minutes, seconds = divmod(end - start, 60)
    hours, minutes = divmod(int(minutes), 60)
    return "%02d:%02d:%05.2f" % (hours, minutes, seconds)
