import numpy

class MPIRandomState:
    """ A random number generator that is invariant against the number of
        ranks, when the total number of items requested is kept the same.

        Every item owns a private counter-based Philox stream, keyed by the
        seed and addressed by the global index of the item. The values drawn
        for an item therefore depend only on ``(seed, index, itemshape)``,
        never on how the items are distributed over ranks or threads.

        The constructor is a collective call; the samplers are local.

        Parameters
        ----------
        comm : MPI communicator
            the communicator the items are distributed over
        seed : int
            the non-negative seed shared by all ranks
        size : int
            the number of items held on the local rank
        offset : int, optional
            a global index offset, used to draw independent blocks of items
            (e.g. the train / validation / test splits) from one seed
    """
    def __init__(self, comm, seed, size, offset=0):
        if seed is None or int(seed) < 0:
            raise ValueError("`seed` must be a non-negative integer, not %s" % str(seed))
        if int(size) < 0:
            raise ValueError("`size` must be non-negative")

        self.comm = comm
        self.seed = int(seed)
        self.size = int(size)

        sizes = comm.allgather(self.size)
        self.csize = int(numpy.sum(sizes, dtype='intp'))

        self._start = int(offset) + int(numpy.sum(sizes[:comm.rank], dtype='intp'))
        self._end = self._start + self.size

    def item_rng(self, index):
        """
        The :class:`numpy.random.Generator` that owns the global item ``index``.
        """
        bitgen = numpy.random.Philox(key=self.seed, counter=[0, 0, 0, int(index)])
        return numpy.random.Generator(bitgen)

    def uniform(self, low=0., high=1.0, itemshape=(), dtype='f8'):
        """ Produce `self.size` uniforms on ``[low, high)``, each of shape itemshape. """
        if not high > low:
            raise ValueError("`high` must be larger than `low` for uniform sampling")
        def sampler(rng, shape):
            return rng.uniform(low=low, high=high, size=shape)
        return self._call_rngmethod(sampler, itemshape, dtype)

    def _call_rngmethod(self, sampler, itemshape, dtype):
        """
            Loop over the local items, calling ``sampler(rng, itemshape)``
            with the stream owned by each item.
        """
        itemshape = tuple(itemshape)
        r = numpy.empty((self.size,) + itemshape, dtype=dtype)
        for i, index in enumerate(range(self._start, self._end)):
            r[i] = sampler(self.item_rng(index), itemshape)
        return r
