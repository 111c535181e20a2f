import numpy
from abc import abstractmethod

class FileFormatError(ValueError):
    """
    Raised when a file on disk does not match the layout its reader
    expects: empty or truncated files, a foreign magic tag, an unsupported
    version, or a checksum mismatch.
    """
    pass

class FileType(object):
    """
    Base class of the row-oriented binary readers.

    A file holds ``size`` rows of the structured ``dtype``; subclasses
    implement :func:`read` for a subset of the named fields.

    Parameters
    ----------
    dtype : numpy.dtype
        the row layout; every field is a column
    size : int
        the number of rows
    """
    def __init__(self, dtype, size):
        self.dtype = numpy.dtype(dtype)
        if self.dtype.names is None:
            raise TypeError("`dtype` must have named columns")
        self.size = int(size)

    @abstractmethod
    def read(self, columns, start, stop, step=1):
        """
        The rows ``start:stop:step`` of ``columns`` as a structured array.
        """
        pass

    def keys(self):
        """ The column names, in file order. """
        return list(self.dtype.names)

    def __len__(self):
        return self.size

    def __iter__(self):
        return iter(self.keys())

    def __contains__(self, col):
        return col in self.dtype.names

    def __repr__(self):
        return "%s(path=%s, columns=%s, size=%d)" % (self.__class__.__name__,
                getattr(self, 'path', None), self.keys(), self.size)

    def __getitem__(self, s):
        """
        A column name selects one column over all rows; an integer or a
        slice selects rows of every column.
        """
        if isinstance(s, str):
            if s not in self:
                raise IndexError("no column '%s' in %r" % (s, self))
            return self.read([s], 0, self.size)[s]

        if isinstance(s, (int, numpy.integer)):
            i = int(s) + self.size if s < 0 else int(s)
            if not 0 <= i < self.size:
                raise IndexError("row %d out of range for %d rows" % (int(s), self.size))
            return self.read(self.keys(), i, i + 1)
        if isinstance(s, slice):
            return self.read(self.keys(), *s.indices(self.size))
        raise IndexError("cannot index %r with %r" % (self, s))
