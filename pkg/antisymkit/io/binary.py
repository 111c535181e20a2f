"""
Column-major little-endian binary containers.

Every file written here starts with a fixed numpy-structured header whose
first two fields are ``magic`` and ``version`` and whose last field is the
CRC32 ``checksum`` of everything after the header. The body is a sequence
of contiguous blocks, read back through :class:`BinaryFile`.
"""
import numpy
import os
import zlib
import logging

from .base import FileType, FileFormatError

logger = logging.getLogger('BinaryFile')

def getsize(filename, header_size, rowsize):
    """
    Number of ``rowsize``-byte rows stored after a ``header_size`` header.

    Raises
    ------
    FileFormatError :
        if the body does not hold a whole number of rows
    """
    nrows, leftover = divmod(os.path.getsize(filename) - header_size, rowsize)
    if nrows < 0 or leftover:
        raise FileFormatError("'%s' does not hold a whole number of %d-byte rows" % (filename, rowsize))
    return nrows


class BinaryFile(FileType):
    """
    Reader for a body made of one contiguous block per column.

    Block ``k`` holds all ``size`` values of column ``k``; the blocks
    follow the header back to back in dtype order.

    Parameters
    ----------
    path : str
        the file to read
    dtype : numpy.dtype or list of tuples
        named columns with their (possibly subarray) dtypes
    header_size : int, optional
        number of bytes preceding the first block
    size : int, optional
        number of rows; by default deduced from the file length
    """
    def __init__(self, path, dtype, header_size=0, size=None):
        self.path = path
        dtype = numpy.dtype(dtype)
        if dtype.names is None:
            raise TypeError("`dtype` must have named columns")

        if size is None:
            size = getsize(path, header_size, dtype.itemsize)
        elif size != int(size):
            raise TypeError("`size` must be an integer, got %r" % (size,))
        FileType.__init__(self, dtype, size)

        self.offsets, start = {}, header_size
        for name in self:
            self.offsets[name] = start
            start += self.size * self.dtype[name].itemsize

    def read(self, columns, start, stop, step=1):
        """
        Read rows ``start:stop:step`` of ``columns`` into a structured array.

        Raises
        ------
        FileFormatError :
            if a column block ends before ``stop``
        """
        out = numpy.empty(len(range(start, stop, step)),
                          dtype=[(name, self.dtype[name]) for name in columns])
        nrows = max(stop - start, 0)

        with open(self.path, 'rb') as ff:
            for name in columns:
                dt = self.dtype[name]
                ff.seek(self.offsets[name] + start * dt.itemsize)
                count = nrows * int(numpy.prod(dt.shape, dtype='intp'))
                block = numpy.fromfile(ff, dtype=dt.base, count=count)
                if block.size != count:
                    raise FileFormatError("'%s' is truncated in column '%s'" % (self.path, name))
                out[name] = block.reshape((nrows,) + dt.shape)[::step]
        return out

def _crc32(chunks):
    crc = 0
    for chunk in chunks:
        crc = zlib.crc32(chunk, crc)
    return crc & 0xffffffff

def write_binary(path, header, blocks):
    """
    Write a header record followed by a sequence of contiguous blocks.

    The ``checksum`` field of ``header`` is overwritten with the CRC32 of
    the concatenated block bytes. All blocks are written in the byte order
    of their dtype, which callers should pin to little-endian.

    Parameters
    ----------
    path : str
        the output file name
    header : numpy.ndarray
        a structured array of length 1; its dtype must carry a
        ``checksum`` field of type ``'<u4'``
    blocks : list of numpy.ndarray
        the body blocks, written in order

    Returns
    -------
    checksum : int
        the CRC32 written into the header
    """
    header = numpy.array(header, copy=True).reshape(1)
    if 'checksum' not in header.dtype.names:
        raise ValueError("header dtype must carry a `checksum` field")

    body = [numpy.ascontiguousarray(b).tobytes() for b in blocks]
    header['checksum'] = _crc32(body)

    with open(path, 'wb') as ff:
        ff.write(header.tobytes())
        for b in body:
            ff.write(b)

    logger.debug("wrote %d bytes to '%s'" % (header.nbytes + sum(len(b) for b in body), path))
    return int(header['checksum'][0])

def read_header(path, header_dtype, magic, version):
    """
    Read and validate the header record of a file written by
    :func:`write_binary`.

    Parameters
    ----------
    path : str
        the file to read
    header_dtype : numpy.dtype
        the structured dtype of the header
    magic : bytes
        the expected value of the ``magic`` field
    version : int
        the supported value of the ``version`` field

    Returns
    -------
    header : numpy.void
        the header record

    Raises
    ------
    FileFormatError :
        if the file is empty or shorter than the header, or if
        magic or version do not match
    """
    header_dtype = numpy.dtype(header_dtype)
    if not os.path.exists(path):
        raise FileNotFoundError("no such file: '%s'" % path)

    with open(path, 'rb') as ff:
        raw = ff.read(header_dtype.itemsize)

    if len(raw) == 0:
        raise FileFormatError("'%s' is empty" % path)
    if len(raw) < header_dtype.itemsize:
        raise FileFormatError("'%s' is truncated inside the header" % path)

    header = numpy.frombuffer(raw, dtype=header_dtype)[0]
    if bytes(header['magic']) != magic:
        raise FileFormatError("'%s' has magic %r, expected %r" % (path, bytes(header['magic']), magic))
    if int(header['version']) != version:
        raise FileFormatError("'%s' has unsupported version %d, expected %d" % (path, int(header['version']), version))
    return header

def check_body(path, header_size, nbytes, checksum, chunksize=1 << 24):
    """
    Verify that the body of ``path`` is exactly ``nbytes`` long and
    matches ``checksum``.

    Raises
    ------
    FileFormatError :
        on truncation, trailing bytes, or a checksum mismatch
    """
    actual = os.path.getsize(path) - header_size
    if actual < nbytes:
        raise FileFormatError("'%s' is truncated: %d body bytes, expected %d" % (path, actual, nbytes))
    if actual > nbytes:
        raise FileFormatError("'%s' has %d unexpected trailing bytes" % (path, actual - nbytes))

    def chunks():
        with open(path, 'rb') as ff:
            ff.seek(header_size)
            while True:
                chunk = ff.read(chunksize)
                if not chunk: break
                yield chunk

    crc = _crc32(chunks())
    if crc != int(checksum):
        raise FileFormatError("checksum mismatch in '%s': %08x != %08x" % (path, crc, int(checksum)))
