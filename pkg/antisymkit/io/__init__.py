from .base import FileType, FileFormatError
from .binary import BinaryFile
