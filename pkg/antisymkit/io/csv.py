import os
import logging
import pandas

logger = logging.getLogger('csv')

def write_table(path, columns, index=None):
    """
    Write a table of equal-length columns to ``path`` as CSV.

    Parameters
    ----------
    path : str
        the output file name
    columns : dict or pandas.DataFrame
        the column name -> 1-d array mapping to write; column order is kept
    index : list of str, optional
        the order of the columns in the file; default is the order of ``columns``
    """
    df = pandas.DataFrame(columns)
    if index is not None:
        df = df[list(index)]
    df.to_csv(path, index=False, float_format='%.17g')
    logger.debug("wrote %d rows to '%s'" % (len(df), path))
    return df

def read_table(path):
    """
    Read a CSV table written by :func:`write_table` or :func:`append_row`
    as a :class:`pandas.DataFrame`.
    """
    return pandas.read_csv(path)

def append_row(path, row, columns=None):
    """
    Append a single row to the CSV file at ``path``, writing the header
    line first if the file does not exist yet.

    Parameters
    ----------
    path : str
        the results file
    row : dict
        the values of the new row
    columns : list of str, optional
        the column order; default is the key order of ``row``. If the file
        already exists, its header takes precedence.
    """
    if columns is None:
        columns = list(row)

    exists = os.path.exists(path) and os.path.getsize(path) > 0
    if exists:
        header = list(pandas.read_csv(path, nrows=0).columns)
        missing = set(row) - set(header)
        if missing:
            raise ValueError("columns %s not present in existing results file '%s'" % (sorted(missing), path))
        columns = header

    df = pandas.DataFrame([row]).reindex(columns=list(columns))
    df.to_csv(path, mode='a' if exists else 'w', header=not exists, index=False, float_format='%.17g')
