"""Matrix and vector serialization: dense CSV and the SLP1 binary format.

CSV files are plain comma-separated numeric rows; a single (non-numeric)
header line is tolerated on read and never written.  Values are written
with 17 significant digits so a write/read cycle is exact.

SLP1 is a headered binary layout for large instances:

    bytes 0..3   magic  b"SLP1"
    bytes 4..11  rows   uint64, little-endian
    bytes 12..19 cols   uint64, little-endian
    remainder    rows*cols float64 values, little-endian, row-major

Readers cross-check the payload length against the declared dimensions
and refuse silently-truncated files.
"""

import warnings

import numpy as np

from .errors import DimensionError, ParseError

MAGIC = b"SLP1"
FMT17 = "%.17g"


def fmt17(x):
    return FMT17 % x


def _header_line(path):
    # a retry with skiprows=1 is only legitimate when line 1 is non-numeric;
    # otherwise it would quietly accept ragged numeric files
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(tok) for tok in first.strip().split(",")]
    except ValueError:
        return True
    return False


def _read_csv_array(path):
    with warnings.catch_warnings():
        # an empty file warns before returning a zero-size array; the size
        # check below turns that case into a ParseError
        warnings.simplefilter("ignore", UserWarning)
        try:
            arr = np.loadtxt(path, delimiter=",", ndmin=2)
        except ValueError as exc:
            if not _header_line(path):
                raise ParseError("%s: not a rectangular numeric CSV (%s)" % (path, exc))
            try:
                arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            except ValueError as exc2:
                raise ParseError("%s: not a rectangular numeric CSV (%s)" % (path, exc2))
        except OSError as exc:
            raise ParseError("%s: %s" % (path, exc))
    if arr.size == 0:
        raise ParseError("%s: no numeric rows" % path)
    if not np.all(np.isfinite(arr)):
        raise ParseError("%s: non-finite values" % path)
    return arr


def _read_slp1(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 20:
        raise ParseError("%s: SLP1 header truncated" % path)
    rows = int(np.frombuffer(blob, dtype="<u8", count=1, offset=4)[0])
    cols = int(np.frombuffer(blob, dtype="<u8", count=1, offset=12)[0])
    payload = blob[20:]
    expected = rows * cols * 8
    if len(payload) != expected:
        raise ParseError(
            "%s: payload is %d bytes, dims %dx%d require %d"
            % (path, len(payload), rows, cols, expected)
        )
    arr = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ParseError("%s: non-finite values" % path)
    return arr


def _is_slp1(path):
    try:
        with open(path, "rb") as fh:
            return fh.read(4) == MAGIC
    except OSError as exc:
        raise ParseError("%s: %s" % (path, exc))


def load_matrix(path):
    """Read a 2-D array from CSV or SLP1, sniffed by magic bytes."""
    return _read_slp1(path) if _is_slp1(path) else _read_csv_array(path)


def load_vector(path):
    """Read a 1-D array; accepts a single CSV column/row or an SLP1 n x 1."""
    arr = load_matrix(path)
    if 1 not in arr.shape and arr.ndim == 2:
        raise ParseError("%s: expected a vector, got shape %s" % (path, arr.shape))
    return arr.ravel()


def save_matrix(path, arr):
    """Write a 2-D array; paths ending in .slp1 use the binary format."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError("save_matrix needs a 2-D array")
    if str(path).endswith(".slp1"):
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(np.asarray(arr.shape, dtype="<u8").tobytes())
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    else:
        np.savetxt(path, arr, delimiter=",", fmt=FMT17)


def save_vector(path, v):
    """Write a 1-D array, one value per CSV line (or an SLP1 n x 1)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError("save_vector needs a 1-D array")
    if str(path).endswith(".slp1"):
        save_matrix(path, v.reshape(-1, 1))
    else:
        np.savetxt(path, v, delimiter=",", fmt=FMT17)
