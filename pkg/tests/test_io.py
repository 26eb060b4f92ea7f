"""File formats: numeric CSV and the SLP1 binary container."""

import numpy as np
import pytest

from slopekit.errors import DimensionError, ParseError
from slopekit.io import (
    MAGIC,
    fmt17,
    load_matrix,
    load_vector,
    save_matrix,
    save_vector,
)


def test_csv_matrix_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.normal(size=(7, 3)) * np.exp(rng.normal(size=(7, 3)) * 5)
    path = tmp_path / "m.csv"
    save_matrix(str(path), arr)
    np.testing.assert_array_equal(load_matrix(str(path)), arr)


def test_slp1_matrix_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(1)
    arr = rng.normal(size=(13, 5))
    path = tmp_path / "m.slp1"
    save_matrix(str(path), arr)
    blob = path.read_bytes()
    assert blob[:4] == MAGIC
    assert int.from_bytes(blob[4:12], "little") == 13
    assert int.from_bytes(blob[12:20], "little") == 5
    assert len(blob) == 20 + 13 * 5 * 8
    np.testing.assert_array_equal(load_matrix(str(path)), arr)


def test_vector_roundtrips(tmp_path):
    v = np.array([1.0, -2.5, 1e300, 3e-12])
    csv_path = tmp_path / "v.csv"
    save_vector(str(csv_path), v)
    np.testing.assert_array_equal(load_vector(str(csv_path)), v)
    bin_path = tmp_path / "v.slp1"
    save_vector(str(bin_path), v)
    np.testing.assert_array_equal(load_vector(str(bin_path)), v)
    # the binary layout stores a vector as a single column
    assert load_matrix(str(bin_path)).shape == (4, 1)


def test_vector_accepts_single_row(tmp_path):
    path = tmp_path / "row.csv"
    path.write_text("1.5,2.5,3.5\n")
    np.testing.assert_array_equal(load_vector(str(path)), [1.5, 2.5, 3.5])


def test_header_line_is_tolerated(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    np.testing.assert_array_equal(load_matrix(str(path)),
                                  [[1.0, 2.0], [3.0, 4.0]])


def test_ragged_numeric_file_is_refused(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(ParseError):
        load_matrix(str(path))


def test_ragged_after_header_is_refused(tmp_path):
    path = tmp_path / "hragged.csv"
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ParseError):
        load_matrix(str(path))


def test_non_finite_values_are_refused(tmp_path):
    path = tmp_path / "nan.csv"
    path.write_text("1,nan\n2,3\n")
    with pytest.raises(ParseError):
        load_matrix(str(path))
    binp = tmp_path / "inf.slp1"
    arr = np.array([[1.0, np.inf]])
    with open(binp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.asarray(arr.shape, dtype="<u8").tobytes())
        fh.write(arr.astype("<f8").tobytes())
    with pytest.raises(ParseError):
        load_matrix(str(binp))


def test_empty_and_missing_files(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ParseError):
        load_matrix(str(path))
    with pytest.raises(ParseError):
        load_matrix(str(tmp_path / "nope.csv"))


def test_truncated_binary_is_refused(tmp_path):
    path = tmp_path / "t.slp1"
    save_matrix(str(path), np.ones((4, 4)))
    blob = path.read_bytes()
    path.write_bytes(blob[:-8])
    with pytest.raises(ParseError):
        load_matrix(str(path))
    short = tmp_path / "short.slp1"
    short.write_bytes(MAGIC + b"\x01")
    with pytest.raises(ParseError):
        load_matrix(str(short))


def test_matrix_rejected_as_vector(tmp_path):
    path = tmp_path / "m.csv"
    save_matrix(str(path), np.ones((3, 2)))
    with pytest.raises(ParseError):
        load_vector(str(path))


def test_save_shape_validation(tmp_path):
    with pytest.raises(DimensionError):
        save_matrix(str(tmp_path / "x.csv"), np.ones(3))
    with pytest.raises(DimensionError):
        save_vector(str(tmp_path / "x.csv"), np.ones((3, 1)))


def test_fmt17_roundtrips_doubles():
    rng = np.random.default_rng(2)
    for x in rng.normal(size=50) * 10.0 ** rng.integers(-200, 200, size=50):
        assert float(fmt17(x)) == x
