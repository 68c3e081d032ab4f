"""Matrix Market round-trips at full double precision."""

import numpy as np
import pytest

from speclocaliser import FormatError, ValidationError
from speclocaliser.mmio import read_matrix, write_matrix
from conftest import random_hermitian


def test_round_trip_bitwise(tmp_path, rng):
    m = random_hermitian(rng, 9)
    path = write_matrix(tmp_path / "h.mtx", m)
    back = read_matrix(path)
    assert np.array_equal(back, m)


def test_round_trip_non_square(tmp_path, rng):
    m = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    back = read_matrix(write_matrix(tmp_path / "g.mtx", m))
    assert np.array_equal(back, m)


def test_round_trip_extreme_entries(tmp_path):
    m = np.array([[1e-300 + 1e300j, np.pi], [np.e, -1.0 / 3.0]])
    back = read_matrix(write_matrix(tmp_path / "x.mtx", m))
    assert np.array_equal(back, m)


def test_write_rejects_non_finite(tmp_path):
    with pytest.raises(ValidationError):
        write_matrix(tmp_path / "bad.mtx", np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_write_rejects_non_matrix(tmp_path):
    with pytest.raises(ValidationError):
        write_matrix(tmp_path / "bad.mtx", np.zeros(4))


def test_read_missing_file(tmp_path):
    with pytest.raises(FormatError):
        read_matrix(tmp_path / "nothing.mtx")


def test_read_garbage(tmp_path):
    path = tmp_path / "garbage.mtx"
    path.write_text("not a matrix market file\n1 2 3\n")
    with pytest.raises(FormatError):
        read_matrix(path)
