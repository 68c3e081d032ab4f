"""Matrix Market I/O at full double precision.

Matrices are exchanged as dense Matrix Market array files written with 17
significant digits, which round-trips IEEE doubles bitwise.  Reading goes
through the same routine scipy uses for writing, so files produced here load
back identically on any platform.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io

from .errors import FormatError, ValidationError

__all__ = ["write_matrix", "read_matrix", "MM_PRECISION"]

MM_PRECISION = 17


def write_matrix(path, m: np.ndarray, comment: str = "") -> Path:
    """Write a dense complex matrix as a Matrix Market array file."""
    path = Path(path)
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ValidationError("expected a matrix, got shape %s" % (m.shape,))
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValidationError("matrix contains non-finite entries")
    try:
        scipy.io.mmwrite(
            str(path), m, comment=comment, field="complex", precision=MM_PRECISION
        )
    except Exception as exc:  # pragma: no cover - scipy failure modes vary
        raise FormatError("failed to write %s: %s" % (path, exc)) from exc
    return path


def read_matrix(path) -> np.ndarray:
    """Read a Matrix Market file back as a dense complex matrix."""
    path = Path(path)
    if not path.exists():
        raise FormatError("no such file: %s" % path)
    try:
        m = scipy.io.mmread(str(path))
    except Exception as exc:
        raise FormatError("failed to parse %s: %s" % (path, exc)) from exc
    m = np.asarray(m)
    if m.ndim != 2:
        raise FormatError("%s does not contain a matrix" % path)
    return m.astype(np.complex128)
