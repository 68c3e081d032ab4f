"""Finite-dimensional spectral primitives.

Everything downstream (localiser assembly, truncation, spectral flow) reduces
to a handful of operations on dense Hermitian matrices: inertia counts,
spectral projections, gaps and norms.  Inertia is computed by two independent
routes, a full Hermitian eigendecomposition and a symmetric-indefinite
triangular factorization, and the two integer count triples must agree
exactly; a mismatch raises :class:`~speclocaliser.errors.BackendDisagreement`
rather than being averaged away.

Dense storage only.  Matrices are capped at ``DENSE_DIM_LIMIT`` rows; the
models in this library stay well under it.
"""

from __future__ import annotations

import dataclasses
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import (
    BackendDisagreement,
    BoundaryEigenvalue,
    DimensionMismatch,
    SingularMatrix,
    ValidationError,
)

__all__ = [
    "DENSE_DIM_LIMIT",
    "HermitianOperator",
    "Inertia",
    "Projection",
    "CommutatorNorm",
    "as_matrix",
    "inertia",
    "signature",
    "positive_spectral_projection",
    "interval_spectral_projection",
    "spectral_gap",
    "singular_gap",
    "operator_norm",
    "commutator_norm",
]

DENSE_DIM_LIMIT = 10_000

# Relative defaults.  zero_tol separates "invertible" from "kernel"; herm_tol
# bounds the allowed asymmetry of inputs; proj_tol bounds idempotency defects.
ZERO_TOL_FACTOR = 1e-8
HERM_TOL_FACTOR = 1e-12
PROJ_TOL = 1e-10
EIG_SEP_TOL = 1e-6


def _validate_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch("expected a square matrix, got shape %s" % (m.shape,))
    if m.shape[0] == 0:
        raise ValidationError("empty matrix")
    if m.shape[0] > DENSE_DIM_LIMIT:
        raise ValidationError(
            "dimension %d exceeds dense limit %d" % (m.shape[0], DENSE_DIM_LIMIT)
        )
    m = m.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValidationError("matrix contains non-finite entries")
    return m


def _check_hermitian(m: np.ndarray, herm_tol: float | None) -> None:
    # Entrywise max defect against a max-entry scale; cheap and dimension-free.
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    tol = herm_tol if herm_tol is not None else HERM_TOL_FACTOR * max(scale, 1.0)
    defect = float(np.max(np.abs(m - m.conj().T)))
    if defect > tol:
        raise ValidationError(
            "matrix is not Hermitian: max asymmetry %.3e exceeds tol %.3e"
            % (defect, tol)
        )


@dataclasses.dataclass(eq=False)
class HermitianOperator:
    """A validated dense Hermitian matrix with cached spectral data."""

    matrix: np.ndarray
    herm_tol: float | None = None

    def __post_init__(self):
        m = _validate_square(self.matrix)
        _check_hermitian(m, self.herm_tol)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        w = np.linalg.eigvalsh(self.matrix)
        w.flags.writeable = False
        return w

    @cached_property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    @cached_property
    def gap(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))


def as_matrix(op) -> np.ndarray:
    """Accept an ndarray or HermitianOperator and return the raw array."""
    if isinstance(op, HermitianOperator):
        return op.matrix
    return _validate_square(op)


def _hermitian_part(op) -> HermitianOperator:
    if isinstance(op, HermitianOperator):
        return op
    return HermitianOperator(op)


@dataclasses.dataclass(frozen=True)
class Inertia:
    """Signed eigenvalue counts of a Hermitian matrix at a given zero_tol."""

    n_pos: int
    n_neg: int
    n_zero: int

    @property
    def dim(self) -> int:
        return self.n_pos + self.n_neg + self.n_zero

    @property
    def signature(self) -> int:
        return self.n_pos - self.n_neg

    def as_tuple(self):
        return (self.n_pos, self.n_neg, self.n_zero)


def _ldl_block_signs(d: np.ndarray) -> tuple[int, int, int]:
    """Sign counts of the block-diagonal factor from an LDL^* factorization.

    The factor is block diagonal with 1x1 and 2x2 pivots; 2x2 blocks are
    flagged by a nonzero subdiagonal entry.  Eigenvalues of each block are
    computed in closed form.
    """
    n = d.shape[0]
    pos = neg = zero = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0:
            a = d[i, i].real
            c = d[i + 1, i + 1].real
            b = abs(d[i + 1, i])
            half_tr = 0.5 * (a + c)
            disc = np.hypot(0.5 * (a - c), b)
            for lam in (half_tr + disc, half_tr - disc):
                if lam > 0:
                    pos += 1
                elif lam < 0:
                    neg += 1
                else:
                    zero += 1
            i += 2
        else:
            lam = d[i, i].real
            if lam > 0:
                pos += 1
            elif lam < 0:
                neg += 1
            else:
                zero += 1
            i += 1
    return pos, neg, zero


def _inertia_factorization(m: np.ndarray, zero_tol: float) -> tuple[int, int, int]:
    """Inertia via LDL^* and Sylvester's law, thresholded by shifting.

    n_pos counts eigenvalues > zero_tol, obtained as the positive count of
    M - zero_tol*I; n_neg symmetrically from M + zero_tol*I.
    """
    n = m.shape[0]
    eye = np.eye(n)
    _, d_minus, _ = sla.ldl(m - zero_tol * eye, hermitian=True)
    n_pos = _ldl_block_signs(d_minus)[0]
    if zero_tol == 0.0:
        n_neg = _ldl_block_signs(d_minus)[1]
    else:
        _, d_plus, _ = sla.ldl(m + zero_tol * eye, hermitian=True)
        n_neg = _ldl_block_signs(d_plus)[1]
    return n_pos, n_neg, n - n_pos - n_neg


def _resolve_zero_tol(scale: float, zero_tol: float | None) -> float:
    if zero_tol is not None:
        if zero_tol < 0:
            raise ValidationError("zero_tol must be non-negative")
        return float(zero_tol)
    return ZERO_TOL_FACTOR * scale


def inertia(op, zero_tol: float | None = None) -> Inertia:
    """Eigenvalue sign counts, cross-checked between two backends.

    zero_tol defaults to 1e-8 times the operator norm.  Counts are strict:
    n_pos counts eigenvalues > zero_tol, n_zero those with |eig| <= zero_tol.
    """
    h = _hermitian_part(op)
    w = h.eigenvalues
    tol = _resolve_zero_tol(h.norm, zero_tol)
    eig_counts = (
        int(np.sum(w > tol)),
        int(np.sum(w < -tol)),
        int(np.sum(np.abs(w) <= tol)),
    )
    factor_counts = _inertia_factorization(h.matrix, tol)
    if eig_counts != factor_counts:
        raise BackendDisagreement(eig_counts, factor_counts, tol)
    return Inertia(*eig_counts)


def signature(op, zero_tol: float | None = None) -> int:
    """Signature n_pos - n_neg with the dual-backend inertia check.

    Only defined for invertible matrices: a signature read off a singular
    matrix is meaningless, so a zero count raises instead of guessing.
    """
    counts = inertia(op, zero_tol=zero_tol)
    if counts.n_zero:
        raise SingularMatrix(
            "%d eigenvalue(s) within zero_tol of 0; signature undefined"
            % counts.n_zero
        )
    return counts.signature


@dataclasses.dataclass(eq=False)
class Projection:
    """A validated orthogonal projection matrix."""

    matrix: np.ndarray
    proj_tol: float = PROJ_TOL

    def __post_init__(self):
        m = _validate_square(self.matrix)
        _check_hermitian(m, self.proj_tol)
        w = np.linalg.eigvalsh(m)
        stray = float(np.max(np.minimum(np.abs(w), np.abs(w - 1.0)))) if w.size else 0.0
        if stray > self.proj_tol:
            raise ValidationError(
                "projection eigenvalues stray from {0,1} by %.3e (tol %.3e)"
                % (stray, self.proj_tol)
            )
        self.matrix = m
        self._rank = int(np.sum(w > 0.5))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self._rank


def positive_spectral_projection(op, zero_tol: float | None = None) -> Projection:
    """Spectral projection onto eigenvalues > 0 of an invertible Hermitian matrix.

    Raises SingularMatrix if any eigenvalue lies within zero_tol of 0.
    """
    h = _hermitian_part(op)
    w, v = np.linalg.eigh(h.matrix)
    tol = _resolve_zero_tol(float(np.max(np.abs(w))), zero_tol)
    if np.any(np.abs(w) <= tol):
        raise SingularMatrix(
            "eigenvalue %.3e within zero_tol %.3e of 0" % (float(np.min(np.abs(w))), tol)
        )
    cols = v[:, w > tol]
    return Projection(cols @ cols.conj().T)


def interval_spectral_projection(
    op, rho: float, eig_sep_tol: float = EIG_SEP_TOL
) -> Projection:
    """Spectral projection onto eigenvalues in [-rho, rho].

    Raises BoundaryEigenvalue if any eigenvalue lies within eig_sep_tol of
    +/-rho; window membership must be unambiguous.
    """
    if rho < 0:
        raise ValidationError("rho must be non-negative")
    h = _hermitian_part(op)
    w, v = np.linalg.eigh(h.matrix)
    dist = np.abs(np.abs(w) - rho)
    if np.any(dist < eig_sep_tol):
        worst = float(np.min(dist))
        raise BoundaryEigenvalue(
            "eigenvalue within %.3e of the window edge +/-%.6g (eig_sep_tol %.3e)"
            % (worst, rho, eig_sep_tol)
        )
    cols = v[:, np.abs(w) <= rho]
    return Projection(cols @ cols.conj().T)


def spectral_gap(op) -> float:
    """min |eigenvalue| of a Hermitian matrix (0 iff singular)."""
    return _hermitian_part(op).gap


def singular_gap(a: np.ndarray) -> float:
    """Smallest singular value; equals 1/||A^-1|| for invertible A."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatch("expected a matrix, got shape %s" % (a.shape,))
    s = sla.svdvals(a)
    return float(s[-1]) if s.size else 0.0


def operator_norm(a) -> float:
    """Operator (2-)norm; uses the symmetric eigensolver for Hermitian input."""
    if isinstance(a, HermitianOperator):
        return a.norm
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatch("expected a matrix, got shape %s" % (a.shape,))
    if a.shape[0] == a.shape[1] and np.array_equal(a, a.conj().T):
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    s = sla.svdvals(a)
    return float(s[0]) if s.size else 0.0


@dataclasses.dataclass(frozen=True)
class CommutatorNorm:
    """Norm of [D, X]: full-matrix value plus the interior-window restriction.

    Periodic identifications put O(box) entries on the seam of [D, X]; the
    interior value excludes rows and columns touching the seam and is the one
    certificates use.  ``interior`` equals ``full`` when no mask is given.
    """

    full: float
    interior: float


def _matrix_2norm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    # Commutators of Hermitian matrices are anti-Hermitian bit-for-bit, so the
    # (much faster) symmetric eigensolver applies to i*A.
    if float(np.max(np.abs(a + a.conj().T))) == 0.0:
        return float(np.max(np.abs(np.linalg.eigvalsh(1j * a))))
    return float(sla.svdvals(a)[0])


def commutator_norm(d, x, interior_mask: np.ndarray | None = None) -> CommutatorNorm:
    dm = as_matrix(d)
    xm = np.asarray(x, dtype=np.complex128)
    if xm.shape != dm.shape:
        raise DimensionMismatch(
            "operand shapes differ: %s vs %s" % (dm.shape, xm.shape)
        )
    comm = dm @ xm - xm @ dm
    full = _matrix_2norm(comm)
    if interior_mask is None:
        return CommutatorNorm(full=full, interior=full)
    mask = np.asarray(interior_mask, dtype=bool)
    if mask.shape != (dm.shape[0],):
        raise DimensionMismatch("interior mask length does not match matrix dimension")
    interior = _matrix_2norm(comm[np.ix_(mask, mask)])
    return CommutatorNorm(full=full, interior=interior)
