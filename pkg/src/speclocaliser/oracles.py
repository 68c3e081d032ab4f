"""Independent oracles predicting each model's pairing.

None of these touch the localiser machinery: the winding number integrates
the symbol's phase around the circle, the lattice band invariant sums
plaquette field strengths of the occupied-band projector, and the graded
index counts kernel dimensions of the off-diagonal block directly.  Expected
values in tests come from here, never from the code under test.

Integer-valued outputs are rounded only when the residue is tiny; a residue
above the tolerance raises ResidueTooLarge instead of returning a guess.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import (
    AmbiguousKernel,
    BoundaryEigenvalue,
    GapClosure,
    NonUnitary,
    ResidueTooLarge,
    SingularSymbol,
    ValidationError,
    WindowInstability,
)
from .models import GradedOperator, circle_symbol_values

__all__ = [
    "winding_number",
    "chern_number_fhs",
    "fredholm_index_graded",
    "toeplitz_index",
]


def winding_number(symbol, grid: int = 4096, residue_tol: float = 0.01) -> int:
    """Winding of det g(theta) around 0, summed from phase increments.

    symbol: finite Fourier coefficients ({k: c}) or a callable returning a
    complex scalar or matrix per theta.  Raises SingularSymbol if the symbol
    (nearly) vanishes on the grid and ResidueTooLarge if the increment sum is
    not close to an integer multiple of 2*pi.
    """
    thetas = 2.0 * np.pi * np.arange(grid) / grid
    if callable(symbol):
        raw = [np.asarray(symbol(t)) for t in thetas]
        vals = np.array(
            [complex(r) if r.ndim == 0 else complex(np.linalg.det(r)) for r in raw]
        )
    else:
        vals = circle_symbol_values(symbol, thetas)
    mags = np.abs(vals)
    if float(np.min(mags)) <= 1e-12 * max(float(np.max(mags)), 1.0):
        raise SingularSymbol("symbol vanishes on the sampling grid")
    increments = np.angle(vals[np.r_[1:grid, 0]] / vals)
    total = float(np.sum(increments)) / (2.0 * np.pi)
    nearest = round(total)
    if abs(total - nearest) > residue_tol:
        raise ResidueTooLarge(
            "winding residue %.3e exceeds %.3e (grid too coarse?)"
            % (abs(total - nearest), residue_tol)
        )
    return int(nearest)


def chern_number_fhs(
    bloch, grid: int = 48, residue_tol: float = 0.01
) -> int:
    """Occupied(lower)-band Chern number via plaquette field strengths.

    bloch: callable (k1, k2) -> Hermitian 2x2 matrix.  Link variables are
    overlaps of lower-band eigenvectors at neighbouring grid momenta; the
    plaquette phase sum is quantized on any grid fine enough to resolve the
    gap.  Raises GapClosure if the bands touch on the grid.
    """
    ks = 2.0 * np.pi * np.arange(grid) / grid
    vecs = np.empty((grid, grid, 2), dtype=complex)
    for i, k1 in enumerate(ks):
        for j, k2 in enumerate(ks):
            h = np.asarray(bloch(k1, k2), dtype=complex)
            w, v = np.linalg.eigh(h)
            if w[1] - w[0] < 1e-8:
                raise GapClosure(
                    "bands touch at k=(%.4f, %.4f); invariant undefined" % (k1, k2)
                )
            vecs[i, j] = v[:, 0]

    u1 = np.einsum("ijc,ijc->ij", vecs.conj(), np.roll(vecs, -1, axis=0))
    u2 = np.einsum("ijc,ijc->ij", vecs.conj(), np.roll(vecs, -1, axis=1))
    if np.any(np.abs(u1) < 1e-12) or np.any(np.abs(u2) < 1e-12):
        raise GapClosure("vanishing link variable; grid too coarse")
    plaq = u1 * np.roll(u2, -1, axis=0) * np.conj(np.roll(u1, -1, axis=1)) * np.conj(u2)
    total = float(np.sum(np.angle(plaq))) / (2.0 * np.pi)
    nearest = round(total)
    if abs(total - nearest) > residue_tol:
        raise ResidueTooLarge(
            "band-invariant residue %.3e exceeds %.3e" % (abs(total - nearest), residue_tol)
        )
    return int(nearest)


def _sector_window_basis(gram: np.ndarray, rho: float, eig_sep_tol: float):
    """Orthonormal basis of the |D| <= rho window within one grading sector.

    gram is the sector block of D^2.  Site-diagonal models make it exactly
    diagonal, in which case the eigensystem is immediate.
    """
    n = gram.shape[0]
    if not np.any(gram - np.diag(np.diagonal(gram))):
        lam = np.diagonal(gram).real.copy()
        vecs = np.eye(n, dtype=complex)
    else:
        lam, vecs = np.linalg.eigh(gram)
    radii = np.sqrt(np.clip(lam, 0.0, None))
    dist = np.abs(radii - rho)
    if np.any(dist < eig_sep_tol):
        raise BoundaryEigenvalue(
            "|D| eigenvalue within %.3e of the window edge %.6g"
            % (float(np.min(dist)), rho)
        )
    return vecs[:, radii <= rho]


def fredholm_index_graded(
    graded: GradedOperator,
    rho_window: float | None = None,
    tol: float | None = None,
    eig_sep_tol: float = 1e-6,
) -> int:
    """dim ker - dim coker of the plus block, restricted to the |D| window.

    Kernel dimensions are column counts minus ranks from singular values of
    the window-restricted block.  Singular values inside the ambiguity decade
    [tol/10, 10*tol] raise AmbiguousKernel; counting them either way would be
    a silent guess.
    """
    dplus = graded.block_plus
    if rho_window is None:
        a = dplus
        n_cols, n_rows = a.shape[1], a.shape[0]
    else:
        basis_plus = _sector_window_basis(
            dplus.conj().T @ dplus, rho_window, eig_sep_tol
        )
        basis_minus = _sector_window_basis(
            dplus @ dplus.conj().T, rho_window, eig_sep_tol
        )
        a = basis_minus.conj().T @ dplus @ basis_plus
        n_cols, n_rows = basis_plus.shape[1], basis_minus.shape[1]

    s = sla.svdvals(a) if min(a.shape) else np.array([])
    scale = float(s[0]) if s.size else 1.0
    if tol is None:
        tol = 1e-6 * max(scale, 1.0)
    if np.any((s >= tol / 10.0) & (s <= 10.0 * tol)):
        raise AmbiguousKernel(
            "singular values inside [%.2e, %.2e]; kernel dimension ill-defined"
            % (tol / 10.0, 10.0 * tol)
        )
    rank = int(np.sum(s > tol))
    return (n_cols - rank) - (n_rows - rank)


def _toeplitz_count(
    w: np.ndarray,
    v: np.ndarray,
    u: np.ndarray,
    window: float,
    margin: float,
    tol: float,
    zero_tol: float,
    eig_sep_tol: float,
) -> int:
    dist = np.abs(w - window)
    if np.any(dist < eig_sep_tol):
        raise BoundaryEigenvalue(
            "D eigenvalue within %.3e of the window edge %.6g"
            % (float(np.min(dist)), window)
        )
    sel = (w > zero_tol) & (w <= window)
    if not sel.any():
        raise ValidationError("empty positive window (0, %.6g]" % window)
    cols = v[:, sel]
    wsel = w[sel]
    a = cols.conj().T @ u @ cols
    uu, s, vh = np.linalg.svd(a)
    if np.any((s >= tol / 10.0) & (s <= 10.0 * tol)):
        raise AmbiguousKernel("singular values in the ambiguity decade around %.2e" % tol)
    small = s < tol
    # Vectors supported at the artificial cut near the window top are
    # compression artifacts; genuine kernel/cokernel modes live at the
    # spectral boundary near 0.
    edge = wsel > window - margin
    ker = coker = 0
    for col in np.flatnonzero(small):
        if float(np.sum(np.abs(vh[col]) ** 2 * edge)) <= 0.5:
            ker += 1
        if float(np.sum(np.abs(uu[:, col]) ** 2 * edge)) <= 0.5:
            coker += 1
    return ker - coker


def toeplitz_index(
    u: np.ndarray,
    dirac,
    window: float,
    margin: float = 5.0,
    tol: float = 1e-8,
    zero_tol: float = 1e-8,
    eig_sep_tol: float = 1e-6,
) -> int:
    """Index of the compression of a unitary to the positive-D window (0, W].

    The count is repeated on the shrunk window W-2 and must agree, otherwise
    WindowInstability is raised.  margin sets the edge zone (in units of D
    eigenvalues) used to discard compression artifacts at the top cut.
    """
    u = np.asarray(u, dtype=np.complex128)
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if defect > 1e-10:
        raise NonUnitary("u fails unitarity by %.3e" % defect)
    dm = np.asarray(dirac.matrix if hasattr(dirac, "matrix") else dirac)
    w, v = np.linalg.eigh(dm)
    first = _toeplitz_count(w, v, u, window, margin, tol, zero_tol, eig_sep_tol)
    second = _toeplitz_count(w, v, u, window - 2.0, margin, tol, zero_tol, eig_sep_tol)
    if first != second:
        raise WindowInstability(
            "index changed from %d to %d when the window shrank from %.6g to %.6g"
            % (first, second, window, window - 2.0)
        )
    return first
