"""Localiser assembly, truncation, validity certificates and pairings.

The even localiser for a graded model (D, Gamma, H) is kappa*D + Gamma*H; the
odd localiser for (D, G) doubles the space to [[kappa*D, G], [G*, -kappa*D]].
Truncation compresses onto the spectral window |D| <= rho, expressed in the
eigenbasis of D ordered by eigenvalue (ties by original index).  The pairing
is read off the truncated matrix as half its signature, with the graded index
of D added in the even case.

Validity is tracked through certificates rather than asserted silently.  Hard
conditions (the kappa bound, rho > 2*gap/kappa, containment of the window in
the box) gate the truncation theorem and are enforced in strict mode.  The
coupling and endpoint conditions from the block-decomposition argument are
recorded but never enforced: they are sufficient-only and fail by a wide
margin on standard parameter sets whose pairings are nevertheless exact, so
they ship as diagnostics.  Guarantee certificates (truncated gap >= gap/2,
complement gap, full-box gap >= theoretical bound) are marked applicable only
when the hypotheses backing them hold.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .core import (
    ZERO_TOL_FACTOR,
    HermitianOperator,
    Inertia,
    inertia,
    spectral_gap,
)
from .errors import (
    BoundaryEigenvalue,
    ContainmentViolation,
    DimensionMismatch,
    HypothesisViolated,
    IntegerityViolation,
    SingularMatrix,
    StrictModeViolation,
    ValidationError,
)
from .models import ModelInstance
from .oracles import fredholm_index_graded

__all__ = [
    "LocaliserParams",
    "GapCertificate",
    "RegimeCertificate",
    "TruncatedLocaliser",
    "PairingResult",
    "build_even_localiser",
    "build_odd_localiser",
    "validate_infinite_regime",
    "validate_truncation_params",
    "truncate",
    "complement_block",
    "pairing_even",
    "pairing_odd",
    "pairing",
]

EIG_SEP_TOL = 1e-6

# (47/192)^(1/4): prefactor of sqrt(g*kappa*rho) in the coupling condition.
_COUPLING_FACTOR = (47.0 / 192.0) ** 0.25
# sqrt(47/48): prefactor of kappa*rho in the complement gap bound.
_COMPLEMENT_FACTOR = math.sqrt(47.0 / 48.0)


@dataclasses.dataclass(frozen=True)
class LocaliserParams:
    kappa: float
    rho: float
    mode: str = "permissive"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValidationError("kappa must be positive")
        if self.rho <= 0:
            raise ValidationError("rho must be positive")
        if self.mode not in ("strict", "permissive"):
            raise ValidationError("mode must be 'strict' or 'permissive'")


@dataclasses.dataclass(frozen=True)
class GapCertificate:
    """One recorded inequality: ``measured <relation> bound``.

    kind "condition": an input hypothesis.  Hard conditions are enforced in
    strict mode; soft ones (sufficient-only bounds) are recorded always and
    enforced never.  kind "guarantee": a theorem output; ``applicable`` says
    whether the hypotheses backing it held, and only applicable guarantees
    can be violated.
    """

    name: str
    measured: float
    bound: float
    relation: str
    satisfied: bool
    kind: str = "condition"
    hard: bool = False
    applicable: bool = True
    detail: str = ""

    @property
    def violated(self) -> bool:
        return self.kind == "guarantee" and self.applicable and not self.satisfied

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["violated"] = self.violated
        return d


def _compare(measured: float, relation: str, bound: float) -> bool:
    if relation == "<=":
        return measured <= bound
    if relation == "<":
        return measured < bound
    if relation == ">=":
        return measured >= bound
    if relation == ">":
        return measured > bound
    raise ValidationError("unknown relation %r" % relation)


def _certificate(
    name, measured, bound, relation, kind="condition", hard=False,
    applicable=True, detail="", slack=0.0,
):
    # slack loosens the test without touching the recorded bound; used by
    # measured-gap guarantees to absorb eigensolver roundoff.
    effective = bound - slack if relation in (">=", ">") else bound + slack
    return GapCertificate(
        name=name,
        measured=float(measured),
        bound=float(bound),
        relation=relation,
        satisfied=_compare(measured, relation, effective),
        kind=kind,
        hard=hard,
        applicable=applicable,
        detail=detail,
    )


@dataclasses.dataclass(frozen=True)
class RegimeCertificate:
    """Invertibility data for the untruncated (full-box) localiser."""

    kappa: float
    k_gap: float
    comm_interior: float
    comm_full: float
    hypothesis_holds: bool
    theoretical_bound: float
    measured_gap: float | None

    def gap_certificate(self) -> GapCertificate:
        measured = self.measured_gap if self.measured_gap is not None else float("nan")
        return GapCertificate(
            name="regime_gap",
            measured=measured,
            bound=self.theoretical_bound,
            relation=">=",
            satisfied=bool(
                self.measured_gap is not None
                and self.measured_gap >= self.theoretical_bound - 1e-9
            ),
            kind="guarantee",
            applicable=bool(self.hypothesis_holds and self.measured_gap is not None),
            detail="seam-free localiser gap vs sqrt(g^2 - kappa*||[D,K]||)",
        )


def build_even_localiser(model: ModelInstance, kappa: float) -> HermitianOperator:
    """kappa*D + Gamma*H for a graded even model."""
    if model.parity != "even":
        raise ValidationError("even localiser needs an even model")
    if kappa <= 0:
        raise ValidationError("kappa must be positive")
    gamma = model.grading.astype(np.float64)
    h = model.k_rep
    scale = max(float(np.max(np.abs(h))), 1.0)
    defect = float(np.max(np.abs(gamma[:, None] * h - h * gamma[None, :])))
    if defect > 1e-12 * scale:
        raise ValidationError(
            "K does not commute with the grading (defect %.3e)" % defect
        )
    mat = kappa * model.dirac + gamma[:, None] * h
    return HermitianOperator(mat)


def build_odd_localiser(model: ModelInstance, kappa: float) -> HermitianOperator:
    """[[kappa*D, G], [G*, -kappa*D]] for an odd model."""
    if model.parity != "odd":
        raise ValidationError("odd localiser needs an odd model")
    if kappa <= 0:
        raise ValidationError("kappa must be positive")
    d = model.dirac
    g = model.k_rep
    n = d.shape[0]
    mat = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    mat[:n, :n] = kappa * d
    mat[n:, n:] = -kappa * d
    mat[:n, n:] = g
    mat[n:, :n] = g.conj().T
    return HermitianOperator(mat)


def _build_localiser(model: ModelInstance, kappa: float) -> HermitianOperator:
    if model.parity == "even":
        return build_even_localiser(model, kappa)
    return build_odd_localiser(model, kappa)


def _seam_free_localiser(model: ModelInstance, kappa: float) -> HermitianOperator:
    """The localiser compressed onto |D| <= containment radius.

    Equals the full localiser when the containment window already covers the
    whole spectrum of D (open-boundary models).
    """
    loc = _build_localiser(model, kappa)
    w, v = model.dirac_eigensystem()
    mask = np.abs(w) <= model.containment_radius + 1e-9
    if mask.all() or not mask.any():
        return loc
    basis, _ = _window_basis(loc.matrix, mask, v)
    return _compress(loc.matrix, basis)


def validate_infinite_regime(
    model: ModelInstance, kappa: float, mode: str = "permissive", measure: bool = True
) -> RegimeCertificate:
    """Check kappa * ||[D, K]|| < g^2 and measure the untruncated localiser gap.

    The commutator norm is the interior one, and the gap is measured on the
    localiser compressed to the containment window of D: the periodic seam
    of a finite box carries commutator entries of size O(box) and bound
    eigenmodes with no infinite-volume counterpart (at strict circle
    parameters the lowest full-box eigenvector has all its mass on the wrap
    rows).  In strict mode a failed hypothesis raises HypothesisViolated.
    The gap is measured only when the hypothesis holds; that is the only
    case where the theoretical bound makes a claim.
    """
    g = model.k_gap()
    comm = model.dirac_commutator()
    holds = kappa * comm.interior < g * g
    bound = math.sqrt(max(g * g - kappa * comm.interior, 0.0))
    if mode == "strict" and not holds:
        raise HypothesisViolated(
            "kappa*||[D,K]|| = %.6g is not below g^2 = %.6g"
            % (kappa * comm.interior, g * g)
        )
    measured = None
    if measure and holds:
        key = ("regime_gap", float(kappa))
        if key not in model.cache:
            model.cache[key] = spectral_gap(_seam_free_localiser(model, kappa))
        measured = model.cache[key]
    return RegimeCertificate(
        kappa=float(kappa),
        k_gap=g,
        comm_interior=comm.interior,
        comm_full=comm.full,
        hypothesis_holds=bool(holds),
        theoretical_bound=bound,
        measured_gap=measured,
    )


def validate_truncation_params(
    model: ModelInstance, params: LocaliserParams, include_commutator: bool = True
) -> list[GapCertificate]:
    """Certificates for the truncation theorem hypotheses.

    Hard: kappa_bound (kappa <= g^3 / (12 ||K|| ||[D,K]||)), rho_bound
    (rho > 2g/kappa), containment (rho <= containment radius).  Soft:
    coupling (||K|| < (47/192)^(1/4) sqrt(g kappa rho)) and endpoint
    (max(1, ||K||) < kappa rho).  In strict mode a failed hard certificate
    raises; soft failures never raise.  include_commutator=False drops the
    kappa_bound certificate, whose commutator norm is the one expensive
    input on large lattice models; permissive-only.
    """
    g = model.k_gap()
    k_norm = model.k_norm()
    kappa, rho = params.kappa, params.rho

    certs = []
    if include_commutator:
        comm = model.dirac_commutator().interior
        kappa_cap = math.inf if comm == 0 else g**3 / (12.0 * k_norm * comm)
        certs.append(
            _certificate("kappa_bound", kappa, kappa_cap, "<=", hard=True,
                         detail="kappa <= g^3 / (12 ||K|| ||[D,K]||)")
        )
    elif params.mode == "strict":
        raise ValidationError("strict mode requires the commutator certificate")
    certs += [
        _certificate("rho_bound", rho, 2.0 * g / kappa, ">", hard=True,
                     detail="rho > 2 g / kappa"),
        _certificate("containment", rho, model.containment_radius, "<=", hard=True,
                     detail="window contained in the box"),
        _certificate("coupling", k_norm, _COUPLING_FACTOR * math.sqrt(g * kappa * rho),
                     "<", detail="||K|| < (47/192)^(1/4) sqrt(g kappa rho); sufficient only"),
        _certificate("endpoint", max(1.0, k_norm), kappa * rho, "<",
                     detail="max(1, ||K||) < kappa rho; sufficient only"),
    ]
    if params.mode == "strict":
        for cert in certs:
            if cert.hard and not cert.satisfied:
                exc = ContainmentViolation if cert.name == "containment" else StrictModeViolation
                raise exc(
                    "strict mode: %s fails (%.6g %s %.6g is false)"
                    % (cert.name, cert.measured, cert.relation, cert.bound)
                )
    return certs


@dataclasses.dataclass(eq=False)
class TruncatedLocaliser:
    """A localiser compressed onto the |D| <= rho window.

    basis holds the orthonormal window columns in the full space (block
    doubled for odd localisers); window_eigs the D eigenvalues kept.
    """

    operator: HermitianOperator
    basis: np.ndarray
    window_eigs: np.ndarray
    rho: float
    doubled: bool

    @property
    def dim(self) -> int:
        return self.operator.dim

    @property
    def rank(self) -> int:
        """Rank of the window projection the compression acts on."""
        return self.operator.dim


def _window_mask(w: np.ndarray, rho: float, eig_sep_tol: float) -> np.ndarray:
    dist = np.abs(np.abs(w) - rho)
    if np.any(dist < eig_sep_tol):
        raise BoundaryEigenvalue(
            "D eigenvalue within %.3e of the window edge %.6g" % (float(np.min(dist)), rho)
        )
    mask = np.abs(w) <= rho
    if not mask.any():
        raise ValidationError("empty truncation window at rho=%.6g" % rho)
    return mask


def _resolve_eigensystem(dirac, eigensystem):
    if eigensystem is not None:
        return eigensystem
    d = HermitianOperator(np.asarray(dirac)) if not isinstance(dirac, HermitianOperator) else dirac
    w, v = np.linalg.eigh(d.matrix)
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _compress(op_matrix: np.ndarray, basis: np.ndarray) -> HermitianOperator:
    sub = basis.conj().T @ op_matrix @ basis
    return HermitianOperator((sub + sub.conj().T) / 2.0)


def _window_basis(
    op_matrix: np.ndarray, mask: np.ndarray, v: np.ndarray
) -> tuple[np.ndarray, bool]:
    d_dim = v.shape[0]
    cols = v[:, mask]
    if op_matrix.shape[0] == d_dim:
        return cols, False
    if op_matrix.shape[0] == 2 * d_dim:
        k = cols.shape[1]
        basis = np.zeros((2 * d_dim, 2 * k), dtype=np.complex128)
        basis[:d_dim, :k] = cols
        basis[d_dim:, k:] = cols
        return basis, True
    raise DimensionMismatch(
        "operator dimension %d is neither d nor 2d for d=%d"
        % (op_matrix.shape[0], d_dim)
    )


def truncate(
    op,
    dirac,
    rho: float,
    eigensystem=None,
    eig_sep_tol: float = EIG_SEP_TOL,
) -> TruncatedLocaliser:
    """Compress op onto the spectral window |D| <= rho.

    op may live on the space of D or on its double (odd localisers); in the
    doubled case the window projection acts blockwise.  Raises
    BoundaryEigenvalue if an eigenvalue of D sits within eig_sep_tol of
    +/-rho.
    """
    op_matrix = op.matrix if isinstance(op, HermitianOperator) else np.asarray(op)
    w, v = _resolve_eigensystem(dirac, eigensystem)
    mask = _window_mask(w, rho, eig_sep_tol)
    basis, doubled = _window_basis(op_matrix, mask, v)
    compressed = _compress(op_matrix, basis)
    return TruncatedLocaliser(
        operator=compressed,
        basis=basis,
        window_eigs=w[mask],
        rho=float(rho),
        doubled=doubled,
    )


def complement_block(
    op,
    dirac,
    rho: float,
    kappa: float | None = None,
    outer: float | None = None,
    eigensystem=None,
    eig_sep_tol: float = EIG_SEP_TOL,
    applicable: bool = True,
) -> tuple[HermitianOperator, GapCertificate | None]:
    """Compress op onto |D| > rho and certify its gap against sqrt(47/48)*kappa*rho.

    outer bounds the complement window from above (rho < |D| <= outer);
    model-level callers pass the containment radius so the certificate
    measures the region that stands in for the infinite complement rather
    than the wrap rows of a periodic box.
    """
    op_matrix = op.matrix if isinstance(op, HermitianOperator) else np.asarray(op)
    w, v = _resolve_eigensystem(dirac, eigensystem)
    mask = ~_window_mask(w, rho, eig_sep_tol)
    if outer is not None:
        mask &= np.abs(w) <= outer + 1e-9
    if not mask.any():
        raise ValidationError("empty complement at rho=%.6g" % rho)
    basis, _ = _window_basis(op_matrix, mask, v)
    compressed = _compress(op_matrix, basis)
    cert = None
    if kappa is not None:
        cert = _certificate(
            "complement_gap",
            spectral_gap(compressed),
            _COMPLEMENT_FACTOR * kappa * rho,
            ">=",
            kind="guarantee",
            applicable=applicable,
            detail="complement block gap vs sqrt(47/48) kappa rho",
            slack=1e-9,
        )
    return compressed, cert


@dataclasses.dataclass(frozen=True)
class PairingResult:
    parity: str
    pairing: int
    signature: int
    index_correction: int | None
    inertia: Inertia
    kappa: float
    rho: float
    mode: str
    dim_full: int
    dim_trunc: int
    truncated_gap: float
    certificates: tuple[GapCertificate, ...]
    regime: RegimeCertificate | None

    def certificate(self, name: str) -> GapCertificate:
        for cert in self.certificates:
            if cert.name == name:
                return cert
        raise KeyError(name)

    @property
    def violations(self) -> list[str]:
        """Names of applicable guarantee certificates that failed."""
        return [c.name for c in self.certificates if c.violated]


def _rotated_k(model: ModelInstance) -> np.ndarray | None:
    """Cached V* (Gamma K) V or V* G V if the harness precomputed it."""
    return model.cache.get("k_rotated")


def precompute_rotation(model: ModelInstance) -> None:
    """Rotate the K-side of the localiser into the D eigenbasis once.

    Sweeps over many (kappa, rho) pairs reuse this to make each job a
    submatrix selection instead of a fresh dense compression.
    """
    if "k_rotated" in model.cache:
        return
    w, v = model.dirac_eigensystem()
    if model.parity == "even":
        gk = model.grading.astype(np.float64)[:, None] * model.k_rep
        rot = v.conj().T @ gk @ v
        rot = (rot + rot.conj().T) / 2.0
    else:
        rot = v.conj().T @ model.k_rep @ v
    model.cache["k_rotated"] = rot


def _truncated_parts(model, kappa, rho, eig_sep_tol=EIG_SEP_TOL):
    """(window matrix, complement matrix builder, dims) via the rotated cache.

    Returns None when no rotation is cached; callers fall back to the
    generic truncate/complement path.
    """
    rot = _rotated_k(model)
    if rot is None:
        return None
    w, _ = model.dirac_eigensystem()
    mask = _window_mask(w, rho, eig_sep_tol)
    idx = np.flatnonzero(mask)
    cdx = np.flatnonzero(~mask & (np.abs(w) <= model.containment_radius + 1e-9))

    def assemble(selection):
        wsel = w[selection]
        ksel = rot[np.ix_(selection, selection)]
        if model.parity == "even":
            mat = kappa * np.diag(wsel).astype(np.complex128) + ksel
        else:
            k = selection.size
            mat = np.zeros((2 * k, 2 * k), dtype=np.complex128)
            mat[:k, :k] = kappa * np.diag(wsel)
            mat[k:, k:] = -kappa * np.diag(wsel)
            mat[:k, k:] = ksel
            mat[k:, :k] = ksel.conj().T
        return HermitianOperator((mat + mat.conj().T) / 2.0)

    return assemble(idx), (lambda: assemble(cdx) if cdx.size else None), idx.size


def _index_correction(model: ModelInstance, rho: float) -> int:
    key = ("index_correction", float(rho))
    if key not in model.cache:
        model.cache[key] = fredholm_index_graded(model.graded(), rho_window=rho)
    return model.cache[key]


def pairing(
    model: ModelInstance,
    params: LocaliserParams,
    zero_tol: float | None = None,
    certificates: bool = True,
) -> PairingResult:
    """Assemble, truncate and read off the index pairing for either parity.

    certificates=False is a lean mode for sweeps on large models: it skips
    everything that needs the [D, K] commutator or an extra eigensolve (the
    kappa_bound condition, the untruncated-regime gap, the complement
    block), leaving the cheap geometric conditions plus the measured window
    gap.  Lean results carry no applicable theorem guarantees, so the mode
    is permissive-only.
    """
    if not certificates and params.mode == "strict":
        raise ValidationError("strict mode needs full certificates")
    certs = validate_truncation_params(
        model, params, include_commutator=certificates
    )
    regime = None
    if certificates:
        regime = validate_infinite_regime(model, params.kappa, params.mode)
    assumption_ok = certificates and all(c.satisfied for c in certs if c.hard)

    parts = _truncated_parts(model, params.kappa, params.rho)
    if parts is not None:
        trunc_op, complement_fn, _ = parts
    else:
        loc = _build_localiser(model, params.kappa)
        eigensystem = model.dirac_eigensystem()
        trunc = truncate(loc, model.dirac, params.rho, eigensystem=eigensystem)
        trunc_op = trunc.operator
        complement_fn = None
        w_all = eigensystem[0]
        has_complement = bool(
            np.any((np.abs(w_all) > params.rho)
                   & (np.abs(w_all) <= model.containment_radius + 1e-9))
        )
        if certificates and has_complement:
            comp_op, _ = complement_block(
                loc, model.dirac, params.rho,
                outer=model.containment_radius, eigensystem=eigensystem,
            )
            complement_fn = lambda: comp_op  # noqa: E731

    g = model.k_gap()
    trunc_gap = spectral_gap(trunc_op)
    certs.append(
        _certificate(
            "truncated_gap", trunc_gap, 0.5 * g, ">=", kind="guarantee",
            applicable=assumption_ok,
            detail="truncated localiser gap vs g/2",
            slack=1e-9,
        )
    )
    if regime is not None:
        certs.append(regime.gap_certificate())
    if certificates and complement_fn is not None:
        comp = complement_fn()
        if comp is not None:
            certs.append(
                _certificate(
                    "complement_gap",
                    spectral_gap(comp),
                    _COMPLEMENT_FACTOR * params.kappa * params.rho,
                    ">=",
                    kind="guarantee",
                    applicable=assumption_ok,
                    detail="complement block gap vs sqrt(47/48) kappa rho",
                    slack=1e-9,
                )
            )

    if params.mode == "strict":
        for cert in certs:
            if cert.violated:
                raise StrictModeViolation(
                    "strict mode: guarantee %s violated (%.6g %s %.6g fails)"
                    % (cert.name, cert.measured, cert.relation, cert.bound)
                )

    # the permissive acceptance criterion: the truncated matrix must be
    # numerically invertible regardless of which theoretical bounds applied
    tol_resolved = zero_tol if zero_tol is not None else ZERO_TOL_FACTOR * trunc_op.norm
    certs.append(
        _certificate(
            "invertibility", trunc_gap, tol_resolved, ">", kind="guarantee",
            detail="truncated localiser gap vs numerical zero tolerance",
        )
    )

    inert = inertia(trunc_op, zero_tol=zero_tol)
    if inert.n_zero:
        raise SingularMatrix(
            "truncated localiser has %d numerical zero eigenvalue(s)" % inert.n_zero
        )
    sig = inert.signature

    if model.parity == "even":
        idx = _index_correction(model, params.rho)
        if (sig + idx) % 2:
            raise IntegerityViolation(
                "signature %d plus index %d is odd; no integer pairing" % (sig, idx)
            )
        value = (sig + idx) // 2
    else:
        idx = None
        if sig % 2:
            raise IntegerityViolation("odd-localiser signature %d is odd" % sig)
        value = sig // 2

    return PairingResult(
        parity=model.parity,
        pairing=int(value),
        signature=int(sig),
        index_correction=idx,
        inertia=inert,
        kappa=params.kappa,
        rho=params.rho,
        mode=params.mode,
        dim_full=model.dim if model.parity == "even" else 2 * model.dim,
        dim_trunc=trunc_op.dim,
        truncated_gap=trunc_gap,
        certificates=tuple(certs),
        regime=regime,
    )


def pairing_even(model, params, zero_tol=None, certificates=True) -> PairingResult:
    if model.parity != "even":
        raise ValidationError("pairing_even needs an even model")
    return pairing(model, params, zero_tol=zero_tol, certificates=certificates)


def pairing_odd(model, params, zero_tol=None, certificates=True) -> PairingResult:
    if model.parity != "odd":
        raise ValidationError("pairing_odd needs an odd model")
    return pairing(model, params, zero_tol=zero_tol, certificates=certificates)
