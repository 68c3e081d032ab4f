"""Frozen sign convention tying localiser pairings to oracle integers.

Basis ordering, grading orientation and the direction of the phase around
the circle each flip signs that the abstract theory leaves free.  Rather
than re-deriving them silently at import time, the two free signs are
calibrated once on reference models (`derive_sign_convention`), written to
``sign_convention.yaml``, and shipped with the package; tests and the CLI
load the frozen file so a regression in either the localiser or an oracle
shows up as a mismatch instead of being absorbed into a recomputed sign.

The graded-index route has no free sign: there the pairing and its oracle
are both built from kernel counts of the same block.
"""

from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path

import yaml

from .errors import FormatError, ValidationError
from .models import ModelInstance, build_circle_model, build_qwz_model, qwz_bloch
from .oracles import chern_number_fhs, fredholm_index_graded, winding_number

__all__ = [
    "SignConvention",
    "load_sign_convention",
    "save_sign_convention",
    "derive_sign_convention",
    "oracle_value",
    "oracle_pairing",
]


@dataclasses.dataclass(frozen=True)
class SignConvention:
    even_sign: int
    odd_sign: int
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.even_sign not in (-1, 1) or self.odd_sign not in (-1, 1):
            raise ValidationError("convention signs must be +1 or -1")


def load_sign_convention(path=None) -> SignConvention:
    """Load a convention file; default is the one shipped with the package."""
    if path is None:
        text = resources.files("speclocaliser").joinpath("sign_convention.yaml").read_text()
        origin = "packaged sign_convention.yaml"
    else:
        text = Path(path).read_text()
        origin = str(path)
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise FormatError("%s does not hold a mapping" % origin)
    try:
        return SignConvention(
            even_sign=int(doc["even_sign"]),
            odd_sign=int(doc["odd_sign"]),
            metadata=dict(doc.get("metadata", {})),
        )
    except KeyError as exc:
        raise FormatError("%s is missing field %s" % (origin, exc)) from exc


def save_sign_convention(convention: SignConvention, path) -> None:
    doc = {
        "even_sign": int(convention.even_sign),
        "odd_sign": int(convention.odd_sign),
        "metadata": dict(convention.metadata),
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=True))


def oracle_value(model: ModelInstance) -> int:
    """The raw oracle integer for the model, before any sign convention."""
    if model.oracle_ref == "winding_number":
        return winding_number(model.params["symbol"])
    if model.oracle_ref == "chern_number_fhs":
        return chern_number_fhs(qwz_bloch(float(model.params["mass"])))
    if model.oracle_ref == "fredholm_index_graded":
        return fredholm_index_graded(model.graded())
    raise ValidationError("no oracle registered under %r" % model.oracle_ref)


def oracle_pairing(model: ModelInstance, convention: SignConvention | None = None) -> int:
    """Convention-adjusted oracle prediction for ``pairing(model, ...)``."""
    if convention is None:
        convention = load_sign_convention()
    raw = oracle_value(model)
    if model.oracle_ref == "winding_number":
        return convention.odd_sign * raw
    if model.oracle_ref == "chern_number_fhs":
        return convention.even_sign * raw
    # graded index: pairing with K = +1 is the index itself, with K = -1 the
    # signature and correction cancel exactly
    return raw if int(model.params.get("sign", 1)) == 1 else 0


def derive_sign_convention() -> SignConvention:
    """Calibrate both signs on small reference models.

    Uses a winding-one circle model and a single-cone lattice model; each
    pairing divided by its oracle must give exactly +1 or -1.
    """
    from .localiser import LocaliserParams, pairing  # deferred; avoids cycle

    calibrations = {}

    circle = build_circle_model(modes=40, symbol={0: 0.5, 1: 1.0})
    res = pairing(circle, LocaliserParams(kappa=0.05, rho=25.5, mode="permissive"))
    w = winding_number(circle.params["symbol"])
    if w == 0 or res.pairing % abs(w):
        raise ValidationError("circle calibration degenerate: pairing=%d oracle=%d" % (res.pairing, w))
    odd_sign = res.pairing // w
    calibrations["odd"] = {
        "model": "circle(modes=40, symbol=0.5+z)",
        "pairing": int(res.pairing),
        "oracle": int(w),
    }

    qwz = build_qwz_model(box=9, mass=1.0)
    res = pairing(qwz, LocaliserParams(kappa=0.75, rho=5.5, mode="permissive"))
    c = chern_number_fhs(qwz_bloch(1.0))
    if c == 0 or res.pairing % abs(c):
        raise ValidationError("lattice calibration degenerate: pairing=%d oracle=%d" % (res.pairing, c))
    even_sign = res.pairing // c
    calibrations["even"] = {
        "model": "qwz(box=9, mass=1.0)",
        "pairing": int(res.pairing),
        "oracle": int(c),
    }

    conv = SignConvention(even_sign=even_sign, odd_sign=odd_sign, metadata={"calibrations": calibrations})
    return conv
