"""JSON encoding of operators, models and conserved quartets.

Operators are stored as ``{"layout": [{"label", "dim"}, ...], "re": [[...]],
"im": [[...]]}`` in row-major order. Python floats round-trip exactly
through ``json``, so decoding an encoded operator gives back the same bits.
A model stores its unitary on the input layout ``S⊗P``; the output
factors are recovered from ``layouts``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .audit import ConservedQuartet
from .errors import InvariantError, WayAuditError
from .models import EffectSet, MeasurementModel, SystemEnvModel
from .tensor import DensityState, FactorLayout, Operator, UnitaryMap, observable


class FormatError(WayAuditError):
    """Input that does not match the documented file layout."""


def layout_to_json(layout: FactorLayout) -> list[dict]:
    return [{"label": lab, "dim": d} for lab, d in layout.factors]


def layout_from_json(obj) -> FactorLayout:
    if not isinstance(obj, list):
        raise FormatError("layout must be a list of {label, dim} objects")
    try:
        return FactorLayout(tuple((str(f["label"]), int(f["dim"])) for f in obj))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad layout entry: {exc}") from exc


def operator_to_json(op) -> dict:
    mat = op.mat
    return {
        "layout": layout_to_json(op.layout),
        "re": mat.real.tolist(),
        "im": mat.imag.tolist(),
    }


def operator_from_json(obj) -> Operator:
    if not isinstance(obj, dict) or not {"layout", "re", "im"} <= obj.keys():
        raise FormatError("operator needs 'layout', 're' and 'im'")
    layout = layout_from_json(obj["layout"])
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"matrix entries must be numbers: {exc}") from exc
    shape = (layout.dim, layout.dim)
    if re.shape != shape or im.shape != shape:
        raise InvariantError("matrix shape matches layout", f"layout needs {shape}, got {re.shape}/{im.shape}")
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise InvariantError("matrix entries finite")
    return Operator(layout, re + 1j * im)


def model_to_json(model) -> dict:
    """Accepts a :class:`MeasurementModel` or a bare :class:`SystemEnvModel`."""
    sem = model.sem if isinstance(model, MeasurementModel) else model
    out = {
        "probe": operator_to_json(sem.probe),
        "unitary": operator_to_json(Operator(sem.S + sem.P, sem.unitary.mat)),
        "layouts": {
            "S": layout_to_json(sem.S),
            "P": layout_to_json(sem.P),
            "S_out": layout_to_json(sem.S_out),
            "P_out": layout_to_json(sem.P_out),
        },
    }
    if isinstance(model, MeasurementModel):
        out["probe_povm"] = [{"label": lab, "effect": operator_to_json(e)} for lab, e in model.probe_povm]
    return out


def _require(obj: dict, keys, what: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{what} must be a JSON object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise FormatError(f"{what} missing field(s): {', '.join(missing)}")


def model_from_json(obj, tol: float | None = None):
    _require(obj, ("probe", "unitary", "layouts"), "model")
    lay = obj["layouts"]
    _require(lay, ("S", "P", "S_out", "P_out"), "layouts")
    S, P, So, Po = (layout_from_json(lay[k]) for k in ("S", "P", "S_out", "P_out"))
    kw = {} if tol is None else {"tol": tol}
    probe = DensityState(operator_from_json(obj["probe"]), **kw)
    u = operator_from_json(obj["unitary"])
    if u.layout.dim != (S + P).dim or u.layout.dim != (So + Po).dim:
        raise InvariantError("unitary dimension matches S⊗P and S'⊗P'")
    sem = SystemEnvModel(probe, UnitaryMap(u.mat, S + P, So + Po, **kw), S, P, So, Po)
    if "probe_povm" not in obj:
        return sem
    entries = obj["probe_povm"]
    if not isinstance(entries, list):
        raise FormatError("probe_povm must be a list of {label, effect} objects")
    outcomes = []
    for e in entries:
        _require(e, ("label", "effect"), "probe_povm entry")
        outcomes.append((str(e["label"]), operator_from_json(e["effect"])))
    return MeasurementModel(sem, EffectSet(Po, tuple(outcomes), **kw))


def quartet_to_json(q: ConservedQuartet) -> dict:
    return {k: operator_to_json(getattr(q, k)) for k in ("L_S", "L_P", "L_S_out", "L_P_out")}


def quartet_from_json(obj) -> ConservedQuartet:
    keys = ("L_S", "L_P", "L_S_out", "L_P_out")
    _require(obj, keys, "quartet")
    ops = [operator_from_json(obj[k]) for k in keys]
    return ConservedQuartet(*(observable(op.layout, op.mat) for op in ops))


def load_json(path) -> object:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON in {path}: {exc}") from exc


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_json(obj, path):
    Path(path).write_text(dumps(obj), encoding="utf-8")
