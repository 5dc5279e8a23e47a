"""Audits of conservation-law hypotheses and their consequences on concrete models.

Audits never raise on a failed hypothesis; they report residuals and a
verdict so that hypothesis failures can be inspected next to the conclusions
they would otherwise have guaranteed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import LayoutError
from .models import EffectSet, MeasurementModel, implemented_povm, is_projective
from .tensor import (
    DEFAULT_TOL,
    FactorLayout,
    Observable,
    UnitaryMap,
    commutator_norm,
    embed,
    observable,
    one_param_unitary,
    opnorm,
)

WITNESSED = "theorem-witnessed"
HYPOTHESES_FAIL = "hypotheses-fail"
INAPPLICABLE = "theorem-inapplicable"
VIOLATED = "theorem-violated"


class CheckResult(NamedTuple):
    residual: float
    passed: bool

    def __float__(self):
        return self.residual


@dataclass(frozen=True, eq=False)
class ConservedQuartet:
    """Conserved observables on ``S``, ``P``, ``S'`` and ``P'``."""

    L_S: Observable
    L_P: Observable
    L_S_out: Observable
    L_P_out: Observable

    def input_total(self) -> np.ndarray:
        """``L_S ⊗ 1 + 1 ⊗ L_P`` as a dense matrix."""
        return _additive(self.L_S, self.L_P)

    def output_total(self) -> np.ndarray:
        return _additive(self.L_S_out, self.L_P_out)


def _additive(a: Observable, b: Observable) -> np.ndarray:
    layout = a.layout + b.layout
    return embed(a, layout).mat + embed(b, layout).mat


def _check_layouts(u: UnitaryMap, q: ConservedQuartet):
    if u.source != q.L_S.layout + q.L_P.layout:
        raise LayoutError(f"unitary source {u.source} vs quartet {q.L_S.layout + q.L_P.layout}")
    if u.target != q.L_S_out.layout + q.L_P_out.layout:
        raise LayoutError(
            f"unitary target {u.target} vs quartet {q.L_S_out.layout + q.L_P_out.layout}"
        )


def check_additive_conservation(u: UnitaryMap, q: ConservedQuartet, tol: float = DEFAULT_TOL) -> CheckResult:
    """Residual of ``U†(L_S' + L_P')U = L_S + L_P``.

    Evaluated as ``‖L_out U − U L_in‖``, which equals the conjugated form
    for unitary ``U`` and vanishes exactly (not just to rounding) when ``U``
    is block diagonal in the eigenspaces of diagonal conserved totals.
    """
    _check_layouts(u, q)
    res = opnorm(q.output_total() @ u.mat - u.mat @ q.input_total())
    return CheckResult(res, res <= tol)


def check_yanase(povm: EffectSet, L_P_out: Observable, tol: float = DEFAULT_TOL) -> CheckResult:
    if povm.layout != L_P_out.layout:
        raise LayoutError(f"POVM on {povm.layout}, observable on {L_P_out.layout}")
    res = max(commutator_norm(e, L_P_out) for e in povm.effects)
    return CheckResult(res, res <= tol)


def default_t_grid(q: ConservedQuartet, points: int = 16) -> np.ndarray:
    scale = max(opnorm(q.input_total()), opnorm(q.output_total()), 1e-12)
    return np.linspace(-np.pi / scale, np.pi / scale, points)


def invariance_sampled_t(
    u: UnitaryMap,
    q: ConservedQuartet,
    t_grid: Sequence[float] | None = None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """Max over ``t`` of ``‖U†(e^{itL_S'} ⊗ e^{itL_P'})U − e^{itL_S} ⊗ e^{itL_P}‖``."""
    _check_layouts(u, q)
    if t_grid is None:
        t_grid = default_t_grid(q)
    worst = 0.0
    for t in t_grid:
        lhs = np.kron(one_param_unitary(q.L_S_out, t).mat, one_param_unitary(q.L_P_out, t).mat)
        rhs = np.kron(one_param_unitary(q.L_S, t).mat, one_param_unitary(q.L_P, t).mat)
        worst = max(worst, opnorm(u.mat.conj().T @ lhs @ u.mat - rhs))
    return CheckResult(worst, worst <= tol)


@dataclass
class WayReport:
    conservation_residual: float
    yanase_residual: float
    projectivity_defect: float
    commutator_norms: dict[str, float]
    conservation_ok: bool
    yanase_ok: bool
    projective: bool
    commutes: bool
    verdict: str
    failed_hypotheses: list[str] = field(default_factory=list)
    tolerance: float = DEFAULT_TOL

    @property
    def max_commutator(self) -> float:
        return max(self.commutator_norms.values(), default=0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_commutator"] = self.max_commutator
        return d


def way_audit(
    mm: MeasurementModel,
    q: ConservedQuartet,
    tol: float = DEFAULT_TOL,
    povm: EffectSet | None = None,
) -> WayReport:
    """Evaluate every hypothesis and the conclusion of the WAY theorem for PVMs.

    ``povm`` may be passed when the implemented POVM was computed by another
    route (e.g. block-sparse optics); otherwise it is computed densely.
    """
    cons = check_additive_conservation(mm.sem.unitary, q, tol)
    yan = check_yanase(mm.probe_povm, q.L_P_out, tol)
    if povm is None:
        povm = implemented_povm(mm)
    proj = is_projective(povm, tol)
    comms = {lab: commutator_norm(e, q.L_S) for lab, e in povm}
    commutes = all(c <= tol for c in comms.values())

    failed = [name for name, ok in (("conservation", cons.passed), ("yanase", yan.passed)) if not ok]
    if failed:
        verdict = HYPOTHESES_FAIL
    elif not proj.projective:
        verdict = INAPPLICABLE
    elif commutes:
        verdict = WITNESSED
    else:
        verdict = VIOLATED
    return WayReport(
        conservation_residual=cons.residual,
        yanase_residual=yan.residual,
        projectivity_defect=proj.defect,
        commutator_norms=comms,
        conservation_ok=cons.passed,
        yanase_ok=yan.passed,
        projective=proj.projective,
        commutes=commutes,
        verdict=verdict,
        failed_hypotheses=failed,
        tolerance=tol,
    )


@dataclass
class ShiftReport:
    gamma: float
    residual: float
    shift_holds: bool
    same_observable: bool
    # only meaningful when shift_holds and same_observable; finite spectra are
    # bounded, so any flat shift must vanish
    gamma_vanishes: bool | None

    def to_dict(self) -> dict:
        return asdict(self)


def gamma_shift(
    u_target: UnitaryMap,
    L_S: Observable,
    L_S_out: Observable,
    tol: float = DEFAULT_TOL,
) -> ShiftReport:
    """Fit ``U†L_S'U = L_S + γ1`` by the normalized trace and report the residual."""
    if u_target.source.dim != L_S.layout.dim or u_target.target.dim != L_S_out.layout.dim:
        raise LayoutError("dimension mismatch between unitary and observables")
    u = u_target.mat
    d = u.conj().T @ L_S_out.mat @ u - L_S.mat
    n = d.shape[0]
    gamma = float(np.real(np.trace(d)) / n)
    residual = opnorm(d - gamma * np.eye(n))
    same = L_S.layout.dim == L_S_out.layout.dim and opnorm(L_S.mat - L_S_out.mat) <= tol
    holds = residual <= tol
    vanishes = abs(gamma) <= tol if (holds and same) else None
    return ShiftReport(gamma, residual, holds, same, vanishes)


def trivial_layout_observable(layout: FactorLayout | None = None) -> Observable:
    """Zero observable, used for output systems that carry no conserved charge."""
    layout = layout or FactorLayout()
    return observable(layout, np.zeros((layout.dim, layout.dim)))
