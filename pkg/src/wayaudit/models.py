"""Measurement models, system-environment models and what they implement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InvariantError, LayoutError
from .tensor import (
    DEFAULT_TOL,
    DensityState,
    FactorLayout,
    Observable,
    Operator,
    UnitaryMap,
    as_operator,
    opnorm,
    tensor_product,
)


@dataclass(frozen=True, eq=False)
class EffectSet:
    """Finite-outcome POVM: labeled positive effects summing to the identity."""

    layout: FactorLayout
    outcomes: tuple[tuple[str, Operator], ...]
    tol: float = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        outcomes = tuple((str(lab), as_operator(e)) for lab, e in self.outcomes)
        object.__setattr__(self, "outcomes", outcomes)
        if not outcomes:
            raise InvariantError("POVM has at least one outcome")
        labels = [lab for lab, _ in outcomes]
        if len(set(labels)) != len(labels):
            raise InvariantError("outcome labels unique")
        total = np.zeros((self.layout.dim, self.layout.dim), dtype=complex)
        for lab, e in outcomes:
            if e.layout != self.layout:
                raise LayoutError(f"effect {lab!r} on {e.layout}, POVM on {self.layout}")
            m = e.mat
            if opnorm(m - m.conj().T) > self.tol:
                raise InvariantError("effect Hermitian", f"outcome {lab!r}")
            lo = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
            if lo < -self.tol:
                raise InvariantError("effect positive", f"outcome {lab!r}, min eigenvalue {lo:.3g}")
            total = total + m
        res = opnorm(total - np.eye(self.layout.dim))
        if res > self.tol:
            raise InvariantError("effects sum to identity", f"residual {res:.3g}")

    @classmethod
    def from_observable(cls, obs: Observable, fmt: str = "{:g}") -> "EffectSet":
        """Spectral PVM of ``obs``, one outcome per distinct eigenvalue."""
        return cls(obs.layout, tuple((fmt.format(lam), p) for lam, p in obs.spectrum))

    @classmethod
    def from_matrices(cls, layout: FactorLayout, mats: dict, tol: float = DEFAULT_TOL):
        return cls(layout, tuple((lab, Operator(layout, m)) for lab, m in mats.items()), tol)

    def coarse_grain(self, groups: dict[str, Sequence[str]]) -> "EffectSet":
        """Merge outcomes: ``groups`` maps each new label to old labels."""
        lookup = dict(self.outcomes)
        merged = []
        for new, olds in groups.items():
            m = sum((lookup[o].mat for o in olds), np.zeros_like(self.outcomes[0][1].mat))
            merged.append((new, Operator(self.layout, m)))
        return EffectSet(self.layout, tuple(merged), self.tol)

    @property
    def labels(self) -> list[str]:
        return [lab for lab, _ in self.outcomes]

    @property
    def effects(self) -> list[Operator]:
        return [e for _, e in self.outcomes]

    def __getitem__(self, label: str) -> Operator:
        for lab, e in self.outcomes:
            if lab == label:
                return e
        raise KeyError(label)

    def __iter__(self) -> Iterator[tuple[str, Operator]]:
        return iter(self.outcomes)

    def __len__(self):
        return len(self.outcomes)

    def probabilities(self, rho) -> np.ndarray:
        rho = as_operator(rho)
        return np.array([np.real(np.trace(rho.mat @ e.mat)) for e in self.effects])


class ProjectivityReport(NamedTuple):
    projective: bool
    defect: float
    idempotency: tuple[float, ...]
    orthogonality: float

    def __bool__(self):
        return self.projective


def is_projective(es: EffectSet, tol: float = DEFAULT_TOL) -> ProjectivityReport:
    """Check ``‖E² − E‖ ≤ tol`` per effect and ``‖E_j E_k‖ ≤ tol`` across effects."""
    mats = [e.mat for e in es.effects]
    idem = tuple(opnorm(m @ m - m) for m in mats)
    cross = 0.0
    for j in range(len(mats)):
        for k in range(j + 1, len(mats)):
            cross = max(cross, opnorm(mats[j] @ mats[k]))
    defect = max(max(idem), cross)
    return ProjectivityReport(defect <= tol, defect, idem, cross)


class ProjectorFamily(EffectSet):
    """An :class:`EffectSet` whose effects are mutually orthogonal projections."""

    def __post_init__(self):
        super().__post_init__()
        rep = is_projective(self, self.tol)
        if not rep.projective:
            raise InvariantError("effects are orthogonal projections", f"defect {rep.defect:.3g}")


@dataclass(frozen=True, eq=False)
class SystemEnvModel:
    """Probe state plus a unitary ``S⊗P → S'⊗P'``."""

    probe: DensityState
    unitary: UnitaryMap
    S: FactorLayout
    P: FactorLayout
    S_out: FactorLayout
    P_out: FactorLayout

    def __post_init__(self):
        if self.probe.layout != self.P:
            raise LayoutError(f"probe on {self.probe.layout}, expected {self.P}")
        if self.unitary.source != self.S + self.P:
            raise LayoutError(f"unitary source {self.unitary.source}, expected {self.S + self.P}")
        if self.unitary.target != self.S_out + self.P_out:
            raise LayoutError(
                f"unitary target {self.unitary.target}, expected {self.S_out + self.P_out}"
            )

    @classmethod
    def build(cls, probe: DensityState, unitary, S, P, S_out, P_out) -> "SystemEnvModel":
        """Construct from a raw matrix or a :class:`UnitaryMap` with any labels."""
        mat = unitary.mat if isinstance(unitary, UnitaryMap) else unitary
        u = UnitaryMap(mat, S + P, S_out + P_out)
        return cls(probe, u, S, P, S_out, P_out)

    def with_probe(self, probe: DensityState) -> "SystemEnvModel":
        return SystemEnvModel(probe, self.unitary, self.S, self.P, self.S_out, self.P_out)


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    sem: SystemEnvModel
    probe_povm: EffectSet

    def __post_init__(self):
        if self.probe_povm.layout != self.sem.P_out:
            raise LayoutError(f"probe POVM on {self.probe_povm.layout}, expected {self.sem.P_out}")


def _apply_channel(sem: SystemEnvModel, rho_s: np.ndarray) -> np.ndarray:
    """``Tr_{P'}[U (rho ⊗ rho_P) U†]`` for an arbitrary (not necessarily positive) matrix."""
    u = sem.unitary.mat
    big = u @ np.kron(rho_s, sem.probe.mat) @ u.conj().T
    ds, dp = sem.S_out.dim, sem.P_out.dim
    return np.einsum("ipjp->ij", big.reshape(ds, dp, ds, dp))


def implemented_channel(sem: SystemEnvModel, rho_s: DensityState, tol: float = DEFAULT_TOL) -> DensityState:
    if rho_s.layout != sem.S:
        raise LayoutError(f"input state on {rho_s.layout}, model system is {sem.S}")
    out = _apply_channel(sem, rho_s.mat)
    return DensityState(Operator(sem.S_out, out), tol)


@dataclass(frozen=True, eq=False)
class CPMap:
    """Heisenberg-picture map ``a ↦ Tr_P[(1_S ⊗ rho_P) U† a U]``.

    Represented by its generating model rather than Kraus operators; the map
    takes operators on ``S'⊗P'`` to operators on ``S``.
    """

    sem: SystemEnvModel

    @property
    def source(self) -> FactorLayout:
        return self.sem.S_out + self.sem.P_out

    @property
    def target(self) -> FactorLayout:
        return self.sem.S

    @classmethod
    def depolarizing(cls, d: int) -> "CPMap":
        """``a ⊗ 1 ↦ tr(a)/d · 1`` on ``S'``: a SWAP model with maximally mixed probe."""
        S, P = FactorLayout.of(("S", d)), FactorLayout.of(("P", d))
        S_out, P_out = FactorLayout.of(("S'", d)), FactorLayout.of(("P'", d))
        sem = SystemEnvModel.build(
            DensityState.maximally_mixed(P), swap_matrix(d, d), S, P, S_out, P_out
        )
        return cls(sem)

    def apply_matrix(self, a: np.ndarray) -> np.ndarray:
        u = self.sem.unitary.mat
        m = u.conj().T @ a @ u
        ds, dp = self.sem.S.dim, self.sem.P.dim
        return np.einsum("ipjq,qp->ij", m.reshape(ds, dp, ds, dp), self.sem.probe.mat)

    def __call__(self, a) -> Operator:
        a = as_operator(a)
        if a.layout != self.source:
            raise LayoutError(f"operand on {a.layout}, map acts on {self.source}")
        return Operator(self.target, self.apply_matrix(a.mat))

    def lift(self, a_s_out) -> Operator:
        """``a ⊗ 1_{P'}`` for ``a`` on ``S'``."""
        return tensor_product(a_s_out, Operator.identity(self.sem.P_out))

    def lift_probe(self, f_p_out) -> Operator:
        """``1_{S'} ⊗ f`` for ``f`` on ``P'``."""
        return tensor_product(Operator.identity(self.sem.S_out), f_p_out)

    def unitality_residual(self) -> float:
        return opnorm(self.apply_matrix(np.eye(self.source.dim)) - np.eye(self.target.dim))


def heisenberg_cp_map(model) -> CPMap:
    sem = model.sem if isinstance(model, MeasurementModel) else model
    return CPMap(sem)


def implemented_povm(mm: MeasurementModel, tol: float = DEFAULT_TOL) -> EffectSet:
    lam = heisenberg_cp_map(mm)
    outcomes = tuple((lab, lam(lam.lift_probe(f))) for lab, f in mm.probe_povm)
    # effects can pick up rounding-level anti-Hermitian parts; symmetrize
    outcomes = tuple((lab, Operator(e.layout, (e.mat + e.mat.conj().T) / 2)) for lab, e in outcomes)
    return EffectSet(mm.sem.S, outcomes, tol)


def swap_matrix(d1: int, d2: int) -> np.ndarray:
    """Permutation ``|i⟩|j⟩ ↦ |j⟩|i⟩`` from ``C^d1 ⊗ C^d2`` to ``C^d2 ⊗ C^d1``."""
    out = np.zeros((d1 * d2, d1 * d2))
    for i in range(d1):
        for j in range(d2):
            out[j * d1 + i, i * d2 + j] = 1.0
    return out


def _test_states(d: int) -> Iterator[np.ndarray]:
    eye = np.eye(d)
    for i in range(d):
        yield eye[i]
    for i in range(d):
        for j in range(i + 1, d):
            yield (eye[i] + eye[j]) / np.sqrt(2)
            yield (eye[i] + 1j * eye[j]) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class UnitaryExtraction:
    unitary: UnitaryMap
    purity_residual: float
    choi_residual: float


def channel_purity_residual(sem: SystemEnvModel) -> float:
    """Largest purity loss over an informationally complete set of pure inputs."""
    worst = 0.0
    for v in _test_states(sem.S.dim):
        out = _apply_channel(sem, np.outer(v, v.conj()))
        worst = max(worst, abs(1.0 - float(np.real(np.trace(out @ out)))))
    return worst


def implemented_unitary(sem: SystemEnvModel) -> UnitaryExtraction:
    """Recover ``U_S`` (up to a global phase) from the channel a model implements.

    The Choi matrix of a unitary channel is rank one, ``|U⟩⟩⟨⟨U|``; its top
    eigenvector reshaped gives ``U_S``. ``choi_residual`` measures the weight
    outside that eigenvector and is zero exactly when the channel is unitary.
    """
    ds, dso = sem.S.dim, sem.S_out.dim
    if ds != dso:
        raise LayoutError(f"unitary channel needs dim S = dim S' ({ds} vs {dso})")
    choi = np.zeros((ds * dso, ds * dso), dtype=complex)
    for i in range(ds):
        for j in range(ds):
            e = np.zeros((ds, ds))
            e[i, j] = 1.0
            choi += np.kron(e, _apply_channel(sem, e))
    choi = (choi + choi.conj().T) / 2
    w, v = np.linalg.eigh(choi)
    top = v[:, -1] * np.sqrt(max(w[-1], 0.0))
    u = top.reshape(ds, dso).T
    # polar projection removes rounding-level non-unitarity
    x, _, yh = np.linalg.svd(u)
    u = x @ yh
    choi_res = float(abs(w[:-1]).sum() / ds) if len(w) > 1 else 0.0
    return UnitaryExtraction(
        UnitaryMap(u, sem.S, sem.S_out), channel_purity_residual(sem), choi_res
    )
