"""Truncated Fock-space model of balanced homodyne detection.

Two-mode passive unitaries are built block by block inside each
total-photon-number eigenspace, so photon-number conservation holds exactly
(entries outside the blocks are literal zeros) even after truncation. Large
truncations never form the dense two-mode unitary: the homodyne POVM and
outcome distribution are computed from the signal-to-output isometry
``|i⟩ ↦ U(|i⟩ ⊗ |β⟩)`` assembled block-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import gammaln
from scipy.stats import poisson

from .audit import ConservedQuartet, trivial_layout_observable
from .errors import InvariantError, WayAuditError
from .models import EffectSet, MeasurementModel, SystemEnvModel
from .tensor import (
    DEFAULT_TOL,
    DensityState,
    FactorLayout,
    Observable,
    Operator,
    UnitaryMap,
    observable,
)

LEAKAGE_FLAG = 1e-6
DENSE_DIM_LIMIT = 24
# exact powers of -i for the quarter-wave phase on the local oscillator
_MINUS_I_POW = np.array([1.0, -1j, -1.0, 1j])


@dataclass(frozen=True, eq=False)
class FockOperators:
    dim: int
    a: Operator
    n: Observable
    q: Observable


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def fock_operators(dim: int, label: str = "mode") -> FockOperators:
    if dim < 2:
        raise WayAuditError(f"truncation dimension must be >= 2, got {dim}")
    layout = FactorLayout.of((label, dim))
    a = annihilation(dim)
    n = observable(layout, np.diag(np.arange(dim, dtype=float)))
    q = observable(layout, (a + a.conj().T) / 2)
    return FockOperators(dim, Operator(layout, a), n, q)


def coherent_amplitudes(beta: complex, dim: int) -> np.ndarray:
    """Normalized truncated amplitudes proportional to ``β^n / √n!``."""
    beta = complex(beta)
    n = np.arange(dim)
    if beta == 0:
        amp = np.zeros(dim, dtype=complex)
        amp[0] = 1.0
        return amp
    logmag = n * math.log(abs(beta)) - 0.5 * gammaln(n + 1)
    amp = np.exp(logmag - logmag.max() + 1j * n * np.angle(beta))
    return amp / np.linalg.norm(amp)


def coherent_state(beta: complex, dim: int, label: str = "mode") -> DensityState:
    if dim <= 4 * abs(beta) ** 2:
        raise InvariantError("truncation margin dim > 4|β|²", f"dim={dim}, |β|²={abs(beta) ** 2:.3g}")
    return DensityState.pure(FactorLayout.of((label, dim)), coherent_amplitudes(beta, dim))


def fock_state(n: int, dim: int, label: str = "mode") -> DensityState:
    if not 0 <= n < dim:
        raise WayAuditError(f"Fock level {n} outside truncation {dim}")
    v = np.zeros(dim)
    v[n] = 1.0
    return DensityState.pure(FactorLayout.of((label, dim)), v)


def poisson_tail(beta: complex, dim: int) -> float:
    """Untruncated coherent-state weight on levels ``n >= dim``."""
    return float(poisson.sf(dim - 1, abs(beta) ** 2))


def block_range(total: int, dim: int) -> np.ndarray:
    """First-mode photon numbers present in block ``n1 + n2 = total``."""
    return np.arange(max(0, total - dim + 1), min(total, dim - 1) + 1)


def beam_splitter_blocks(dim: int, theta: float) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield ``(N, n1_values, block)`` for ``exp(iθ(a†b + ab†))``.

    ``block`` acts on the basis ``|n1, N − n1⟩`` ordered by ``n1``. Blocks
    with ``N >= dim`` are cut by the truncation; they are still unitary and
    conserving but no longer the exact beam-splitter transform.
    """
    for total in range(2 * dim - 1):
        n1 = block_range(total, dim)
        k = len(n1)
        if k == 1:
            yield total, n1, np.ones((1, 1), dtype=complex)
            continue
        off = np.sqrt(n1[:-1] + 1.0) * np.sqrt(total - n1[:-1] * 1.0)
        gen = np.diag(off, -1) + np.diag(off, 1)
        w, v = np.linalg.eigh(gen)
        yield total, n1, (v * np.exp(1j * theta * w)) @ v.T


def _assemble(dim: int, blocks) -> np.ndarray:
    u = np.zeros((dim * dim, dim * dim), dtype=complex)
    for total, n1, blk in blocks:
        idx = n1 * dim + (total - n1)
        u[np.ix_(idx, idx)] = blk
    return u


def beam_splitter(
    dim: int,
    theta: float,
    labels_in: tuple[str, str] = ("a", "b"),
    labels_out: tuple[str, str] = ("c", "d"),
) -> UnitaryMap:
    if dim < 2:
        raise WayAuditError(f"truncation dimension must be >= 2, got {dim}")
    src = FactorLayout.of((labels_in[0], dim), (labels_in[1], dim))
    tgt = FactorLayout.of((labels_out[0], dim), (labels_out[1], dim))
    return UnitaryMap(_assemble(dim, beam_splitter_blocks(dim, theta)), src, tgt)


def homodyne_blocks(dim: int) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Blocks of ``BS(π/4) · (1 ⊗ e^{−iπ n/2})``.

    The quarter-wave phase on the local-oscillator port rotates a real LO
    amplitude ``β`` to ``−iβ`` so that the photocount difference tracks
    ``(a + a†)/2`` rather than the conjugate quadrature.
    """
    for total, n1, blk in beam_splitter_blocks(dim, np.pi / 4):
        phase = _MINUS_I_POW[(total - n1) % 4]
        yield total, n1, blk * phase[None, :]


@dataclass(frozen=True, eq=False)
class HomodyneConfig:
    beta_lo: float
    dim: int
    signal: DensityState
    signal_leakage: float = 0.0

    def __post_init__(self):
        if self.beta_lo < 0:
            raise InvariantError("LO amplitude β_LO >= 0", f"got {self.beta_lo}")
        if self.dim <= 4 * self.beta_lo**2:
            raise InvariantError(
                "truncation margin dim > 4β_LO²", f"dim={self.dim}, β_LO={self.beta_lo}"
            )
        if self.signal.layout.dim != self.dim:
            raise InvariantError("signal lives on the truncated mode", f"signal dim {self.signal.layout.dim}")


@dataclass(frozen=True)
class DiscreteDistribution:
    values: np.ndarray
    probabilities: np.ndarray
    tol: float = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if v.shape != p.shape:
            raise InvariantError("one probability per value")
        if np.any(np.diff(v) <= 0):
            raise InvariantError("values strictly increasing")
        if np.any(p < -self.tol):
            raise InvariantError("probabilities non-negative", f"min {p.min():.3g}")
        if abs(p.sum() - 1.0) > self.tol:
            raise InvariantError("probabilities sum to one", f"sum {p.sum():.12g}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probabilities", p)

    def mean(self) -> float:
        return float(np.dot(self.values, self.probabilities))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot((self.values - mu) ** 2, self.probabilities))

    def cdf(self, x) -> np.ndarray:
        """Right-continuous CDF."""
        c = np.cumsum(self.probabilities)
        i = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        return np.where(i > 0, c[np.maximum(i - 1, 0)], 0.0)

    def cdf_left(self, x) -> np.ndarray:
        """Left limit ``P(X < x)``."""
        c = np.cumsum(self.probabilities)
        i = np.searchsorted(self.values, np.asarray(x, dtype=float), side="left")
        return np.where(i > 0, c[np.maximum(i - 1, 0)], 0.0)


def signal_isometry(beta_lo: float, dim: int) -> np.ndarray:
    """``J[(n1, n2), i] = ⟨n1, n2| U |i⟩ ⊗ |β_LO⟩`` as a ``(dim², dim)`` array."""
    lo = coherent_amplitudes(beta_lo, dim)
    j = np.zeros((dim * dim, dim), dtype=complex)
    for total, n1, blk in homodyne_blocks(dim):
        rows = n1 * dim + (total - n1)
        j[np.ix_(rows, n1)] = blk * lo[total - n1][None, :]
    return j


def _difference_index(dim: int) -> np.ndarray:
    n1, n2 = np.divmod(np.arange(dim * dim), dim)
    return n1 - n2


def outcome_value(k: int, beta_lo: float) -> float:
    return k / (2.0 * beta_lo)


def _outcome_label(k: int) -> str:
    return f"{k:+d}"


def homodyne_povm(config: HomodyneConfig) -> EffectSet:
    """Implemented POVM on the signal, one effect per photocount difference."""
    if config.beta_lo == 0:
        raise WayAuditError("β_LO = 0 leaves the homodyne statistic undefined")
    dim = config.dim
    j = signal_isometry(config.beta_lo, dim)
    diff = _difference_index(dim)
    layout = config.signal.layout
    outcomes = []
    for k in range(-(dim - 1), dim):
        jk = j[diff == k]
        e = jk.conj().T @ jk
        outcomes.append((_outcome_label(k), Operator(layout, (e + e.conj().T) / 2)))
    return EffectSet(layout, tuple(outcomes))


def homodyne_model(config: HomodyneConfig) -> tuple[MeasurementModel, ConservedQuartet]:
    """Dense measurement model of balanced homodyne detection.

    ``S`` is the signal mode, ``P`` the local oscillator, ``S'`` trivial and
    ``P'`` the two output ports, whose joint photon counts are grouped by
    ``n1 − n2``. Dense storage limits this to ``dim <= 24``; use
    :func:`homodyne_povm` and :func:`homodyne_distribution` beyond that.
    """
    if config.beta_lo == 0:
        raise WayAuditError("β_LO = 0 leaves the homodyne statistic undefined")
    dim = config.dim
    if dim > DENSE_DIM_LIMIT:
        raise WayAuditError(f"dense homodyne model limited to dim <= {DENSE_DIM_LIMIT}")
    sig_label = config.signal.layout.labels[0]
    S = config.signal.layout
    P = FactorLayout.of(("lo", dim))
    S_out = FactorLayout()
    P_out = FactorLayout.of(("c", dim), ("d", dim))
    u = _assemble(dim, homodyne_blocks(dim))
    probe = DensityState.pure(P, coherent_amplitudes(config.beta_lo, dim))
    sem = SystemEnvModel.build(probe, u, S, P, S_out, P_out)

    diff = _difference_index(dim)
    outcomes = []
    for k in range(-(dim - 1), dim):
        outcomes.append((_outcome_label(k), Operator(P_out, np.diag((diff == k).astype(float)))))
    povm = EffectSet(P_out, tuple(outcomes))

    nvec = np.arange(dim, dtype=float)
    q = ConservedQuartet(
        observable(FactorLayout.of((sig_label, dim)), np.diag(nvec)),
        observable(P, np.diag(nvec)),
        trivial_layout_observable(S_out),
        observable(P_out, np.diag(np.add.outer(nvec, nvec).ravel())),
    )
    return MeasurementModel(sem, povm), q


def _output_probabilities(config: HomodyneConfig) -> np.ndarray:
    j = signal_isometry(config.beta_lo, config.dim)
    m = j @ config.signal.mat
    return np.real(np.sum(m * j.conj(), axis=1))


def homodyne_distribution(config: HomodyneConfig) -> DiscreteDistribution:
    """Exact distribution of ``(n1 − n2) / (2β_LO)`` for the configured signal."""
    if config.beta_lo == 0:
        raise WayAuditError("β_LO = 0 leaves the homodyne statistic undefined")
    dim = config.dim
    probs = _output_probabilities(config)
    diff = _difference_index(dim)
    ks = np.arange(-(dim - 1), dim)
    pk = np.bincount(diff + dim - 1, weights=probs, minlength=2 * dim - 1)
    pk = np.clip(pk, 0.0, None)
    return DiscreteDistribution(ks / (2.0 * config.beta_lo), pk / pk.sum())


def truncation_leakage(config: HomodyneConfig) -> float:
    """Probability mass touched by the truncation.

    Sum of the LO's untruncated tail beyond the cutoff, the signal's
    recorded tail, and the output weight in the photon-number blocks that
    the cutoff clips (``n1 + n2 >= dim``).
    """
    dim = config.dim
    probs = _output_probabilities(config)
    n1, n2 = np.divmod(np.arange(dim * dim), dim)
    clipped = float(probs[(n1 + n2) >= dim].sum())
    return poisson_tail(config.beta_lo, dim) + config.signal_leakage + clipped


def hermite_functions(x: np.ndarray, nmax: int) -> np.ndarray:
    """Eigenfunctions of ``(a + a†)/2``, rows ``n = 0..nmax−1``, vacuum variance 1/4."""
    y = np.sqrt(2.0) * np.asarray(x, dtype=float)
    out = np.zeros((nmax, y.size))
    out[0] = np.pi ** -0.25 * np.exp(-(y**2) / 2)
    if nmax > 1:
        out[1] = np.sqrt(2.0) * y * out[0]
    for n in range(1, nmax - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * y * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out * 2**0.25


def quadrature_pdf(signal: DensityState, grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise WayAuditError("grid must be strictly increasing")
    psi = hermite_functions(grid, signal.layout.dim)
    pdf = np.einsum("mg,mn,ng->g", psi, signal.mat, psi)
    return np.real(pdf)


def quadrature_moments(signal: DensityState) -> tuple[float, float]:
    """Mean and variance of ``(a + a†)/2`` from the matrix elements."""
    a = annihilation(signal.layout.dim)
    q = (a + a.conj().T) / 2
    m1 = float(np.real(np.trace(signal.mat @ q)))
    m2 = float(np.real(np.trace(signal.mat @ q @ q)))
    return m1, m2 - m1**2


def default_grid(signal: DensityState, points: int = 20001) -> np.ndarray:
    mean, var = quadrature_moments(signal)
    half = 8.0 * math.sqrt(max(var, 0.0)) + 1.0
    return np.linspace(mean - half, mean + half, points)


def ks_distance(
    dist: DiscreteDistribution,
    pdf,
    grid,
    continuity_correction: bool = False,
) -> float:
    """Sup of ``|F_discrete − F_continuous|`` over the span of ``grid``.

    ``F_continuous`` is the cumulative trapezoid of ``pdf`` interpolated
    linearly; the discrete CDF is compared at every grid point and on both
    sides of every atom inside the span. With ``continuity_correction`` only
    the atoms are used, each compared at the midpoint of its jump, which
    removes the lattice-spacing floor of the plain distance.
    """
    grid = np.asarray(grid, dtype=float)
    fc = cumulative_trapezoid(np.asarray(pdf, dtype=float), grid, initial=0.0)
    inside = (dist.values >= grid[0]) & (dist.values <= grid[-1])
    atoms = dist.values[inside]
    fc_atoms = np.interp(atoms, grid, fc)
    if continuity_correction:
        mid = (dist.cdf(atoms) + dist.cdf_left(atoms)) / 2
        gaps = [np.abs(mid - fc_atoms)]
    else:
        gaps = [
            np.abs(dist.cdf(grid) - fc),
            np.abs(dist.cdf(atoms) - fc_atoms),
            np.abs(dist.cdf_left(atoms) - fc_atoms),
        ]
    return float(min(1.0, max(float(g.max()) if g.size else 0.0 for g in gaps)))


def parse_signal(spec: str, dim: int, label: str = "signal") -> tuple[DensityState, float]:
    """Parse ``vacuum``, ``coherent:<re>,<im>`` or ``fock:<n>``; returns (state, tail leakage)."""
    spec = spec.strip()
    if spec == "vacuum":
        return fock_state(0, dim, label), 0.0
    kind, _, arg = spec.partition(":")
    if kind == "coherent":
        parts = arg.split(",")
        if len(parts) != 2:
            raise WayAuditError(f"coherent signal needs '<re>,<im>', got {arg!r}")
        alpha = complex(float(parts[0]), float(parts[1]))
        return coherent_state(alpha, dim, label), poisson_tail(alpha, dim)
    if kind == "fock":
        return fock_state(int(arg), dim, label), 0.0
    raise WayAuditError(f"unknown signal spec {spec!r}")


@dataclass
class SweepRow:
    beta: float
    dim: int
    leakage: float
    ks_distance: float
    mean: float
    variance: float

    @property
    def flagged(self) -> bool:
        return self.leakage > LEAKAGE_FLAG


def homodyne_sweep(betas, dim: int, signal_spec: str = "vacuum", points: int = 20001) -> list[SweepRow]:
    signal, sig_leak = parse_signal(signal_spec, dim)
    grid = default_grid(signal, points)
    pdf = quadrature_pdf(signal, grid)
    rows = []
    for beta in sorted(float(b) for b in betas):
        if beta <= 0:
            raise InvariantError("LO amplitude β_LO > 0", f"got {beta}")
        cfg = HomodyneConfig(beta, dim, signal, sig_leak)
        dist = homodyne_distribution(cfg)
        rows.append(
            SweepRow(
                beta=beta,
                dim=dim,
                leakage=truncation_leakage(cfg),
                ks_distance=ks_distance(dist, pdf, grid),
                mean=dist.mean(),
                variance=dist.variance(),
            )
        )
    return rows
