"""Dense operator algebra on labeled tensor-product spaces.

Every operator carries a :class:`FactorLayout` describing which subsystems it
acts on, so that partial traces and tensor products can be checked by label
rather than by shape alone. Storage is always a dense ``complex128`` matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvariantError, LayoutError

DEFAULT_TOL = 1e-9
CLUSTER_TOL = 1e-8


def opnorm(mat: np.ndarray) -> float:
    """Spectral (largest singular value) norm of a dense matrix."""
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


@dataclass(frozen=True)
class FactorLayout:
    """Ordered list of ``(label, dim)`` pairs.

    An empty layout is the trivial one-dimensional space, which is how a
    system that has been fully absorbed (e.g. the signal output of a
    homodyne detector) is represented.
    """

    factors: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        factors = tuple((str(lab), int(dim)) for lab, dim in self.factors)
        labels = [lab for lab, _ in factors]
        if len(set(labels)) != len(labels):
            raise InvariantError("layout labels unique", f"got {labels}")
        for lab, dim in factors:
            if dim < 1:
                raise InvariantError("factor dim positive", f"{lab!r} has dim {dim}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "FactorLayout":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def __len__(self):
        return len(self.factors)

    def __add__(self, other: "FactorLayout") -> "FactorLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LayoutError(f"label collision: {sorted(clash)}")
        return FactorLayout(self.factors + other.factors)

    def restrict(self, labels: Iterable[str]) -> "FactorLayout":
        keep = set(labels)
        return FactorLayout(tuple(f for f in self.factors if f[0] in keep))

    def relabel(self, mapping: dict[str, str]) -> "FactorLayout":
        return FactorLayout(tuple((mapping.get(lab, lab), d) for lab, d in self.factors))

    def __str__(self):
        return "⊗".join(f"{lab}[{d}]" for lab, d in self.factors) or "1"


def _frozen(mat) -> np.ndarray:
    arr = np.array(mat, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix acting on ``layout``."""

    layout: FactorLayout
    mat: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.mat)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise InvariantError(
                "operator shape matches layout", f"shape {mat.shape} vs layout {self.layout}"
            )
        if not np.all(np.isfinite(mat)):
            raise InvariantError("operator entries finite")
        object.__setattr__(self, "mat", mat)

    @classmethod
    def identity(cls, layout: FactorLayout) -> "Operator":
        return cls(layout, np.eye(layout.dim))

    @classmethod
    def zeros(cls, layout: FactorLayout) -> "Operator":
        return cls(layout, np.zeros((layout.dim, layout.dim)))

    @property
    def dim(self) -> int:
        return self.layout.dim

    def dag(self) -> "Operator":
        return Operator(self.layout, self.mat.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def norm(self) -> float:
        return opnorm(self.mat)

    def _check(self, other: "Operator"):
        if other.layout != self.layout:
            raise LayoutError(f"layout mismatch: {self.layout} vs {other.layout}")

    def __matmul__(self, other):
        other = as_operator(other)
        self._check(other)
        return Operator(self.layout, self.mat @ other.mat)

    def __add__(self, other):
        other = as_operator(other)
        self._check(other)
        return Operator(self.layout, self.mat + other.mat)

    def __sub__(self, other):
        other = as_operator(other)
        self._check(other)
        return Operator(self.layout, self.mat - other.mat)

    def __mul__(self, scalar):
        return Operator(self.layout, self.mat * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return Operator(self.layout, -self.mat)

    def allclose(self, other, atol: float = DEFAULT_TOL) -> bool:
        other = as_operator(other)
        return other.layout == self.layout and opnorm(self.mat - other.mat) <= atol

    def __repr__(self):
        return f"Operator({self.layout}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator with its spectral decomposition.

    ``eigenvalues`` are ascending and pairwise separated by more than the
    clustering threshold used to build the object; ``projectors[k]`` is the
    spectral projector for ``eigenvalues[k]``.
    """

    op: Operator
    eigenvalues: np.ndarray
    projectors: tuple[Operator, ...]

    @property
    def layout(self) -> FactorLayout:
        return self.op.layout

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def spectrum(self) -> list[tuple[float, Operator]]:
        return list(zip(self.eigenvalues.tolist(), self.projectors))

    def apply(self, fn) -> Operator:
        """Spectral calculus: ``sum_k fn(lambda_k) P_k``."""
        out = np.zeros_like(self.mat)
        for lam, proj in zip(self.eigenvalues, self.projectors):
            out = out + fn(lam) * proj.mat
        return Operator(self.layout, out)

    def reconstruction_residual(self) -> float:
        return opnorm(self.apply(lambda x: x).mat - self.mat)

    def __repr__(self):
        return f"Observable({self.layout}, eigenvalues={np.round(self.eigenvalues, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class DensityState:
    op: Operator
    tol: float = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        m = self.op.mat
        if opnorm(m - m.conj().T) > self.tol:
            raise InvariantError("state Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > self.tol:
            raise InvariantError("state unit trace", f"trace = {tr:.3g}")
        lo = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
        if lo < -self.tol:
            raise InvariantError("state positive", f"min eigenvalue {lo:.3g}")

    @classmethod
    def pure(cls, layout: FactorLayout, vec) -> "DensityState":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(Operator(layout, np.outer(v, v.conj())))

    @classmethod
    def maximally_mixed(cls, layout: FactorLayout) -> "DensityState":
        return cls(Operator(layout, np.eye(layout.dim) / layout.dim))

    @property
    def layout(self) -> FactorLayout:
        return self.op.layout

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


@dataclass(frozen=True, eq=False)
class UnitaryMap:
    """Unitary from ``source`` to ``target``; the two layouts share a total dimension."""

    mat: np.ndarray
    source: FactorLayout
    target: FactorLayout
    tol: float = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        mat = _frozen(self.mat)
        if self.source.dim != self.target.dim:
            raise InvariantError(
                "unitary source/target dims equal", f"{self.source} vs {self.target}"
            )
        d = self.source.dim
        if mat.shape != (d, d):
            raise InvariantError("unitary shape matches layouts", f"shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise InvariantError("operator entries finite")
        res = unitarity_residual(mat)
        if res > self.tol:
            raise InvariantError("U†U = 1 and UU† = 1", f"residual {res:.3g}")
        object.__setattr__(self, "mat", mat)

    @classmethod
    def on(cls, layout: FactorLayout, mat, tol: float = DEFAULT_TOL) -> "UnitaryMap":
        return cls(mat, layout, layout, tol)

    def dag(self) -> "UnitaryMap":
        return UnitaryMap(self.mat.conj().T, self.target, self.source, self.tol)

    def conjugate(self, a) -> Operator:
        """Heisenberg action ``U† a U`` for ``a`` on the target layout."""
        a = as_operator(a)
        if a.layout != self.target:
            raise LayoutError(f"operand on {a.layout}, unitary target is {self.target}")
        return Operator(self.source, self.mat.conj().T @ a.mat @ self.mat)

    def evolve(self, rho) -> Operator:
        """Schrödinger action ``U rho U†`` for ``rho`` on the source layout."""
        rho = as_operator(rho)
        if rho.layout != self.source:
            raise LayoutError(f"state on {rho.layout}, unitary source is {self.source}")
        return Operator(self.target, self.mat @ rho.mat @ self.mat.conj().T)

    def __matmul__(self, other: "UnitaryMap") -> "UnitaryMap":
        if other.target != self.source:
            raise LayoutError(f"cannot compose: {other.target} -> {self.source}")
        return UnitaryMap(self.mat @ other.mat, other.source, self.target, self.tol)

    def __repr__(self):
        return f"UnitaryMap({self.source} -> {self.target})"


OperatorLike = Union[Operator, Observable, DensityState]


def as_operator(x) -> Operator:
    if isinstance(x, Operator):
        return x
    if isinstance(x, (Observable, DensityState)):
        return x.op
    raise TypeError(f"expected an operator, got {type(x).__name__}")


def unitarity_residual(mat) -> float:
    mat = np.asarray(mat)
    eye = np.eye(mat.shape[0])
    return max(opnorm(mat.conj().T @ mat - eye), opnorm(mat @ mat.conj().T - eye))


def tensor_product(a: OperatorLike, b: OperatorLike) -> Operator:
    a, b = as_operator(a), as_operator(b)
    return Operator(a.layout + b.layout, np.kron(a.mat, b.mat))


def tensor_unitaries(u: UnitaryMap, v: UnitaryMap) -> UnitaryMap:
    return UnitaryMap(np.kron(u.mat, v.mat), u.source + v.source, u.target + v.target, max(u.tol, v.tol))


def embed(a: OperatorLike, layout: FactorLayout) -> Operator:
    """Extend ``a`` by identities to the full ``layout``.

    The factors of ``a`` must appear in ``layout`` in the same relative
    order; the remaining factors receive the identity.
    """
    a = as_operator(a)
    missing = [lab for lab in a.layout.labels if lab not in layout.labels]
    if missing:
        raise LayoutError(f"unknown labels {missing} for layout {layout}")
    rest = FactorLayout(tuple(f for f in layout.factors if f[0] not in a.layout.labels))
    big = np.kron(a.mat, np.eye(rest.dim))
    # reorder (a-factors, rest-factors) into the target order
    order = list(a.layout.labels) + list(rest.labels)
    dims = [dict(layout.factors)[lab] for lab in order]
    n = len(order)
    perm = [order.index(lab) for lab in layout.labels]
    t = big.reshape(dims + dims)
    t = t.transpose(perm + [n + p for p in perm])
    return Operator(layout, t.reshape(layout.dim, layout.dim))


def partial_trace(m: OperatorLike, keep: Iterable[str]) -> Operator:
    """Trace out every factor whose label is not in ``keep``.

    The kept factors stay in their original order. Keeping nothing returns a
    1×1 operator on the trivial layout holding the full trace.
    """
    m = as_operator(m)
    keep = set(keep)
    unknown = keep - set(m.layout.labels)
    if unknown:
        raise LayoutError(f"unknown labels {sorted(unknown)} for layout {m.layout}")
    dims = list(m.layout.dims)
    n = len(dims)
    if n == 0:
        return Operator(FactorLayout(), m.mat)
    t = m.mat.reshape(dims + dims)
    # einsum subscripts: row indices 0..n-1, column indices n..2n-1, traced
    # factors share the row index on both sides
    rows = list(range(n))
    cols = [i if m.layout.labels[i] not in keep else n + i for i in range(n)]
    out = [i for i in rows if m.layout.labels[i] in keep] + [
        n + i for i in rows if m.layout.labels[i] in keep
    ]
    res = np.einsum(t, rows + cols, out)
    kept = m.layout.restrict(keep)
    return Operator(kept, np.asarray(res).reshape(kept.dim, kept.dim))


def hermitian_spectrum(
    a: OperatorLike, cluster_tol: float = CLUSTER_TOL, tol: float = DEFAULT_TOL
) -> Observable:
    """Spectral decomposition with degenerate eigenvalues merged.

    Eigenvalues closer than ``cluster_tol`` times the spectral range (or
    absolutely, when the range is below one) share a projector.
    """
    a = as_operator(a)
    m = a.mat
    scale = max(1.0, opnorm(m))
    herm = opnorm(m - m.conj().T)
    if herm > tol * scale:
        raise InvariantError("operator Hermitian", f"‖A − A†‖ = {herm:.3g}")
    h = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(h)
    span = float(w[-1] - w[0]) if len(w) else 0.0
    thr = cluster_tol * max(1.0, span)
    groups: list[list[int]] = []
    for i in range(len(w)):
        if groups and w[i] - w[groups[-1][-1]] <= thr:
            groups[-1].append(i)
        else:
            groups.append([i])
    eigs, projs = [], []
    for g in groups:
        vg = v[:, g]
        p = vg @ vg.conj().T
        p = (p + p.conj().T) / 2
        eigs.append(float(np.mean(w[g])))
        projs.append(Operator(a.layout, p))
    return Observable(a, np.array(eigs), tuple(projs))


def observable(layout: FactorLayout, mat, **kw) -> Observable:
    return hermitian_spectrum(Operator(layout, mat), **kw)


def one_param_unitary(obs: Observable, t: float) -> UnitaryMap:
    """``exp(i t L)`` assembled from the spectral projectors of ``L``."""
    out = np.zeros(obs.mat.shape, dtype=complex)
    for lam, proj in zip(obs.eigenvalues, obs.projectors):
        out = out + np.exp(1j * t * lam) * proj.mat
    return UnitaryMap.on(obs.layout, out)


def commutator_norm(a: OperatorLike, b: OperatorLike) -> float:
    a, b = as_operator(a), as_operator(b)
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout} vs {b.layout}")
    return opnorm(a.mat @ b.mat - b.mat @ a.mat)


def sum_observable(parts: Sequence[OperatorLike], layout: FactorLayout) -> Observable:
    """Additive observable ``sum_i L_i`` with each ``L_i`` embedded in ``layout``."""
    total = np.zeros((layout.dim, layout.dim), dtype=complex)
    for p in parts:
        total = total + embed(p, layout).mat
    return hermitian_spectrum(Operator(layout, total))
