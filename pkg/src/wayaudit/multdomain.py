"""Schwarz inequality and multiplicative-domain membership for unital CP maps.

Membership is tested pointwise: an operator ``a`` belongs to the
multiplicative domain of ``Λ`` when both ``Λ(a†a) = Λ(a†)Λ(a)`` and
``Λ(aa†) = Λ(a)Λ(a†)`` hold. Members then factor out of ``Λ`` on either
side of any product, which :func:`bimodule_check` probes with random
operands.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .constructors import ginibre
from .errors import LayoutError
from .models import CPMap
from .tensor import DEFAULT_TOL, Operator, as_operator, opnorm


@dataclass
class MembershipReport:
    left_defect: float
    right_defect: float
    member: bool
    tolerance: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BimoduleReport:
    max_defect: float
    samples: int
    precondition_met: bool
    membership: MembershipReport

    def to_dict(self) -> dict:
        return asdict(self)


def _operand(lam: CPMap, a) -> np.ndarray:
    a = as_operator(a)
    if a.layout != lam.source:
        raise LayoutError(f"operand on {a.layout}, map acts on {lam.source}")
    return a.mat


def schwarz_defect(lam: CPMap, a) -> float:
    """Smallest eigenvalue of ``Λ(a†a) − Λ(a†)Λ(a)``; non-negative for unital CP maps."""
    m = _operand(lam, a)
    ad = m.conj().T
    gap = lam.apply_matrix(ad @ m) - lam.apply_matrix(ad) @ lam.apply_matrix(m)
    gap = (gap + gap.conj().T) / 2
    return float(np.linalg.eigvalsh(gap)[0])


def in_mult_domain(lam: CPMap, a, tol: float = DEFAULT_TOL) -> MembershipReport:
    m = _operand(lam, a)
    ad = m.conj().T
    la, lad = lam.apply_matrix(m), lam.apply_matrix(ad)
    left = opnorm(lam.apply_matrix(ad @ m) - lad @ la)
    right = opnorm(lam.apply_matrix(m @ ad) - la @ lad)
    return MembershipReport(left, right, left <= tol and right <= tol, tol)


def bimodule_check(
    lam: CPMap,
    a,
    samples: int = 100,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    extra: list | None = None,
) -> BimoduleReport:
    """Largest of ``‖Λ(ba) − Λ(b)Λ(a)‖`` and ``‖Λ(ab) − Λ(a)Λ(b)‖`` over random ``b``.

    ``b`` are Ginibre matrices drawn from ``seed``; ``extra`` appends
    hand-picked operands. A non-member ``a`` is reported through
    ``precondition_met`` instead of raising.
    """
    m = _operand(lam, a)
    membership = in_mult_domain(lam, a, tol)
    rng = np.random.default_rng(seed)
    d = lam.source.dim
    la = lam.apply_matrix(m)
    bs = [ginibre(d, rng) for _ in range(samples)]
    bs += [_operand(lam, b) for b in (extra or [])]
    worst = 0.0
    for b in bs:
        lb = lam.apply_matrix(b)
        worst = max(
            worst,
            opnorm(lam.apply_matrix(b @ m) - lb @ la),
            opnorm(lam.apply_matrix(m @ b) - la @ lb),
        )
    return BimoduleReport(worst, len(bs), membership.member, membership)


def hs_normalized(a) -> Operator:
    """Rescale an operator to unit Hilbert-Schmidt norm."""
    a = as_operator(a)
    return a * (1.0 / np.linalg.norm(a.mat))
