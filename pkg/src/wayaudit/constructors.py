"""Random operators and model families with exact conservation laws.

All samplers take a ``numpy.random.Generator`` so that batches are
reproducible from a single seed.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .audit import ConservedQuartet
from .errors import WayAuditError
from .models import EffectSet, MeasurementModel, SystemEnvModel, swap_matrix
from .tensor import (
    DensityState,
    FactorLayout,
    Observable,
    Operator,
    UnitaryMap,
    hermitian_spectrum,
    observable,
)


def ginibre(d: int, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    cols = d if cols is None else cols
    return (rng.standard_normal((d, cols)) + 1j * rng.standard_normal((d, cols))) / np.sqrt(2)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(d, rng))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_isometry(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``d × k`` matrix with orthonormal columns, Haar distributed."""
    return haar_unitary(d, rng)[:, :k]


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = ginibre(d, rng)
    return (g + g.conj().T) / 2


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = ginibre(d, rng, rank or d)
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_observable(
    layout: FactorLayout,
    rng: np.random.Generator,
    levels: int = 3,
    integer: bool = True,
) -> Observable:
    """Observable with random eigenbasis.

    Integer spectra drawn from ``range(levels)`` make degeneracies (and thus
    non-trivial commutant blocks) common.
    """
    d = layout.dim
    if integer:
        eig = rng.integers(0, levels, size=d).astype(float)
    else:
        eig = rng.standard_normal(d)
    v = haar_unitary(d, rng)
    return observable(layout, (v * eig) @ v.conj().T)


def eigenbasis(obs: Observable) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal eigenvectors (columns) and matching eigenvalues."""
    vecs, vals = [], []
    for lam, proj in obs.spectrum:
        w, v = np.linalg.eigh(proj.mat)
        k = int(round(np.real(np.trace(proj.mat))))
        vecs.append(v[:, -k:])
        vals.extend([lam] * k)
    return np.hstack(vecs), np.array(vals)


def _blocks(total: np.ndarray, layout: FactorLayout) -> list[tuple[float, np.ndarray]]:
    obs = hermitian_spectrum(Operator(layout, total))
    out = []
    for lam, proj in obs.spectrum:
        w, v = np.linalg.eigh(proj.mat)
        k = int(round(np.real(np.trace(proj.mat))))
        out.append((lam, v[:, -k:]))
    return out


def _paired_blocks(q: ConservedQuartet):
    lin = q.L_S.layout + q.L_P.layout
    lout = q.L_S_out.layout + q.L_P_out.layout
    bin_ = _blocks(q.input_total(), lin)
    bout = _blocks(q.output_total(), lout)
    if len(bin_) != len(bout) or any(
        abs(a[0] - b[0]) > 1e-8 or a[1].shape != b[1].shape for a, b in zip(bin_, bout)
    ):
        raise WayAuditError("input and output conserved totals have different spectra")
    return lin, lout, [(a[0], a[1], b[1]) for a, b in zip(bin_, bout)]


def conserving_unitary(q: ConservedQuartet, rng: np.random.Generator) -> UnitaryMap:
    """Random unitary satisfying the additive conservation law of ``q``.

    A random Hermitian generator is drawn inside every eigenspace of the
    conserved total and exponentiated, so the result maps each eigenspace of
    ``L_S + L_P`` onto the matching eigenspace of ``L_S' + L_P'``.
    """
    lin, lout, blocks = _paired_blocks(q)
    u = np.zeros((lin.dim, lin.dim), dtype=complex)
    for _, vin, vout in blocks:
        k = vin.shape[1]
        u += vout @ scipy.linalg.expm(1j * random_hermitian(k, rng)) @ vin.conj().T
    return UnitaryMap(u, lin, lout)


def _complement(basis: np.ndarray, sub: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span(basis) ⊖ span(sub)`` in block coordinates."""
    k = basis.shape[1]
    coords = basis.conj().T @ sub
    if coords.shape[1] == 0:
        return np.eye(k, dtype=complex)
    full, _ = np.linalg.qr(np.hstack([coords, np.eye(k)]))
    return full[:, coords.shape[1]:k]


def constrained_conserving_unitary(
    q: ConservedQuartet,
    inputs: np.ndarray,
    outputs: np.ndarray,
    rng: np.random.Generator,
) -> UnitaryMap:
    """Conserving unitary with ``U inputs[:, j] = outputs[:, j]``.

    Every prescribed pair must lie in matching eigenspaces of the conserved
    totals and both families must be orthonormal; the unitary is completed
    with a Haar-random map between the remaining parts of each block.
    """
    lin, lout, blocks = _paired_blocks(q)
    u = np.zeros((lin.dim, lin.dim), dtype=complex)
    used = 0
    for _, vin, vout in blocks:
        # assign prescribed vectors to this block by their weight inside it
        w = np.linalg.norm(vin.conj().T @ inputs, axis=0)
        sel = np.where(w > 0.5)[0]
        used += len(sel)
        xin = vin.conj().T @ inputs[:, sel]
        xout = vout.conj().T @ outputs[:, sel]
        if np.linalg.norm(vin @ xin - inputs[:, sel]) > 1e-8 or np.linalg.norm(
            vout @ xout - outputs[:, sel]
        ) > 1e-8:
            raise WayAuditError("prescribed vectors are not inside matching conserved blocks")
        cin = _complement(vin, inputs[:, sel])
        cout = _complement(vout, outputs[:, sel])
        r = haar_unitary(cin.shape[1], rng) if cin.shape[1] else np.zeros((0, 0))
        blk = xout @ xin.conj().T + cout @ r @ cin.conj().T
        u += vout @ blk @ vin.conj().T
    if used != inputs.shape[1]:
        raise WayAuditError("some prescribed vectors straddle conserved blocks")
    return UnitaryMap(u, lin, lout)


def default_layouts(d_s: int, d_p: int):
    return (
        FactorLayout.of(("S", d_s)),
        FactorLayout.of(("P", d_p)),
        FactorLayout.of(("S'", d_s)),
        FactorLayout.of(("P'", d_p)),
    )


def _relabel(obs: Observable, layout: FactorLayout) -> Observable:
    return observable(layout, obs.mat)


def swap_model(
    L: np.ndarray,
    probe_povm: dict[str, np.ndarray] | None = None,
    probe: np.ndarray | None = None,
) -> tuple[MeasurementModel | SystemEnvModel, ConservedQuartet]:
    """SWAP model with the same observable ``L`` on all four systems.

    Without ``probe_povm`` the spectral projectors of ``L`` on ``P'`` are used.
    """
    d = L.shape[0]
    S_, P_, So, Po = default_layouts(d, d)
    rho = np.eye(d) / d if probe is None else probe
    sem = SystemEnvModel.build(
        DensityState(Operator(P_, rho)), swap_matrix(d, d), S_, P_, So, Po
    )
    q = ConservedQuartet(observable(S_, L), observable(P_, L), observable(So, L), observable(Po, L))
    if probe_povm is None:
        povm = EffectSet.from_observable(q.L_P_out)
    else:
        povm = EffectSet.from_matrices(Po, probe_povm)
    return MeasurementModel(sem, povm), q


def _random_partition(n_items: int, n_groups: int, rng) -> list[int]:
    labels = list(range(n_groups)) + list(rng.integers(0, n_groups, size=n_items - n_groups))
    rng.shuffle(labels)
    return labels


def random_projective_model(
    rng: np.random.Generator,
    d_s: int = 2,
    d_p: int = 2,
    levels: int = 3,
    max_tries: int = 500,
) -> tuple[MeasurementModel, ConservedQuartet]:
    """Random conserving measurement model whose implemented POVM is a PVM.

    The probe starts in an eigenvector ``φ`` of ``L_P`` (eigenvalue ``m``)
    and the probe POVM projects onto groups of ``L_P'`` eigenvectors, so the
    Yanase condition holds. Each eigenvector ``e_j`` of ``L_S`` is routed to
    a random unit vector of ``S' ⊗ R_{o(j)}`` inside the conserved block of
    ``l_j + m``; distinct ``e_j`` go to orthonormal images. Tracing out
    gives ``E_S(o) = Σ_{o(j)=o} |e_j⟩⟨e_j|``.
    """
    S_, P_, So, Po = default_layouts(d_s, d_p)
    for _ in range(max_tries):
        L_S = random_observable(S_, rng, levels)
        L_P = random_observable(P_, rng, levels)
        q = ConservedQuartet(L_S, L_P, _relabel(L_S, So), _relabel(L_P, Po))
        es, ls = eigenbasis(L_S)
        rs, mus = eigenbasis(L_P)
        pidx = int(rng.integers(d_p))
        phi, m = rs[:, pidx], mus[pidx]
        n_out = int(rng.integers(2, min(d_s, d_p) + 1)) if min(d_s, d_p) >= 2 else 1
        group_of_r = _random_partition(d_p, n_out, rng)
        outcome_of_e = rng.integers(0, n_out, size=d_s)

        outputs = np.zeros((d_s * d_p, d_s), dtype=complex)
        ok = True
        for o in range(n_out):
            for v in np.unique(ls + m):
                js = [j for j in range(d_s) if outcome_of_e[j] == o and abs(ls[j] + m - v) < 1e-9]
                if not js:
                    continue
                cols = [
                    np.kron(es[:, a], rs[:, b])
                    for a in range(d_s)
                    for b in range(d_p)
                    if group_of_r[b] == o and abs(ls[a] + mus[b] - v) < 1e-9
                ]
                if len(cols) < len(js):
                    ok = False
                    break
                basis = np.array(cols).T
                outputs[:, js] = basis @ haar_isometry(len(cols), len(js), rng)
            if not ok:
                break
        if not ok:
            continue

        inputs = np.array([np.kron(es[:, j], phi) for j in range(d_s)]).T
        u = constrained_conserving_unitary(q, inputs, outputs, rng)
        probe = DensityState.pure(P_, phi)
        sem = SystemEnvModel.build(probe, u, S_, P_, So, Po)
        effects = {}
        for o in range(n_out):
            sel = [b for b in range(d_p) if group_of_r[b] == o]
            effects[f"o{o}"] = rs[:, sel] @ rs[:, sel].conj().T
        povm = EffectSet.from_matrices(Po, effects)
        return MeasurementModel(sem, povm), q
    raise WayAuditError("could not sample a feasible projective model")


def random_unitary_channel_model(
    rng: np.random.Generator,
    d_s: int = 2,
    d_p: int = 2,
    levels: int = 3,
    max_components: int = 2,
) -> tuple[SystemEnvModel, ConservedQuartet, np.ndarray]:
    """Random conserving model implementing a unitary channel.

    The probe is a mixture of orthonormal ``L_P`` eigenvectors ``φ_i``;
    ``U(e_j ⊗ φ_i) = V e_j ⊗ φ'_i`` with ``V`` block-random inside the
    eigenspaces of ``L_S`` and ``φ'_i`` orthonormal in the eigenspaces of
    ``L_P'`` that match ``φ_i``. Returns the model, the quartet and ``V``.
    """
    S_, P_, So, Po = default_layouts(d_s, d_p)
    L_S = random_observable(S_, rng, levels)
    L_P = random_observable(P_, rng, levels)
    q = ConservedQuartet(L_S, L_P, _relabel(L_S, So), _relabel(L_P, Po))
    es, ls = eigenbasis(L_S)
    rs, mus = eigenbasis(L_P)

    v = np.zeros((d_s, d_s), dtype=complex)
    for lam in np.unique(ls):
        idx = np.where(np.abs(ls - lam) < 1e-9)[0]
        blk = es[:, idx]
        v += blk @ haar_unitary(len(idx), rng) @ blk.conj().T

    k = int(rng.integers(1, min(max_components, d_p) + 1))
    picks = rng.choice(d_p, size=k, replace=False)
    weights = rng.dirichlet(np.ones(k))
    phis = rs[:, picks]
    phis_out = np.zeros_like(phis)
    for mu in np.unique(mus[picks]):
        sel = np.where(np.abs(mus[picks] - mu) < 1e-9)[0]
        space = np.where(np.abs(mus - mu) < 1e-9)[0]
        phis_out[:, sel] = rs[:, space] @ haar_isometry(len(space), len(sel), rng)

    inputs, outputs = [], []
    for i in range(k):
        for j in range(d_s):
            inputs.append(np.kron(es[:, j], phis[:, i]))
            outputs.append(np.kron(v @ es[:, j], phis_out[:, i]))
    u = constrained_conserving_unitary(q, np.array(inputs).T, np.array(outputs).T, rng)
    rho = (phis * weights) @ phis.conj().T
    sem = SystemEnvModel.build(DensityState(Operator(P_, rho)), u, S_, P_, So, Po)
    return sem, q, v


def random_model(
    rng: np.random.Generator, d_s: int = 2, d_p: int = 2
) -> SystemEnvModel:
    """Haar-random unitary with a random full-rank probe; no conservation structure."""
    S_, P_, So, Po = default_layouts(d_s, d_p)
    probe = DensityState(Operator(P_, random_density(d_p, rng)))
    return SystemEnvModel.build(probe, haar_unitary(d_s * d_p, rng), S_, P_, So, Po)


def shifted_quartet(q: ConservedQuartet, c: float) -> ConservedQuartet:
    """Move a constant ``c`` of charge from the probe to the system output.

    ``L_S' + c`` and ``L_P' − c`` leave the conserved total unchanged, so any
    conserving unitary still conserves, while the system-side relation picks
    up a flat shift ``γ = c``.
    """
    so = q.L_S_out
    po = q.L_P_out
    return ConservedQuartet(
        q.L_S,
        q.L_P,
        observable(so.layout, so.mat + c * np.eye(so.layout.dim)),
        observable(po.layout, po.mat - c * np.eye(po.layout.dim)),
    )
