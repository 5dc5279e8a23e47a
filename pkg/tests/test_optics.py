import numpy as np
import pytest
from scipy.integrate import trapezoid

from oracles.homodyne_oracle import ks_reference
from wayaudit.audit import INAPPLICABLE, check_additive_conservation, check_yanase, way_audit
from wayaudit.errors import InvariantError, WayAuditError
from wayaudit.models import implemented_povm
from wayaudit.optics import (
    DiscreteDistribution,
    HomodyneConfig,
    beam_splitter,
    coherent_state,
    default_grid,
    fock_operators,
    fock_state,
    homodyne_distribution,
    homodyne_model,
    homodyne_povm,
    homodyne_sweep,
    ks_distance,
    quadrature_moments,
    quadrature_pdf,
    truncation_leakage,
)
from wayaudit.tensor import opnorm


def vacuum_cfg(beta, dim=128):
    return HomodyneConfig(beta, dim, fock_state(0, dim, "signal"))


def test_fock_operators_structure():
    f = fock_operators(6)
    a = f.a.mat
    e0, e1 = np.eye(6)[0], np.eye(6)[1]
    assert np.array_equal(a @ e0, np.zeros(6))
    assert np.array_equal(a @ e1, e0.astype(complex))
    for m in range(5):
        assert a[m, m + 1] == np.sqrt(m + 1)
    assert np.count_nonzero(a) == 5
    assert opnorm(f.n.mat - a.conj().T @ a) <= 1e-12
    assert opnorm(f.q.mat - (a + a.conj().T) / 2) == 0


def test_truncated_ccr_only_top_entry():
    dim = 9
    a = fock_operators(dim).a.mat
    comm = a @ a.conj().T - a.conj().T @ a
    target = np.eye(dim)
    target[-1, -1] = 1 - dim
    assert opnorm(comm - target) <= 1e-12


def test_fock_operators_dim_guard():
    with pytest.raises(WayAuditError):
        fock_operators(1)


def test_coherent_state_basics():
    assert np.array_equal(coherent_state(0, 4).mat, np.diag([1.0, 0, 0, 0]).astype(complex))
    beta = 1.7 - 0.4j
    dim = int(8 * abs(beta) ** 2 + 16)
    rho = coherent_state(beta, dim)
    n = np.real(np.trace(rho.mat @ fock_operators(dim).n.mat))
    assert abs(n - abs(beta) ** 2) / abs(beta) ** 2 <= 1e-6
    assert abs(np.trace(rho.mat) - 1) <= 1e-12


def test_coherent_state_margin():
    with pytest.raises(InvariantError, match="margin"):
        coherent_state(3.0, 36)


def test_beam_splitter_examples():
    dim = 5
    u = beam_splitter(dim, np.pi / 4).mat
    vac = np.zeros(dim * dim)
    vac[0] = 1
    assert opnorm((u @ vac - vac)[:, None]) <= 1e-15
    one = np.zeros(dim * dim)
    one[1 * dim + 0] = 1
    expect = np.zeros(dim * dim, dtype=complex)
    expect[1 * dim + 0] = 1 / np.sqrt(2)
    expect[0 * dim + 1] = 1j / np.sqrt(2)
    assert np.linalg.norm(u @ one - expect) <= 1e-15


def test_beam_splitter_conserves_exactly():
    dim = 7
    u = beam_splitter(dim, 0.37).mat
    n = np.diag(np.add.outer(np.arange(dim), np.arange(dim)).ravel().astype(float))
    assert opnorm(u.conj().T @ n @ u - n) <= 1e-12
    assert opnorm(n @ u - u @ n) == 0.0


def test_beam_splitter_linear_mode_transform():
    # inside untruncated blocks a ↦ cos θ a + i sin θ b
    dim, th = 6, 0.6
    u = beam_splitter(dim, th).mat
    a = fock_operators(dim).a.mat
    A = np.kron(a, np.eye(dim))
    B = np.kron(np.eye(dim), a)
    lhs = u.conj().T @ A @ u
    rhs = np.cos(th) * A + 1j * np.sin(th) * B
    low = np.add.outer(np.arange(dim), np.arange(dim)).ravel() < dim - 1
    assert opnorm((lhs - rhs)[np.ix_(low, low)]) <= 1e-12


def test_homodyne_model_audit_configuration():
    cfg = HomodyneConfig(1.0, 12, fock_state(0, 12, "signal"))
    mm, q = homodyne_model(cfg)
    assert check_yanase(mm.probe_povm, q.L_P_out).residual == 0.0
    assert check_additive_conservation(mm.sem.unitary, q).residual == 0.0
    rep = way_audit(mm, q)
    assert rep.verdict == INAPPLICABLE
    assert rep.projectivity_defect > 1e-3


def test_homodyne_model_matches_blockwise_povm():
    cfg = HomodyneConfig(1.2, 10, fock_state(0, 10, "signal"))
    mm, _ = homodyne_model(cfg)
    dense = implemented_povm(mm)
    sparse = homodyne_povm(cfg)
    assert dense.labels == sparse.labels
    for (_, x), (_, y) in zip(dense, sparse):
        assert opnorm(x.mat - y.mat) <= 1e-12


def test_homodyne_zero_beta_rejected():
    cfg = HomodyneConfig(0.0, 8, fock_state(0, 8, "signal"))
    with pytest.raises(WayAuditError):
        homodyne_model(cfg)
    with pytest.raises(WayAuditError):
        homodyne_distribution(cfg)


def test_homodyne_margin_rejected():
    with pytest.raises(InvariantError):
        vacuum_cfg(6.0, dim=128)


def test_vacuum_distribution_symmetric():
    for beta in (1.0, 2.5):
        d = homodyne_distribution(vacuum_cfg(beta, 64))
        assert np.max(np.abs(d.probabilities - d.probabilities[::-1])) <= 1e-9
        assert abs(d.probabilities.sum() - 1) <= 1e-9


def test_coherent_mean_tracks_quadrature():
    alpha, beta, dim = 0.8, 4.0, 128
    cfg = HomodyneConfig(beta, dim, coherent_state(alpha, dim, "signal"))
    d = homodyne_distribution(cfg)
    mean_q, _ = quadrature_moments(cfg.signal)
    assert abs(mean_q - alpha) <= 1e-9
    assert abs(d.mean() - mean_q) <= 3 * np.sqrt(d.variance())
    assert abs(d.mean() - mean_q) <= 1e-9


def test_single_photon_bimodal():
    dim = 128
    sig = fock_state(1, dim, "signal")
    grid = default_grid(sig)
    pdf = quadrature_pdf(sig, grid)
    ks = []
    for beta in (1.0, 2.0, 4.0):
        d = homodyne_distribution(HomodyneConfig(beta, dim, sig))
        # the zero outcome is forbidden by parity, and the modes sit off zero
        assert d.probabilities[d.values == 0.0].sum() <= 1e-12
        assert abs(d.values[np.argmax(d.probabilities)]) > 0.2
        assert abs(d.probabilities[d.values < 0].sum() - 0.5) <= 1e-9
        ks.append(ks_distance(d, pdf, grid))
    assert ks[0] > ks[1] > ks[2]


def test_quadrature_pdf_vacuum_and_single_photon():
    sig = fock_state(0, 32)
    grid = np.linspace(-4, 4, 8001)
    pdf = quadrature_pdf(sig, grid)
    dx = grid[1] - grid[0]
    assert abs(trapezoid(pdf, grid) - 1) <= 1e-6
    mean = np.sum(grid * pdf) * dx
    var = np.sum(grid**2 * pdf) * dx - mean**2
    assert abs(mean) <= 1e-8 and abs(var - 0.25) <= 1e-8
    m, v = quadrature_moments(sig)
    assert abs(m) <= 1e-15 and abs(v - 0.25) <= 1e-15
    one = quadrature_pdf(fock_state(1, 32), np.array([-0.5, 0.0, 0.5]))
    assert abs(one[1]) <= 1e-15 and one[0] > 0.1


def test_quadrature_pdf_rejects_bad_grid():
    with pytest.raises(WayAuditError):
        quadrature_pdf(fock_state(0, 4), [0.0, 0.0, 1.0])


def test_ks_against_own_discretization():
    sig = fock_state(0, 16)
    grid = np.linspace(-3, 3, 4001)
    pdf = quadrature_pdf(sig, grid)
    # fine lattice carrying the pdf's own mass
    w = pdf * (grid[1] - grid[0])
    d = DiscreteDistribution(grid, w / w.sum())
    assert ks_distance(d, pdf, grid) <= 5 * (grid[1] - grid[0])


def test_ks_mismatched_pair():
    dim = 128
    one = fock_state(1, dim)
    grid = default_grid(one)
    pdf = quadrature_pdf(one, grid)
    vals = [ks_distance(homodyne_distribution(vacuum_cfg(b, dim)), pdf, grid) for b in (1.0, 2.0, 4.0)]
    assert vals[0] > 0.3
    # F_1 = F_0 − x·pdf_0, so the large-β limit is sup |x pdf_0(x)| = 1/√(2πe)
    limit = 1 / np.sqrt(2 * np.pi * np.e)
    assert vals[0] > vals[1] > vals[2] > limit


def test_ks_vacuum_beta4_regression():
    d = homodyne_distribution(vacuum_cfg(4.0))
    sig = fock_state(0, 128)
    grid = default_grid(sig)
    ks = ks_distance(d, quadrature_pdf(sig, grid), grid)
    assert abs(ks - 0.050272063680627754) <= 1e-6
    assert abs(ks - ks_reference(0.0, 4.0)) <= 1e-6


def test_continuity_correction_removes_lattice_floor():
    sig = fock_state(0, 128)
    grid = default_grid(sig)
    pdf = quadrature_pdf(sig, grid)
    d = homodyne_distribution(vacuum_cfg(3.0))
    assert ks_distance(d, pdf, grid, continuity_correction=True) < 0.1 * ks_distance(d, pdf, grid)


def test_leakage_small_for_adequate_dim():
    assert truncation_leakage(vacuum_cfg(4.0)) <= 1e-6
    # a tight truncation clips photon-number blocks
    assert truncation_leakage(vacuum_cfg(2.0, dim=17)) > 1e-6


def test_discrete_distribution_invariants():
    with pytest.raises(InvariantError):
        DiscreteDistribution([0.0, 0.0], [0.5, 0.5])
    with pytest.raises(InvariantError):
        DiscreteDistribution([0.0, 1.0], [0.5, 0.6])
    d = DiscreteDistribution([0.0, 1.0], [0.25, 0.75])
    assert d.cdf(0.0) == 0.25 and d.cdf_left(0.0) == 0.0 and d.cdf(2.0) == 1.0


def test_sweep_rows_and_guards():
    rows = homodyne_sweep([2, 1], 64, "vacuum", points=4001)
    assert [r.beta for r in rows] == [1.0, 2.0]
    assert rows[0].ks_distance > rows[1].ks_distance
    with pytest.raises(InvariantError):
        homodyne_sweep([0], 64)
    with pytest.raises(InvariantError):
        homodyne_sweep([5], 64)
    with pytest.raises(WayAuditError):
        homodyne_sweep([1], 64, "squeezed:1")
