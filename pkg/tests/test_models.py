import numpy as np
import pytest

from conftest import SX, SZ
from wayaudit.constructors import (
    default_layouts,
    ginibre,
    haar_unitary,
    random_density,
    random_model,
    swap_model,
)
from wayaudit.errors import InvariantError, LayoutError
from wayaudit.models import (
    CPMap,
    EffectSet,
    MeasurementModel,
    ProjectorFamily,
    SystemEnvModel,
    channel_purity_residual,
    heisenberg_cp_map,
    implemented_channel,
    implemented_povm,
    implemented_unitary,
    is_projective,
    swap_matrix,
)
from wayaudit.tensor import DensityState, FactorLayout, Operator, opnorm


def product_model(rng, d_s=2, d_p=3):
    S, P, So, Po = default_layouts(d_s, d_p)
    us, up = haar_unitary(d_s, rng), haar_unitary(d_p, rng)
    probe = DensityState(Operator(P, random_density(d_p, rng)))
    return SystemEnvModel.build(probe, np.kron(us, up), S, P, So, Po), us, up


def rand_state(layout, rng):
    return DensityState(Operator(layout, random_density(layout.dim, rng)))


# EffectSet / is_projective


def test_effect_set_validation(qubit):
    with pytest.raises(InvariantError, match="identity"):
        EffectSet.from_matrices(qubit, {"a": np.eye(2) * 0.5})
    with pytest.raises(InvariantError, match="positive"):
        EffectSet.from_matrices(qubit, {"a": np.diag([1.2, 0.5]), "b": np.diag([-0.2, 0.5])})
    with pytest.raises(InvariantError, match="unique"):
        EffectSet(qubit, (("a", Operator(qubit, np.eye(2) / 2)), ("a", Operator(qubit, np.eye(2) / 2))))
    with pytest.raises(LayoutError):
        EffectSet(FactorLayout.of(("P", 2)), (("a", Operator(qubit, np.eye(2))),))


def test_projective_sigma_z(qubit):
    rep = is_projective(EffectSet.from_matrices(qubit, {"+": np.diag([1.0, 0]), "-": np.diag([0, 1.0])}))
    assert rep.projective and rep.defect <= 1e-15


def test_half_identity_not_projective(qubit):
    rep = is_projective(EffectSet.from_matrices(qubit, {"a": np.eye(2) / 2, "b": np.eye(2) / 2}))
    assert not rep.projective
    assert abs(rep.defect - 0.25) <= 1e-15


def test_single_identity_outcome_projective(qubit):
    assert is_projective(EffectSet.from_matrices(qubit, {"all": np.eye(2)})).projective


def test_projector_family_rejects_povm(qubit):
    with pytest.raises(InvariantError):
        ProjectorFamily.from_matrices(qubit, {"a": np.eye(2) / 2, "b": np.eye(2) / 2})


def test_coarse_grain_sums_effects():
    lay = FactorLayout.of(("P", 3))
    es = EffectSet.from_matrices(lay, {str(i): np.diag(np.eye(3)[i]) for i in range(3)})
    cg = es.coarse_grain({"low": ["0", "1"], "high": ["2"]})
    assert np.array_equal(cg["low"].mat, np.diag([1, 1, 0]).astype(complex))


# implemented_channel


def test_product_unitary_channel_ignores_probe(rng):
    sem, us, _ = product_model(rng)
    rho = rand_state(sem.S, rng)
    out = implemented_channel(sem, rho)
    assert opnorm(out.mat - us @ rho.mat @ us.conj().T) <= 1e-12
    assert out.layout == sem.S_out


def test_swap_channel_is_constant(rng):
    S, P, So, Po = default_layouts(3, 3)
    probe = rand_state(P, rng)
    sem = SystemEnvModel.build(probe, swap_matrix(3, 3), S, P, So, Po)
    for _ in range(3):
        out = implemented_channel(sem, rand_state(S, rng))
        assert opnorm(out.mat - probe.mat) <= 1e-12


def test_channel_layout_mismatch(rng):
    sem, _, _ = product_model(rng)
    with pytest.raises(LayoutError):
        implemented_channel(sem, rand_state(sem.P, rng))


def test_channel_preserves_trace_and_positivity(rng):
    for i in range(100):
        d_s, d_p = (2, 2) if i % 2 else (3, 2)
        sem = random_model(rng, d_s, d_p)
        out = implemented_channel(sem, rand_state(sem.S, rng)).mat
        assert abs(np.trace(out) - 1) <= 1e-10
        assert np.linalg.eigvalsh((out + out.conj().T) / 2)[0] >= -1e-10


# implemented_povm


def test_trivial_probe_povm_gives_identity(rng):
    sem = random_model(rng, 2, 3)
    mm = MeasurementModel(sem, EffectSet.from_matrices(sem.P_out, {"all": np.eye(3)}))
    povm = implemented_povm(mm)
    assert opnorm(povm["all"].mat - np.eye(2)) <= 1e-12


def test_swap_povm_transports_effects(rng):
    f = {"+": np.array([[0.7, 0.2], [0.2, 0.3]])}
    f["-"] = np.eye(2) - f["+"]
    for probe in (np.eye(2) / 2, np.diag([1.0, 0.0]), random_density(2, rng)):
        mm, _ = swap_model(SZ, probe_povm=f, probe=probe)
        povm = implemented_povm(mm)
        for lab in f:
            assert opnorm(povm[lab].mat - f[lab]) <= 1e-12


def test_product_povm_is_scalar(rng):
    sem, _, up = product_model(rng)
    f0 = np.diag([1.0, 0.0, 0.0])
    mm = MeasurementModel(sem, EffectSet.from_matrices(sem.P_out, {"0": f0, "rest": np.eye(3) - f0}))
    povm = implemented_povm(mm)
    c = np.trace(sem.probe.mat @ up.conj().T @ f0 @ up)
    assert opnorm(povm["0"].mat - c * np.eye(2)) <= 1e-12


def test_implemented_povm_sums_to_identity(rng):
    for _ in range(50):
        sem = random_model(rng, 2, 3)
        h = ginibre(3, rng)
        f = h @ h.conj().T
        f = f / (np.linalg.eigvalsh(f)[-1] * 1.01)
        mm = MeasurementModel(sem, EffectSet.from_matrices(sem.P_out, {"a": f, "b": np.eye(3) - f}))
        total = sum(e.mat for e in implemented_povm(mm).effects)
        assert opnorm(total - np.eye(2)) <= 1e-10


# CPMap


def test_cp_map_unital_and_matches_povm(rng):
    sem = random_model(rng, 2, 2)
    lam = heisenberg_cp_map(sem)
    assert lam.unitality_residual() <= 1e-12
    f = np.diag([1.0, 0.0])
    mm = MeasurementModel(sem, EffectSet.from_matrices(sem.P_out, {"0": f, "1": np.eye(2) - f}))
    lifted = lam.lift_probe(Operator(sem.P_out, f))
    assert opnorm(lam(lifted).mat - implemented_povm(mm)["0"].mat) <= 1e-12


def test_cp_map_positive_and_linear(rng):
    lam = heisenberg_cp_map(random_model(rng, 2, 3))
    d = lam.source.dim
    for _ in range(20):
        g = ginibre(d, rng)
        out = lam.apply_matrix(g @ g.conj().T)
        assert np.linalg.eigvalsh((out + out.conj().T) / 2)[0] >= -1e-10
    a, b = ginibre(d, rng), ginibre(d, rng)
    x, y = 0.4 + 2j, -1.3
    lhs = lam.apply_matrix(x * a + y * b)
    assert opnorm(lhs - x * lam.apply_matrix(a) - y * lam.apply_matrix(b)) <= 1e-11


def test_cp_map_rejects_wrong_layout(rng):
    lam = heisenberg_cp_map(random_model(rng, 2, 2))
    with pytest.raises(LayoutError):
        lam(Operator(lam.target, np.eye(2)))


def test_channel_cp_map_duality(rng):
    for _ in range(20):
        sem = random_model(rng, 2, 3)
        lam = CPMap(sem)
        rho = rand_state(sem.S, rng)
        b = Operator(sem.S_out, ginibre(2, rng))
        lhs = np.trace(implemented_channel(sem, rho).mat @ b.mat)
        rhs = np.trace(rho.mat @ lam(lam.lift(b)).mat)
        assert abs(lhs - rhs) <= 1e-10


def test_depolarizing_map():
    lam = CPMap.depolarizing(2)
    out = lam(lam.lift(Operator(lam.sem.S_out, SX)))
    assert opnorm(out.mat) <= 1e-15
    out = lam(lam.lift(Operator(lam.sem.S_out, np.eye(2))))
    assert opnorm(out.mat - np.eye(2)) <= 1e-15


# unitary extraction


def test_implemented_unitary_recovers_product_factor(rng):
    sem, us, _ = product_model(rng)
    ext = implemented_unitary(sem)
    assert ext.purity_residual <= 1e-10
    phase = np.trace(us.conj().T @ ext.unitary.mat)
    assert opnorm(ext.unitary.mat - phase / abs(phase) * us) <= 1e-10


def test_swap_channel_is_not_unitary():
    mm, _ = swap_model(SZ)
    assert channel_purity_residual(mm.sem) > 0.1
