import math

import numpy as np
import pytest

from qspec.baths import (
    BathModel,
    CentralSpinSpec,
    DissipationSpec,
    SpinBosonSpec,
    annihilation,
    build_central_spin,
    build_spin_boson,
    dipolar_matrix,
    dissipative_free_evolution,
    effective_larmor,
    effective_norm,
    make_bath,
    required_levels,
    rescale_bath,
    single_mode_bath,
    single_qubit_bath,
    spin_boson_mode_baths,
    spin_component,
    thermal_state,
)
from qspec.errors import (
    DimensionMismatch,
    DimensionTooLarge,
    InconsistentSpec,
    NonHermitianInput,
    TruncationInsufficient,
)
from qspec.linalg import (
    SIGMA_X,
    SIGMA_Z,
    choi_matrix,
    conjugation_superop,
    expm_hermitian,
    vec_identity,
)
from qspec.units import dipolar_coefficient


def test_single_qubit_bath_operators():
    bath = single_qubit_bath(a=0.1, b=1.0)
    np.testing.assert_allclose(bath.a_op, 0.1 * SIGMA_X)
    np.testing.assert_allclose(bath.b_op, SIGMA_Z)
    assert bath.a_norm_eff == pytest.approx(0.1)
    assert bath.dim == 2


def test_make_bath_rejects_bad_inputs():
    with pytest.raises(NonHermitianInput):
        make_bath(np.array([[0, 1], [0, 0]]), SIGMA_Z, np.eye(2) / 2)
    with pytest.raises(ValueError):
        make_bath(SIGMA_X, SIGMA_Z, np.diag([0.9, 0.3]))  # trace 1.2
    with pytest.raises(DimensionMismatch):
        make_bath(SIGMA_X, np.eye(3), np.eye(2) / 2)


@pytest.mark.parametrize("beta,omega", [(10.0, 0.5), (1.0, 0.25), (0.1, 0.25)])
def test_required_levels_meets_tail_rule(beta, omega):
    n = required_levels(beta, omega, tail=1e-4)
    q = math.exp(-beta * omega)
    assert q ** (n + 1) <= 1e-4
    if n > 0:
        assert q ** n > 1e-4  # smallest such n


def test_thermal_state_occupation():
    beta, omega = 0.5, 0.3
    n_levels = required_levels(beta, omega) + 10
    rho = thermal_state(omega, beta, n_levels)
    assert abs(np.trace(rho) - 1.0) < 1e-12
    num = np.diag(np.arange(n_levels))
    nbar = 1.0 / math.expm1(beta * omega)
    assert np.trace(rho @ num).real == pytest.approx(nbar, rel=1e-3)


def test_annihilation_commutator():
    b = annihilation(8)
    comm = b @ b.conj().T - b.conj().T @ b
    # canonical except the truncation corner
    np.testing.assert_allclose(comm[:7, :7], np.eye(7), atol=1e-14)
    assert comm[7, 7] == pytest.approx(-7.0)


def test_spin_boson_spec_couplings():
    spec = SpinBosonSpec(alpha=0.4, omega_max=2.0, n_modes=8, beta=1.0)
    assert spec.delta_omega == pytest.approx(0.25)
    assert spec.omega(3) == pytest.approx(0.75)
    assert spec.coupling(3) == pytest.approx(math.sqrt(0.4 * 0.75 * 0.25))
    assert spec.nbar(3) == pytest.approx(1.0 / math.expm1(0.75))


def test_spin_boson_explicit_truncation_checked():
    spec = SpinBosonSpec(alpha=0.1, omega_max=1.0, n_modes=4, beta=0.5, n_max=3)
    with pytest.raises(TruncationInsufficient):
        spec.mode_n_max(1)  # beta*omega = 0.125 needs far more than 3 levels


def test_single_mode_bath_effective_norm_ignores_cold_tail():
    bath = single_mode_bath(g=0.05, omega=1.0, beta=8.0, n_levels=30)
    full = float(np.linalg.norm(bath.a_op, 2))
    eff = effective_norm(bath)
    assert eff == bath.a_norm_eff
    assert eff < 0.5 * full  # tail elements ~ g*sqrt(n) would dominate
    assert eff > 0.0


def test_spin_boson_mode_baths_shapes():
    spec = SpinBosonSpec(alpha=0.2, omega_max=2.0, n_modes=4, beta=2.0)
    baths = spin_boson_mode_baths(spec)
    assert len(baths) == 4
    for l, bath in enumerate(baths, start=1):
        assert bath.dim == spec.mode_n_max(l) + 1
        assert abs(np.trace(bath.rho0) - 1.0) < 1e-12


def test_build_spin_boson_matches_mode_sum():
    spec = SpinBosonSpec(alpha=0.2, omega_max=2.0, n_modes=2, beta=4.0)
    full = build_spin_boson(spec)
    modes = spin_boson_mode_baths(spec)
    d0, d1 = modes[0].dim, modes[1].dim
    assert full.dim == d0 * d1
    a_sum = np.kron(modes[0].a_op, np.eye(d1)) + np.kron(np.eye(d0), modes[1].a_op)
    np.testing.assert_allclose(full.a_op, a_sum, atol=1e-13)
    np.testing.assert_allclose(full.rho0, np.kron(modes[0].rho0, modes[1].rho0),
                               atol=1e-13)


def test_build_spin_boson_rejects_huge_products():
    spec = SpinBosonSpec(alpha=0.4, omega_max=2.0, n_modes=48, beta=1.0)
    with pytest.raises(DimensionTooLarge):
        build_spin_boson(spec)


def test_spin_component_algebra():
    ix = spin_component(2, 0, 0)
    iy = spin_component(2, 0, 1)
    iz = spin_component(2, 0, 2)
    np.testing.assert_allclose(ix @ iy - iy @ ix, 1j * iz, atol=1e-14)
    # acts on spin 0 only
    np.testing.assert_allclose(iz, np.kron(SIGMA_Z / 2, np.eye(2)), atol=1e-14)


def test_dipolar_matrix_angle_dependence():
    gamma = 10.705
    along_z = CentralSpinSpec(hyperfine_vectors=((0, 0, 1.0), (0, 0, 1.0)),
                              positions=((0, 0, 0), (0, 0, 0.7)))
    in_plane = CentralSpinSpec(hyperfine_vectors=((0, 0, 1.0), (0, 0, 1.0)),
                               positions=((0, 0, 0), (0.7, 0, 0)))
    d0 = dipolar_coefficient(0.7, gamma)
    assert dipolar_matrix(along_z)[0, 1] == pytest.approx(-2.0 * d0)
    assert dipolar_matrix(in_plane)[0, 1] == pytest.approx(d0)


def test_dipolar_matrix_conflict_detection():
    wrong = np.array([[0.0, 1.0], [1.0, 0.0]])
    spec = CentralSpinSpec(hyperfine_vectors=((0, 0, 1.0), (0, 0, 1.0)),
                           positions=((0, 0, 0), (0, 0, 0.7)),
                           coupling_matrix=wrong)
    with pytest.raises(InconsistentSpec):
        dipolar_matrix(spec)
    with pytest.raises(InconsistentSpec):
        dipolar_matrix(CentralSpinSpec(hyperfine_vectors=((0, 0, 1.0), (0, 0, 1.0)),
                                       positions=((0, 0, 0), (0, 0, 0))))


def test_central_spin_ising_subspace():
    spec = CentralSpinSpec(hyperfine_vectors=((0.4, 0.1, 0.3), (0.0, 0.2, -0.2)),
                           larmor=1.5)
    bath = build_central_spin(spec)
    iz0 = spin_component(2, 0, 2)
    iz1 = spin_component(2, 1, 2)
    np.testing.assert_allclose(bath.a_op, 0.3 * iz0 - 0.2 * iz1, atol=1e-14)
    np.testing.assert_allclose(bath.b_op, -1.5 * (iz0 + iz1), atol=1e-14)


def test_central_spin_tilted_subspace_traces():
    spec = CentralSpinSpec(hyperfine_vectors=((0.4, 0.0, 0.3),),
                           larmor=1.0, probe_subspace="ms0-1")
    bath = build_central_spin(spec)
    # A = -h.I/2 has eigenvalues +-|h|/4
    evals = np.linalg.eigvalsh(bath.a_op)
    assert evals[-1] == pytest.approx(0.5 * 0.25, rel=1e-12)
    # B eigenvalue splitting is the effective precession frequency
    b_evals = np.linalg.eigvalsh(bath.b_op)
    assert b_evals[-1] - b_evals[0] == pytest.approx(
        effective_larmor((0.4, 0.0, 0.3), 1.0))


def test_effective_larmor_limits():
    assert effective_larmor((0.0, 0.0, 0.2), 1.0) == pytest.approx(1.1)
    assert effective_larmor((0.3, 0.4, 0.0), 0.0) == pytest.approx(0.25)


def test_central_spin_dimension_guard():
    spec = CentralSpinSpec(hyperfine_vectors=tuple((0, 0, 0.1) for _ in range(7)))
    with pytest.raises(DimensionTooLarge):
        build_central_spin(spec)


def test_dissipation_spec_validation():
    with pytest.raises(ValueError):
        DissipationSpec(gamma1=-0.1)
    assert DissipationSpec().is_trivial
    assert not DissipationSpec(gamma_phi=1e-3).is_trivial


def test_dissipative_free_evolution_zero_rates_is_unitary():
    bath = single_qubit_bath(a=0.1, b=1.0)
    sup = dissipative_free_evolution(bath, DissipationSpec(), 1.7)
    np.testing.assert_allclose(sup, conjugation_superop(expm_hermitian(bath.b_op, 1.7)),
                               atol=1e-12)


def test_dissipative_free_evolution_is_tp_and_cp():
    rng = np.random.default_rng(7)
    vectors = tuple(tuple(v) for v in rng.normal(0.0, 0.2, size=(2, 3)))
    bath = build_central_spin(CentralSpinSpec(hyperfine_vectors=vectors, larmor=0.8))
    sup = dissipative_free_evolution(bath, DissipationSpec(gamma1=0.02, gamma_phi=0.01),
                                     2.0)
    d = bath.dim
    np.testing.assert_allclose(vec_identity(d) @ sup, vec_identity(d), atol=1e-11)
    assert np.linalg.eigvalsh(choi_matrix(sup)).min() > -1e-10


def test_dissipative_free_evolution_needs_spin_dimension():
    bath = single_mode_bath(g=0.1, omega=1.0, beta=2.0, n_levels=6)
    with pytest.raises(DimensionMismatch):
        dissipative_free_evolution(bath, DissipationSpec(gamma1=0.01), 1.0)


def test_rescale_bath():
    bath = single_qubit_bath(a=0.1, b=1.0)
    doubled = rescale_bath(bath, 2.0)
    np.testing.assert_allclose(doubled.a_op, 2 * bath.a_op)
    assert doubled.a_norm_eff == pytest.approx(0.2)
    np.testing.assert_allclose(doubled.b_op, bath.b_op)
