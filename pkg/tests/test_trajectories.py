"""Trajectory sampling: seeding, batch equivalence, backends, estimators."""

import numpy as np
import pytest

from conftest import random_density

from qspec.baths import DissipationSpec, dissipative_free_evolution, single_qubit_bath
from qspec.channels import RimConfig, build_cycle
from qspec.correlation import PROVENANCE_MC, exact_channel_correlation
from qspec.decoupling import ConditionalEvolver, CpmgConfig, conditional_propagators
from qspec.errors import DimensionMismatch, EmptyInput, OutOfRange
from qspec.linalg import expm_hermitian
from qspec.trajectories import (
    TrajectoryBatch,
    TrajectoryRecord,
    active_backend,
    derive_seeds,
    estimate_correlation,
    plan_samples,
    sample_trajectories,
    sample_trajectory,
)

TAU1 = 0.5
TAU2 = 0.7
TAU = TAU1 + TAU2


def _bath():
    return single_qubit_bath(a=0.5, b=0.4)


def _unitary_evolver(bath):
    return expm_hermitian(bath.b_op, TAU2)


def test_derive_seeds_offset_consistency():
    s = 123456789
    full = derive_seeds(s, 10)
    assert full.dtype == np.uint64
    tail = derive_seeds(s, 7, start=3)
    np.testing.assert_array_equal(full[3:], tail)
    assert not np.array_equal(derive_seeds(s, 10), derive_seeds(s + 1, 10))
    # no collisions in a modest block
    assert np.unique(derive_seeds(s, 10000)).size == 10000


def test_sample_trajectory_deterministic():
    bath = _bath()
    cfg = RimConfig(tau1=TAU1)
    u = _unitary_evolver(bath)
    r1 = sample_trajectory(bath, cfg, u, 20, seed=42)
    r2 = sample_trajectory(bath, cfg, u, 20, seed=42)
    np.testing.assert_array_equal(r1.outcomes, r2.outcomes)
    assert r1.outcomes.shape == (21,)
    r3 = sample_trajectory(bath, cfg, u, 20, seed=43)
    assert not np.array_equal(r1.outcomes, r3.outcomes)


def _evolvers():
    bath = _bath()
    yield "unitary", _unitary_evolver(bath)
    yield "conditional", conditional_propagators(bath, CpmgConfig(0, TAU2))
    yield "superop", dissipative_free_evolution(
        bath, DissipationSpec(gamma1=0.05, gamma_phi=0.02), TAU2)


@pytest.mark.parametrize("kind,evolver", list(_evolvers()))
def test_batch_matches_reference_sampler(kind, evolver):
    """Each batch row must reproduce the one-trajectory reference sampler."""
    bath = _bath()
    cfg = RimConfig(tau1=TAU1)
    batch = sample_trajectories(bath, cfg, evolver, 8, 6, master_seed=7)
    seeds = derive_seeds(7, 6)
    np.testing.assert_array_equal(batch.seeds, seeds)
    for i in range(6):
        ref = sample_trajectory(bath, cfg, evolver, 8, seed=int(seeds[i]))
        np.testing.assert_array_equal(batch.outcomes[i], ref.outcomes)


def test_chunk_size_does_not_change_outcomes():
    bath = _bath()
    cfg = RimConfig(tau1=TAU1)
    u = _unitary_evolver(bath)
    whole = sample_trajectories(bath, cfg, u, 10, 50, master_seed=3)
    chunked = sample_trajectories(bath, cfg, u, 10, 50, master_seed=3,
                                  chunk_size=7)
    np.testing.assert_array_equal(whole.outcomes, chunked.outcomes)


def test_worker_count_does_not_change_outcomes(monkeypatch):
    bath = _bath()
    cfg = RimConfig(tau1=TAU1)
    u = _unitary_evolver(bath)
    serial = sample_trajectories(bath, cfg, u, 6, 12, master_seed=9,
                                 chunk_size=4)
    monkeypatch.setenv("QSPEC_THREADS", "2")
    parallel = sample_trajectories(bath, cfg, u, 6, 12, master_seed=9,
                                   chunk_size=4)
    np.testing.assert_array_equal(serial.outcomes, parallel.outcomes)


def test_backends_bit_identical(monkeypatch):
    from qspec import trajectories
    if trajectories._ckernel is None:
        pytest.skip("compiled kernel not built")
    bath = _bath()
    cfg = RimConfig(tau1=TAU1)
    u = _unitary_evolver(bath)
    monkeypatch.setenv("QSPEC_BACKEND", "python")
    py = sample_trajectories(bath, cfg, u, 12, 200, master_seed=17)
    monkeypatch.setenv("QSPEC_BACKEND", "cython")
    cy = sample_trajectories(bath, cfg, u, 12, 200, master_seed=17)
    np.testing.assert_array_equal(py.outcomes, cy.outcomes)


def test_active_backend_env(monkeypatch):
    monkeypatch.setenv("QSPEC_BACKEND", "python")
    assert active_backend() == "python"
    monkeypatch.setenv("QSPEC_BACKEND", "gpu")
    with pytest.raises(ValueError):
        active_backend()
    monkeypatch.delenv("QSPEC_BACKEND")
    assert active_backend() in ("cython", "python")


def test_plan_samples_values():
    assert plan_samples(0.01, 0.05).n_samples == 73778
    assert plan_samples(0.02, 0.1).n_samples == 14979
    # exact integer landing: (2/1) ln(2 / (2 e^-2)) = 4
    assert plan_samples(1.0, 2.0 * np.exp(-2.0)).n_samples == 4


@pytest.mark.parametrize("delta,epsilon", [
    (0.0, 0.1), (-0.2, 0.1), (1.5, 0.1), (0.1, 0.0), (0.1, 1.0),
])
def test_plan_samples_rejects_out_of_range(delta, epsilon):
    with pytest.raises(OutOfRange):
        plan_samples(delta, epsilon)


def test_estimator_converges_to_exact_channel():
    """Sampled correlation vs the superoperator value, at a few sigma."""
    bath = _bath()
    cfg = RimConfig(tau1=TAU1)
    n, n_samples = 4, 20000
    batch = sample_trajectories(bath, cfg, _unitary_evolver(bath), n,
                                n_samples, master_seed=2024, tau=TAU)
    est = estimate_correlation(batch, n)
    exact = exact_channel_correlation(build_cycle(bath, cfg, TAU), bath.rho0, n)
    sigma = 1.0 / np.sqrt(n_samples)
    np.testing.assert_allclose(est.values, exact.values, atol=5 * sigma)
    assert est.provenance == PROVENANCE_MC
    assert est.n_samples == n_samples
    assert est.tau == TAU
    assert est.total_detection_time == pytest.approx(n * TAU)


def test_estimator_hand_checked_matrix():
    batch = TrajectoryBatch(
        outcomes=np.array([[1, 1, -1], [1, -1, -1]], dtype=np.int8),
        seeds=np.array([1, 2], dtype=np.uint64), tau=0.5)
    est = estimate_correlation(batch, 2)
    np.testing.assert_allclose(est.values, [0.0, -1.0])
    lagged = estimate_correlation(batch, 2, lag_averaged=True)
    np.testing.assert_allclose(lagged.values, [0.0, -1.0])
    # rows where the products at fixed lag disagree separate the estimators
    batch2 = TrajectoryBatch(
        outcomes=np.array([[1, -1, 1, -1]], dtype=np.int8),
        seeds=np.array([3], dtype=np.uint64), tau=0.5)
    plain = estimate_correlation(batch2, 2)
    lagged2 = estimate_correlation(batch2, 2, lag_averaged=True)
    np.testing.assert_allclose(plain.values, [-1.0, 1.0])
    np.testing.assert_allclose(lagged2.values, [-1.0, 1.0])
    assert lagged2.n_samples == 1


def test_estimator_accepts_record_iterables():
    records = [TrajectoryRecord(outcomes=np.array([1, -1, 1], dtype=np.int8), seed=5),
               TrajectoryRecord(outcomes=np.array([-1, -1, 1], dtype=np.int8), seed=6)]
    est = estimate_correlation(records, 2, tau=0.25)
    np.testing.assert_allclose(est.values, [0.0, 0.0])
    with pytest.raises(ValueError):
        estimate_correlation(records, 2)  # no tau anywhere
    with pytest.raises(EmptyInput):
        estimate_correlation([], 2, tau=0.25)
    with pytest.raises(DimensionMismatch):
        estimate_correlation(records, 5, tau=0.25)


def test_record_rejects_non_sign_outcomes():
    with pytest.raises(ValueError):
        TrajectoryRecord(outcomes=np.array([1, 0, -1]), seed=1)
    with pytest.raises(ValueError):
        TrajectoryRecord(outcomes=np.ones((2, 3)), seed=1)


def test_sampler_input_validation():
    bath = _bath()
    cfg = RimConfig(tau1=TAU1)
    u = _unitary_evolver(bath)
    with pytest.raises(ValueError):
        sample_trajectories(bath, cfg, u, 0, 5, master_seed=1)
    with pytest.raises(ValueError):
        sample_trajectories(bath, cfg, u, 5, 0, master_seed=1)
    with pytest.raises(DimensionMismatch):
        sample_trajectories(bath, cfg, np.eye(3), 5, 5, master_seed=1)
    wrong_dim = ConditionalEvolver(u_plus=np.eye(4), u_minus=np.eye(4),
                                   mode="free-conditional")
    with pytest.raises(DimensionMismatch):
        sample_trajectories(bath, cfg, wrong_dim, 5, 5, master_seed=1)


def test_conditional_branches_change_statistics():
    """Outcome-conditioned flight must differ from ideal-B flight on a
    polarized initial state, and agree when A commutes with B."""
    rho0 = random_density(2, np.random.default_rng(5))
    bath = single_qubit_bath(a=0.5, b=0.4, rho0=rho0)
    cfg = RimConfig(tau1=TAU1)
    cond = conditional_propagators(bath, CpmgConfig(0, TAU2))
    ideal = _unitary_evolver(bath)
    n, n_samples = 6, 4000
    est_cond = estimate_correlation(
        sample_trajectories(bath, cfg, cond, n, n_samples, 31, tau=TAU), n)
    est_ideal = estimate_correlation(
        sample_trajectories(bath, cfg, ideal, n, n_samples, 31, tau=TAU), n)
    assert np.max(np.abs(est_cond.values - est_ideal.values)) > 0.05
