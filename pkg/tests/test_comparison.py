"""Resource comparison harness: references, reports, and bookkeeping."""

import numpy as np
import pytest

from qspec.baths import DissipationSpec, single_qubit_bath
from qspec.channels import RimConfig
from qspec.comparison import (
    METHOD_CORR,
    METHOD_WEAK,
    ResourceReport,
    reference_correlation,
    run_comparison,
    time_to_reach,
)
from qspec.correlation import analytic_correlation
from qspec.errors import EmptyInput


def test_reference_equals_analytic_without_dissipation(qubit_bath):
    tau, n = 0.8, 20
    ref = reference_correlation(qubit_bath, tau, n)
    ana = analytic_correlation(qubit_bath, tau * np.arange(1, n + 1))
    np.testing.assert_allclose(ref.values, ana.values, atol=1e-13)
    ref_trivial = reference_correlation(qubit_bath, tau, n,
                                        DissipationSpec(0.0, 0.0))
    np.testing.assert_allclose(ref_trivial.values, ana.values, atol=1e-13)


def test_reference_dissipation_damps_envelope(qubit_bath):
    tau, n = 0.8, 40
    bare = reference_correlation(qubit_bath, tau, n)
    damped = reference_correlation(qubit_bath, tau, n,
                                   DissipationSpec(gamma1=0.05, gamma_phi=0.02))
    # pointwise smaller envelope, visibly so at late times
    assert np.all(np.abs(damped.values) <= np.abs(bare.values) + 1e-12)
    late = slice(30, None)
    assert np.max(np.abs(damped.values[late])) < 0.5 * np.max(np.abs(bare.values[late]))


def test_run_comparison_report_grid():
    bath = single_qubit_bath(a=0.3, b=0.8)
    cfg = RimConfig(tau1=0.2)
    grid = (100, 10000)
    mults = (1.0, 2.0)
    reports = run_comparison(bath, cfg, tau=1.0, n=32, n_samples_grid=grid,
                             tau1_multipliers=mults, master_seed=5)
    assert len(reports) == len(grid) * (1 + len(mults))
    weak = [r for r in reports if r.method == METHOD_WEAK]
    corr = [r for r in reports if r.method == METHOD_CORR]
    assert len(weak) == len(grid)
    assert len(corr) == len(grid) * len(mults)

    for r in weak:
        assert r.total_detection_time == pytest.approx(32 * 1.0)
        assert r.resource_complexity == pytest.approx(r.n_samples * 32 * 1.0)
        assert r.tau1 == cfg.tau1
    for r in corr:
        assert r.total_detection_time == pytest.approx(32 * 33 * 1.0 / 2)
        assert r.resource_complexity == pytest.approx(
            r.n_samples * 32 * 33 * 1.0 / 2)
    assert {r.tau1 for r in corr} == {0.2, 0.4}
    assert all(np.isfinite(r.estimation_error) and r.estimation_error >= 0
               for r in reports)


def test_more_samples_reduce_weak_error():
    bath = single_qubit_bath(a=0.3, b=0.8)
    cfg = RimConfig(tau1=0.2)
    reports = run_comparison(bath, cfg, tau=1.0, n=32,
                             n_samples_grid=(100, 1000000),
                             tau1_multipliers=(1.0,), master_seed=11)
    weak = {r.n_samples: r.estimation_error for r in reports
            if r.method == METHOD_WEAK}
    assert weak[1000000] < weak[100]


def test_run_comparison_deterministic_per_seed():
    bath = single_qubit_bath(a=0.3, b=0.8)
    cfg = RimConfig(tau1=0.2)
    kwargs = dict(n_samples_grid=(500,), tau1_multipliers=(1.0,))
    a = run_comparison(bath, cfg, 1.0, 16, master_seed=3, **kwargs)
    b = run_comparison(bath, cfg, 1.0, 16, master_seed=3, **kwargs)
    c = run_comparison(bath, cfg, 1.0, 16, master_seed=4, **kwargs)
    assert [r.estimation_error for r in a] == [r.estimation_error for r in b]
    assert any(x.estimation_error != y.estimation_error for x, y in zip(a, c))


def test_run_comparison_monte_carlo_mode():
    """The sampled two-measurement protocol lands near its CLT analogue."""
    bath = single_qubit_bath(a=0.3, b=0.8)
    cfg = RimConfig(tau1=0.3)
    mc = run_comparison(bath, cfg, 1.0, 16, n_samples_grid=(40000,),
                        tau1_multipliers=(1.0,), master_seed=8, use_mc=True)
    clt = run_comparison(bath, cfg, 1.0, 16, n_samples_grid=(40000,),
                         tau1_multipliers=(1.0,), master_seed=8)
    mc_corr = [r for r in mc if r.method == METHOD_CORR][0]
    clt_corr = [r for r in clt if r.method == METHOD_CORR][0]
    assert mc_corr.estimation_error < 5 * max(clt_corr.estimation_error, 1e-3)


def test_empty_sample_grid_rejected(qubit_bath):
    with pytest.raises(EmptyInput):
        run_comparison(qubit_bath, RimConfig(tau1=0.1), 1.0, 8,
                       n_samples_grid=())


def test_time_to_reach_selects_cheapest():
    def report(method, n_samples, complexity, err):
        return ResourceReport(method=method, n_points=8, tau=1.0, tau1=0.1,
                              n_samples=n_samples, total_detection_time=8.0,
                              resource_complexity=complexity,
                              estimation_error=err)

    reports = [report(METHOD_WEAK, 100, 800.0, 0.5),
               report(METHOD_WEAK, 1000, 8000.0, 0.05),
               report(METHOD_WEAK, 10000, 80000.0, 0.01),
               report(METHOD_CORR, 100, 28800.0, 0.04),
               report(METHOD_CORR, 1000, 288000.0, 0.004)]
    best = time_to_reach(reports, 0.05)
    assert best == {METHOD_WEAK: 8000.0, METHOD_CORR: 28800.0}
    assert time_to_reach(reports, 0.001) == {}
    only_weak = time_to_reach(reports, 0.01)
    assert only_weak[METHOD_WEAK] == 80000.0
    assert METHOD_CORR in time_to_reach(reports, 0.04)
