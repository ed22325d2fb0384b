"""Resource comparison: repeated weak measurements vs correlation spectroscopy.

Both methods estimate the same noise spectrum. One trajectory pass of the
repeated protocol evolves for N tau; one pass of correlation spectroscopy
(two measurements, growing delay) needs N(N+1) tau / 2. The harness runs
both over a grid of sample counts, adds sampling noise (central-limit model
by default, full Monte Carlo on request), reconstructs spectra, and scores
them against a long-evolution reference, emitting one ResourceReport per
(method, grid point).

Spectra are normalized by the measurement gain 4 tau1^2 before scoring so
that both methods and the bare reference live on one scale; the reference
uses the dissipation-damped but measurement-free correlation.
"""

from dataclasses import dataclass

import numpy as np

from .baths import BathModel, DissipationSpec, dissipative_free_evolution
from .channels import (
    RimConfig,
    build_cycle,
    build_free_evolution_channel,
    build_rim_channel,
    concatenate,
)
from .correlation import (
    PROVENANCE_ANALYTIC,
    PROVENANCE_CORR,
    PROVENANCE_MC,
    CorrelationSeries,
    analytic_correlation,
    correlation_spectroscopy,
    exact_channel_correlation,
)
from .errors import EmptyInput
from .linalg import vectorize
from .spectrum import Spectrum, estimation_error, reconstruct_spectrum
from .trajectories import derive_seeds

METHOD_WEAK = "weak"
METHOD_CORR = "corr"


@dataclass(frozen=True)
class ResourceReport:
    """One comparison point.

    total_detection_time is the evolution time of a single sample pass;
    resource_complexity multiplies it by the sample count.
    """

    method: str
    n_points: int
    tau: float
    tau1: float
    n_samples: int
    total_detection_time: float
    resource_complexity: float
    estimation_error: float


def reference_correlation(bath: BathModel, tau: float, n: int,
                          dissipation: DissipationSpec | None = None) -> CorrelationSeries:
    """Measurement-free noise correlation, dissipation included.

    C(m tau) = Re Tr[A E_{m tau}(A rho)] with E the free (possibly
    dissipative) evolution; reduces to the analytic mode sum at zero rates.
    """
    times = tau * np.arange(1, n + 1)
    if dissipation is None or dissipation.is_trivial:
        return analytic_correlation(bath, times)
    step = dissipative_free_evolution(bath, dissipation, tau)
    a_vec = vectorize(bath.a_op.astype(complex))
    v = vectorize(bath.a_op @ bath.rho0)
    values = np.empty(n)
    for m in range(n):
        v = step @ v
        values[m] = float(np.real(np.vdot(a_vec, v)))
    return CorrelationSeries(tau=tau, values=values, provenance=PROVENANCE_ANALYTIC,
                             total_detection_time=n * tau)


def _weak_series(bath, rim_cfg, tau, n, dissipation):
    if dissipation is None or dissipation.is_trivial:
        ch = build_cycle(bath, rim_cfg, tau)
    else:
        rim = build_rim_channel(bath, rim_cfg)
        free = dissipative_free_evolution(bath, dissipation, tau - rim_cfg.tau1)
        ch = concatenate(rim, free, tau)
    return exact_channel_correlation(ch, bath.rho0, n, method="auto")


def _corr_series(bath, rim_cfg, tau, n, dissipation):
    if dissipation is None or dissipation.is_trivial:
        return correlation_spectroscopy(bath, rim_cfg, tau, n)
    between = dissipative_free_evolution(bath, dissipation, tau)
    after = dissipative_free_evolution(bath, dissipation, tau - rim_cfg.tau1)
    return correlation_spectroscopy(bath, rim_cfg, tau, n,
                                    free_between=between, free_after_rim=after)


def _clt_noise(series: CorrelationSeries, n_samples: int, rng) -> CorrelationSeries:
    """Add the sampling noise of an N_s-sample estimate of +-1 products."""
    sigma = np.sqrt(np.clip(1.0 - series.values**2, 0.0, 1.0) / n_samples)
    noisy = np.clip(series.values + sigma * rng.standard_normal(series.n), -1.0, 1.0)
    return CorrelationSeries(tau=series.tau, values=noisy,
                             provenance=PROVENANCE_MC,
                             total_detection_time=series.total_detection_time,
                             n_samples=n_samples)


def _mc_corr_series(bath, rim_cfg, tau, n, dissipation, n_samples, seed):
    """Direct sampling of the two-measurement protocol.

    Only two outcomes exist per pass, so the trajectory tree is two
    conditional branches evolved deterministically; sampling reduces to
    drawing from the exact conditional distributions at each delay.
    """
    rim = build_rim_channel(bath, rim_cfg)
    m0, m1 = rim.kraus_ops
    g0 = m0.conj().T @ m0

    p0_first = float(np.real(np.einsum("ij,ji->", g0, bath.rho0)))
    branch = [m0 @ bath.rho0 @ m0.conj().T / p0_first,
              m1 @ bath.rho0 @ m1.conj().T / (1.0 - p0_first)]

    if dissipation is None or dissipation.is_trivial:
        step_after = build_free_evolution_channel(bath, tau - rim_cfg.tau1)
        step_tau = build_free_evolution_channel(bath, tau)
    else:
        step_after = dissipative_free_evolution(bath, dissipation, tau - rim_cfg.tau1)
        step_tau = dissipative_free_evolution(bath, dissipation, tau)
    d = bath.dim
    vecs = [step_after @ vectorize(b) for b in branch]

    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u1 = rng.random(n_samples)
    first = np.where(u1 < p0_first, 1, -1)
    u2 = rng.random((n, n_samples))

    values = np.empty(n)
    for m in range(n):
        q = [float(np.real(np.einsum("ij,ji->", g0, v.reshape(d, d))))
             for v in vecs]
        q0 = np.where(first == 1, q[0], q[1])
        second = np.where(u2[m] < q0, 1, -1)
        values[m] = float(np.mean(first * second))
        vecs = [step_tau @ v for v in vecs]
    return CorrelationSeries(tau=tau, values=values, provenance=PROVENANCE_CORR,
                             total_detection_time=n * (n + 1) * tau / 2.0,
                             n_samples=n_samples)


def _subsampled_reference(bath, tau, n, dissipation, n_ref_factor):
    ref_series = reference_correlation(bath, tau, n_ref_factor * n, dissipation)
    ref_spec = reconstruct_spectrum(ref_series)
    amps = ref_spec.amplitudes[::n_ref_factor]
    resolution = np.pi / (n * tau)
    return Spectrum(frequencies=resolution * np.arange(n + 1),
                    amplitudes=amps, resolution=resolution)


def _scored(series, tau1, reference):
    spec = reconstruct_spectrum(series)
    normalized = Spectrum(frequencies=spec.frequencies,
                          amplitudes=spec.amplitudes / (4.0 * tau1**2),
                          resolution=spec.resolution)
    return estimation_error(reference, normalized)


def run_comparison(bath: BathModel, rim_cfg: RimConfig, tau: float, n: int,
                   dissipation: DissipationSpec | None = None,
                   n_samples_grid=(10**4, 10**5, 10**6),
                   tau1_multipliers=(1.0, 2.0, 4.0),
                   n_ref_factor: int = 16, master_seed: int = 0,
                   use_mc: bool = False) -> list:
    """Score both methods over a sample-count grid against one reference.

    The weak method runs at rim_cfg.tau1; correlation spectroscopy runs at
    each multiple of it (stronger measurements buy signal per sample at the
    cost of accuracy). With use_mc the correlation-spectroscopy points are
    sampled exactly; weak-method points always use the central-limit noise
    model here, since full trajectory reruns per grid point are the CLI's
    long-run path.
    """
    if not n_samples_grid:
        raise EmptyInput("empty sample grid")
    reference = _subsampled_reference(bath, tau, n, dissipation, n_ref_factor)
    seeds = derive_seeds(master_seed,
                         len(n_samples_grid) * (1 + len(tau1_multipliers)))
    reports = []
    seed_idx = 0

    weak_exact = _weak_series(bath, rim_cfg, tau, n, dissipation)
    for n_samples in n_samples_grid:
        rng = np.random.Generator(np.random.PCG64(int(seeds[seed_idx])))
        seed_idx += 1
        noisy = _clt_noise(weak_exact, n_samples, rng)
        err = _scored(noisy, rim_cfg.tau1, reference)
        reports.append(ResourceReport(
            method=METHOD_WEAK, n_points=n, tau=tau, tau1=rim_cfg.tau1,
            n_samples=n_samples,
            total_detection_time=weak_exact.total_detection_time,
            resource_complexity=n_samples * weak_exact.total_detection_time,
            estimation_error=err))

    for mult in tau1_multipliers:
        cfg_m = RimConfig(tau1=mult * rim_cfg.tau1, delta_phi=rim_cfg.delta_phi,
                          weak_threshold=rim_cfg.weak_threshold)
        exact = None if use_mc else _corr_series(bath, cfg_m, tau, n, dissipation)
        for n_samples in n_samples_grid:
            seed = int(seeds[seed_idx])
            seed_idx += 1
            if use_mc:
                noisy = _mc_corr_series(bath, cfg_m, tau, n, dissipation,
                                        n_samples, seed)
            else:
                rng = np.random.Generator(np.random.PCG64(seed))
                noisy = _clt_noise(exact, n_samples, rng)
            err = _scored(noisy, cfg_m.tau1, reference)
            reports.append(ResourceReport(
                method=METHOD_CORR, n_points=n, tau=tau, tau1=cfg_m.tau1,
                n_samples=n_samples,
                total_detection_time=n * (n + 1) * tau / 2.0,
                resource_complexity=n_samples * n * (n + 1) * tau / 2.0,
                estimation_error=err))
    return reports


def time_to_reach(reports: list, error_target: float) -> dict:
    """Smallest resource complexity per method achieving the error target."""
    best = {}
    for rep in reports:
        if rep.estimation_error <= error_target:
            if rep.method not in best or rep.resource_complexity < best[rep.method]:
                best[rep.method] = rep.resource_complexity
    return best
