"""Spectral reconstruction, peak finding, and Nyquist diagnostics."""

import numpy as np
import pytest

from qspec.baths import single_qubit_bath
from qspec.correlation import CorrelationSeries, PROVENANCE_ANALYTIC, analytic_correlation
from qspec.errors import EmptySeries, GridMismatch, OutOfRange
from qspec.spectrum import (
    PeakAnnotation,
    Spectrum,
    annotate_peaks,
    damped_cosine_spectrum,
    estimation_error,
    find_peaks,
    parseval_defect,
    reconstruct_spectrum,
    transform_at,
    validate_sampling,
)


def _series(values, tau):
    return CorrelationSeries(tau=tau, values=np.asarray(values, dtype=float),
                             provenance=PROVENANCE_ANALYTIC,
                             total_detection_time=len(values) * tau)


def _random_series(n=24, tau=0.5, seed=0):
    rng = np.random.default_rng(seed)
    return _series(rng.normal(size=n), tau)


def test_grid_layout():
    n, tau = 16, 0.5
    spec = reconstruct_spectrum(_random_series(n, tau))
    assert spec.n_bins == n + 1
    assert spec.resolution == pytest.approx(np.pi / (n * tau))
    np.testing.assert_allclose(spec.frequencies,
                               spec.resolution * np.arange(n + 1))


def test_transform_matches_direct_sum():
    series = _random_series(n=12, tau=0.7, seed=3)
    spec = reconstruct_spectrum(series)
    times = series.times
    for k, omega in enumerate(spec.frequencies):
        direct = series.tau * np.sum(
            np.exp(1j * omega * times) * series.values)
        assert spec.amplitudes[k] == pytest.approx(direct, abs=1e-12)
    # off the grid too
    omegas = np.array([0.123, 1.456, 3.0])
    direct = [series.tau * np.sum(np.exp(1j * w * times) * series.values)
              for w in omegas]
    np.testing.assert_allclose(transform_at(series, omegas), direct, atol=1e-12)


def test_parseval_identity():
    series = _random_series(n=32, tau=0.4, seed=9)
    spec = reconstruct_spectrum(series)
    assert parseval_defect(series, spec) < 1e-12
    # a window redistributes energy, so the identity must visibly fail
    tapered = reconstruct_spectrum(series, window="hann")
    assert parseval_defect(series, tapered) > 1e-2


def test_reconstruct_validation():
    with pytest.raises(EmptySeries):
        reconstruct_spectrum(_series([1.0], 0.5))
    with pytest.raises(ValueError):
        reconstruct_spectrum(_random_series(), window="hamming")
    with pytest.raises(GridMismatch):
        Spectrum(frequencies=np.array([0.0, 1.0, 2.5]),
                 amplitudes=np.zeros(3, dtype=complex), resolution=1.0)
    with pytest.raises(GridMismatch):
        Spectrum(frequencies=np.zeros(3), amplitudes=np.zeros(2, dtype=complex),
                 resolution=1.0)


@pytest.mark.parametrize("lam", [1.0, 0.97])
def test_damped_cosine_closed_form(lam):
    """The geometric-sum line shape must agree with the FFT route."""
    omega0, phase, n, tau = 1.7, 0.4, 64, 0.5
    m = np.arange(1, n + 1)
    series = _series(lam**(m - 1) * np.cos(m * omega0 * tau + phase), tau)
    spec = reconstruct_spectrum(series)
    closed = damped_cosine_spectrum(spec.frequencies, omega0, phase, lam, n, tau)
    np.testing.assert_allclose(spec.amplitudes, closed, atol=1e-10)


def test_damped_cosine_infinite_limit():
    omega0, phase, lam, tau = 1.2, 0.0, 0.9, 0.5
    omegas = np.linspace(0.0, np.pi / tau, 7)
    finite = damped_cosine_spectrum(omegas, omega0, phase, lam, 4000, tau)
    infinite = damped_cosine_spectrum(omegas, omega0, phase, lam, None, tau)
    np.testing.assert_allclose(finite, infinite, atol=1e-12)


def test_damping_broadens_line():
    """Measurement back-action turns a delta line into a Lorentzian-like
    profile whose width grows with 1 - lam."""
    omega0, n, tau = 1.5, 2048, 0.5
    widths = []
    for lam in (0.999, 0.99, 0.95):
        m = np.arange(1, n + 1)
        series = _series(lam**(m - 1) * np.cos(m * omega0 * tau), tau)
        spec = reconstruct_spectrum(series)
        peaks = find_peaks(spec, 0.5)
        assert len(peaks) == 1
        widths.append(peaks[0].fwhm)
    assert widths[0] < widths[1] < widths[2]


def test_find_peaks_parabolic_refinement():
    # an off-grid line: the refined center must beat the bin quantization
    omega0, n, tau = 1.503, 256, 0.5
    m = np.arange(1, n + 1)
    series = _series(0.97**(m - 1) * np.cos(m * omega0 * tau), tau)
    spec = reconstruct_spectrum(series)
    peaks = find_peaks(spec, 0.5)
    assert len(peaks) == 1
    assert abs(peaks[0].center - omega0) < spec.resolution / 4.0
    assert peaks[0].fwhm >= spec.resolution


def test_find_peaks_threshold_and_edges():
    res = 0.1
    mags = np.array([5.0, 1.0, 1.0, 4.0, 1.0, 0.5, 0.2])
    spec = Spectrum(frequencies=res * np.arange(mags.size),
                    amplitudes=mags.astype(complex), resolution=res)
    peaks = find_peaks(spec, 0.3)
    centers = sorted(p.center for p in peaks)
    # the zero-frequency edge counts because it dominates its neighbor
    assert len(centers) == 2
    assert centers[0] == pytest.approx(0.0)
    assert abs(centers[1] - 3 * res) < res / 2
    with pytest.raises(OutOfRange):
        find_peaks(spec, 0.0)
    with pytest.raises(OutOfRange):
        find_peaks(spec, 1.0)
    flat = Spectrum(frequencies=res * np.arange(4),
                    amplitudes=np.zeros(4, dtype=complex), resolution=res)
    assert find_peaks(flat, 0.5) == []


def test_annotate_peaks_matching():
    peaks = [PeakAnnotation(center=1.02, height=1.0, fwhm=0.1),
             PeakAnnotation(center=2.3, height=0.5, fwhm=0.1)]
    annotated = annotate_peaks(peaks, [1.0, 2.0], tolerance=0.05)
    assert annotated[0].matched_mode == 0
    assert annotated[1].matched_mode is None
    assert annotate_peaks(peaks, [], tolerance=0.05)[0].matched_mode is None


def test_estimation_error_metric():
    spec = reconstruct_spectrum(_random_series(n=16, seed=4))
    assert estimation_error(spec, spec) == 0.0
    other = reconstruct_spectrum(_random_series(n=20, seed=4))
    with pytest.raises(GridMismatch):
        estimation_error(spec, other)
    zero = Spectrum(frequencies=spec.frequencies,
                    amplitudes=np.zeros_like(spec.amplitudes),
                    resolution=spec.resolution)
    with pytest.raises(ValueError):
        estimation_error(zero, spec)
    # scaling the estimate by 2 gives exactly relative error 1
    doubled = Spectrum(frequencies=spec.frequencies,
                       amplitudes=2.0 * spec.amplitudes,
                       resolution=spec.resolution)
    assert estimation_error(spec, doubled) == pytest.approx(1.0)


def test_validate_sampling_in_window():
    bath = single_qubit_bath(a=0.1, b=1.0)  # line at 2b = 2
    diag = validate_sampling(bath, tau=1.0)  # window [0, pi]
    assert diag.ok and bool(diag)
    assert diag.aliased == ()
    assert diag.nyquist == pytest.approx(np.pi)
    assert diag.b_norm_bound == pytest.approx(2.0)


def test_validate_sampling_reports_folded_image():
    bath = single_qubit_bath(a=0.1, b=4.0)  # line at 8 > pi/tau
    diag = validate_sampling(bath, tau=1.0)
    assert not diag.ok and not bool(diag)
    assert len(diag.aliased) == 1
    omega, folded = diag.aliased[0]
    assert omega == pytest.approx(8.0)
    expected_fold = abs(((8.0 + np.pi) % (2 * np.pi)) - np.pi)
    assert folded == pytest.approx(expected_fold)


def test_folded_line_appears_in_reconstruction():
    """An aliased bath line shows up at exactly the predicted image."""
    bath = single_qubit_bath(a=0.1, b=4.0)
    tau, n = 1.0, 512
    series = analytic_correlation(bath, tau * np.arange(1, n + 1))
    spec = reconstruct_spectrum(series)
    peaks = find_peaks(spec, 0.5)
    assert len(peaks) == 1
    _, folded = validate_sampling(bath, tau).aliased[0]
    assert abs(peaks[0].center - folded) < spec.resolution


def test_hann_window_cuts_leakage():
    # a line landing between bins leaks hard without a taper
    omega0, n, tau = 1.55, 128, 0.5
    m = np.arange(1, n + 1)
    series = _series(np.cos(m * omega0 * tau), tau)
    plain = reconstruct_spectrum(series)
    hann = reconstruct_spectrum(series, window="hann")
    k0 = int(round(omega0 / plain.resolution))
    far = np.r_[0:k0 - 8, k0 + 8:plain.n_bins]
    leak_plain = plain.magnitude[far].max() / plain.magnitude.max()
    leak_hann = hann.magnitude[far].max() / hann.magnitude.max()
    assert leak_hann < 0.2 * leak_plain
