"""Correlation functions: analytic, exact channel-based, weak-limit, and
correlation-spectroscopy forms.

The object of interest is the two-point correlation of measurement outcomes
C(m tau) = <<I| P Phi^{m-1} P |rho>>, where P is the parity-signed cycle and
Phi the unconditional one. In the weak-measurement limit this collapses to
the closed form

    C(m tau) ~ 4 tau1^2 sum_ij |A_ij (A rho)_ji| |lambda_ij|^{m-1}
               cos(m omega_ij tau + phi_ij),

a damped version of the bath's noise correlation function, with all
quantities read off a ModeTable computed in the eigenbasis of B.

Detection-time bookkeeping rides along on every series: one trajectory pass
of the repeated-measurement protocol evolves for N tau total, while one
correlation-spectroscopy pass (two RIMs separated by a growing delay) needs
tau + 2 tau + ... + N tau = N(N+1) tau / 2.
"""

from dataclasses import dataclass

import numpy as np

from .baths import BathModel
from .channels import (
    ConcatenatedChannel,
    RimConfig,
    build_rim_channel,
    build_cycle,
    match_modes,
    perturbative_modes,
    spectral_decompose,
)
from .errors import DimensionMismatch, EmptyInput, NonDiagonalizable
from .linalg import dagger, expm_hermitian, vec_identity, vectorize

PROVENANCE_ANALYTIC = "analytic"
PROVENANCE_EXACT = "exact-channel"
PROVENANCE_WEAK = "weak-approx"
PROVENANCE_CORR = "corr-spectroscopy"
PROVENANCE_MC = "monte-carlo"

# provenances whose values are correlations of +-1 outcomes, hence bounded
_BOUNDED = {PROVENANCE_EXACT, PROVENANCE_CORR, PROVENANCE_MC}

AMPLITUDE_PRUNE = 1e-14


@dataclass(frozen=True)
class CorrelationSeries:
    """Sampled correlation values C(m tau), m = 1..N.

    total_detection_time counts the evolution time of a single pass
    (one trajectory, or one sweep of correlation-spectroscopy delays);
    sample counts multiply it downstream.
    """

    tau: float
    values: np.ndarray
    provenance: str
    total_detection_time: float
    n_samples: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.provenance in _BOUNDED and values.size:
            worst = np.max(np.abs(values))
            if worst > 1.0 + 1e-9:
                raise ValueError(
                    f"{self.provenance} correlation exceeds 1 ({worst:.6f})")

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(1, self.n + 1)


@dataclass(frozen=True)
class ModeTable:
    """Per-transition data of the noise: frequency, weight, phase, damping.

    Entries correspond to ordered pairs (i, j) of B-eigenstates with
    omega = b_i - b_j, amplitude |A_ij (A rho)_ji|, phase
    arg[A_ij (A rho)_ji] and the per-cycle damping factor |lambda_ij|
    (1 when no measurement back-action is modeled).
    """

    omega: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    damping: np.ndarray
    pairs: tuple = ()

    def __post_init__(self):
        for name in ("omega", "amplitude", "phase", "damping"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.omega.shape == self.amplitude.shape == self.phase.shape
                == self.damping.shape):
            raise DimensionMismatch("mode table columns must share one length")
        if self.amplitude.size and self.amplitude.min() < 0:
            raise ValueError("mode amplitudes must be >= 0")
        if self.damping.size and (self.damping.min() <= 0 or self.damping.max() > 1 + 1e-9):
            raise ValueError("mode damping factors must lie in (0, 1]")

    @property
    def n_modes(self) -> int:
        return int(self.omega.size)


def mode_table(bath: BathModel, cfg: RimConfig | None = None,
               tau: float | None = None, damping: str = "none") -> ModeTable:
    """Build the mode table of a bath in the eigenbasis of B.

    Args:
        bath: the bath model.
        cfg: RIM parameters; required unless damping = "none".
        tau: cycle period; required for damping = "exact".
        damping: "none" (undamped, the bare noise of the bath),
            "perturbative" (second-order moduli 1 + (tau1^2/2) <<ij|L|ij>>),
            or "exact" (moduli of the matched exact channel eigenvalues,
            small dimensions only).

    Degenerate eigenvalues of B are handled by whatever orthonormal basis
    the eigensolver returns; the summed correlation is basis-covariant.
    Modes with amplitude below 1e-14 of the maximum are pruned.
    """
    b_evals, v = np.linalg.eigh(bath.b_op)
    a_p = dagger(v) @ bath.a_op @ v
    rho_p = dagger(v) @ bath.rho0 @ v
    a_rho = a_p @ rho_p

    d = bath.dim
    # entry (i, j): A_ij (A rho)_ji, the weight multiplying e^{+i omega_ij t};
    # the transposed pairing would flip the sign of t, indistinguishable for
    # stationary rho but wrong against the exact channel otherwise
    coeff = a_p * a_rho.T
    amp = np.abs(coeff)
    cutoff = AMPLITUDE_PRUNE * (amp.max() if amp.size else 0.0)
    keep = np.argwhere(amp > cutoff)
    pairs = tuple((int(i), int(j)) for i, j in keep)
    idx_i = keep[:, 0]
    idx_j = keep[:, 1]
    omega = b_evals[idx_i] - b_evals[idx_j]
    amplitude = amp[idx_i, idx_j]
    phase = np.angle(coeff[idx_i, idx_j])

    if damping == "none":
        damp = np.ones_like(amplitude)
    elif damping == "perturbative":
        if cfg is None:
            raise ValueError("perturbative damping needs a RimConfig")
        a_sq_diag = np.real(np.diag(a_p @ a_p))
        a_diag = np.real(np.diag(a_p))
        ell = -(a_sq_diag[idx_i] + a_sq_diag[idx_j]
                - 2.0 * a_diag[idx_i] * a_diag[idx_j])
        damp = np.clip(1.0 + 0.5 * cfg.tau1**2 * ell, 1e-12, 1.0)
    elif damping == "exact":
        if cfg is None or tau is None:
            raise ValueError("exact damping needs a RimConfig and tau")
        ch = build_cycle(bath, cfg, tau)
        decomp = spectral_decompose(ch)
        predictions = perturbative_modes(bath, cfg, tau)
        matching = match_modes(decomp, predictions)
        by_pair = {}
        for pos, mode in enumerate(predictions):
            by_pair.setdefault(mode.pair, np.abs(decomp.eigenvalues[matching[pos]]))
        a_sq_diag = np.real(np.diag(a_p @ a_p))
        a_diag = np.real(np.diag(a_p))
        damp = np.empty_like(amplitude)
        for row, (i, j) in enumerate(pairs):
            if (i, j) in by_pair:
                damp[row] = min(1.0, by_pair[(i, j)])
            else:
                ell = -(a_sq_diag[i] + a_sq_diag[j] - 2.0 * a_diag[i] * a_diag[j])
                damp[row] = np.clip(1.0 + 0.5 * cfg.tau1**2 * ell, 1e-12, 1.0)
    else:
        raise ValueError(f"unknown damping mode {damping!r}")

    return ModeTable(omega=omega, amplitude=amplitude, phase=phase,
                     damping=damp, pairs=pairs)


def analytic_correlation(bath: BathModel, times) -> CorrelationSeries:
    """Noise correlation C(t) = sum_ij |A_ij (A rho)_ji| cos(omega_ij t + phi_ij).

    ``times`` must be a uniform grid tau, 2 tau, ..., N tau (the series
    abstraction assumes it); values equal the symmetrized interaction-picture
    correlator 1/2 Tr{rho [A_I(t) A + A A_I(t)]} with
    A_I(t) = e^{iBt} A e^{-iBt}.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptyInput("need at least one time")
    tau = float(times[0])
    if tau <= 0 or not np.allclose(times, tau * np.arange(1, times.size + 1),
                                   rtol=1e-9, atol=0.0):
        raise ValueError("times must be a uniform grid tau * (1..N)")
    table = mode_table(bath, damping="none")
    values = _evaluate_modes(table, np.ones_like(table.damping), times, 1.0)
    return CorrelationSeries(tau=tau, values=values, provenance=PROVENANCE_ANALYTIC,
                             total_detection_time=times.size * tau)


def _evaluate_modes(table: ModeTable, damping_pow_base, times, prefactor,
                    damping_exponent=None) -> np.ndarray:
    """Sum prefactor * amp * damping^(m-1) * cos(omega t + phi) over modes."""
    times = np.asarray(times, dtype=float)
    arg = np.outer(times, table.omega) + table.phase[None, :]
    if damping_exponent is None:
        damping_exponent = np.arange(times.size)
    envelope = np.power(damping_pow_base[None, :], damping_exponent[:, None])
    return prefactor * np.einsum("mk,mk,k->m", np.cos(arg), envelope, table.amplitude)


def weak_correlation(modes: ModeTable, tau1: float, tau: float, n: int) -> CorrelationSeries:
    """Closed-form weak-measurement correlation series.

    C(m tau) = 4 tau1^2 sum_k amp_k damping_k^(m-1) cos(m omega_k tau + phi_k).
    With all damping factors 1 this is 4 tau1^2 times the analytic C(m tau).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    times = tau * np.arange(1, n + 1)
    if modes.n_modes == 0:
        values = np.zeros(n)
    else:
        values = _evaluate_modes(modes, modes.damping, times, 4.0 * tau1**2)
    return CorrelationSeries(tau=tau, values=values, provenance=PROVENANCE_WEAK,
                             total_detection_time=n * tau)


def exact_channel_correlation(ch: ConcatenatedChannel, rho0: np.ndarray, n: int,
                              method: str = "auto") -> CorrelationSeries:
    """Exact measurement correlation from the cycle channel, no approximations.

    C(m tau) = <<I| P Phi^{m-1} P |rho>> for m = 1..n, evaluated through the
    spectral decomposition sum_k d_k lambda_k^{m-1} when the channel is
    diagonalizable, or by iterated application otherwise.

    Args:
        method: "auto" (spectral with iterated fallback), "spectral", or
            "iterate".
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = ch.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise DimensionMismatch(f"rho0 shape {rho0.shape} does not match dim {d}")

    vec_i = vec_identity(d)
    final_row = vec_i @ ch.p_hat          # <<I| P
    start = ch.p_hat @ vectorize(rho0)    # P |rho>>

    if method not in ("auto", "spectral", "iterate"):
        raise ValueError(f"unknown method {method!r}")

    values = None
    if method in ("auto", "spectral"):
        try:
            decomp = spectral_decompose(ch)
            weights = (final_row @ decomp.right_vectors) * (decomp.left_vectors @ start)
            powers = decomp.eigenvalues[None, :] ** np.arange(n)[:, None]
            raw = powers @ weights
            values = _real_part(raw)
        except NonDiagonalizable:
            if method == "spectral":
                raise
    if values is None:
        raw = np.empty(n, dtype=complex)
        v = start
        for m in range(n):
            raw[m] = final_row @ v
            if m + 1 < n:
                v = ch.superop @ v
        values = _real_part(raw)

    return CorrelationSeries(tau=ch.tau, values=values, provenance=PROVENANCE_EXACT,
                             total_detection_time=n * ch.tau)


def _real_part(raw: np.ndarray) -> np.ndarray:
    scale = max(1.0, np.max(np.abs(raw)) if raw.size else 1.0)
    worst = np.max(np.abs(raw.imag)) if raw.size else 0.0
    if worst > 1e-8 * scale:
        raise ValueError(f"correlation has imaginary part {worst:.3e}")
    return np.ascontiguousarray(raw.real)


def channel_correlation_stream(bath: BathModel, cfg: RimConfig, tau: float,
                               n: int, rho0: np.ndarray | None = None) -> CorrelationSeries:
    """Iterated d x d evaluation of the exact correlation for large baths.

    Avoids d^2 x d^2 superoperators entirely: with K_a = U_free M_a the
    recursion is v_1 = K_0 rho K_0^dag - K_1 rho K_1^dag, v_{m+1} =
    sum_a K_a v_m K_a^dag, and C(m tau) = Tr[(M_0^dag M_0 - M_1^dag M_1) v_m].
    Agrees with exact_channel_correlation to roundoff on small baths.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rho = bath.rho0 if rho0 is None else np.asarray(rho0, dtype=complex)
    rim = build_rim_channel(bath, cfg)
    u_free = expm_hermitian(bath.b_op, tau - cfg.tau1)
    k0 = u_free @ rim.kraus_ops[0]
    k1 = u_free @ rim.kraus_ops[1]
    m0, m1 = rim.kraus_ops
    e_op = dagger(m0) @ m0 - dagger(m1) @ m1

    v = k0 @ rho @ dagger(k0) - k1 @ rho @ dagger(k1)
    raw = np.empty(n, dtype=complex)
    for m in range(n):
        raw[m] = np.einsum("ij,ji->", e_op, v)
        if m + 1 < n:
            v = k0 @ v @ dagger(k0) + k1 @ v @ dagger(k1)
    return CorrelationSeries(tau=tau, values=_real_part(raw),
                             provenance=PROVENANCE_EXACT,
                             total_detection_time=n * tau)


def correlation_spectroscopy(bath: BathModel, cfg: RimConfig, tau: float, n: int,
                             free_between: np.ndarray | None = None,
                             free_after_rim: np.ndarray | None = None) -> CorrelationSeries:
    """Two-RIM correlation with a growing free delay (back-action free).

    C_corr(m tau) = <<I| P (U'_B)^{m-1} P |rho>> where U'_B evolves for one
    full period tau and P contains the free evolution over tau - tau1; the
    effective delay between the two RIMs is then m tau including the first
    RIM's own duration. In the weak limit the series equals
    4 tau1^2 C(m tau) with no damping envelope.

    Args:
        free_between: optional superoperator replacing the unitary U'_B over
            tau (e.g. dissipative evolution).
        free_after_rim: optional superoperator replacing the unitary over
            tau - tau1 inside P.

    One pass of this protocol costs sum_m m tau = n(n+1) tau/2 of evolution.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rim = build_rim_channel(bath, cfg)
    m_hats = rim.measurement_superops()
    diff = m_hats[0] - m_hats[1]
    d = bath.dim

    if free_after_rim is None:
        free_after_rim = np.kron(expm_hermitian(bath.b_op, tau - cfg.tau1),
                                 expm_hermitian(bath.b_op, tau - cfg.tau1).conj())
    p_hat = free_after_rim @ diff
    vec_i = vec_identity(d)
    row = vec_i @ p_hat
    col = p_hat @ vectorize(bath.rho0)

    if free_between is None:
        # diagonalize the unitary delay analytically in the eigenbasis of B
        b_evals, v = np.linalg.eigh(bath.b_op)
        omega = np.subtract.outer(b_evals, b_evals).reshape(-1)
        rot = np.kron(v, v.conj())
        row_b = row @ rot
        col_b = dagger(rot) @ col
        phases = np.exp(-1j * np.outer(np.arange(n), omega) * tau)
        raw = phases @ (row_b * col_b)
    else:
        raw = np.empty(n, dtype=complex)
        vcur = col
        for m in range(n):
            raw[m] = row @ vcur
            if m + 1 < n:
                vcur = free_between @ vcur
    values = _real_part(raw)
    return CorrelationSeries(tau=tau, values=values, provenance=PROVENANCE_CORR,
                             total_detection_time=n * (n + 1) * tau / 2.0)


def sum_series(series_list: list) -> CorrelationSeries:
    """Sum per-mode correlation series of a factorized bath."""
    if not series_list:
        raise EmptyInput("no series to sum")
    first = series_list[0]
    total = np.zeros(first.n)
    for s in series_list:
        if s.n != first.n or abs(s.tau - first.tau) > 1e-12 * first.tau:
            raise DimensionMismatch("series grids differ")
        total += s.values
    return CorrelationSeries(tau=first.tau, values=total, provenance=first.provenance,
                             total_detection_time=first.total_detection_time,
                             n_samples=first.n_samples)
