"""Conditional free evolution and CPMG decoupling of the probe-bath coupling.

Between measurements the bath sees e^{-i(rA+B)tau2} conditioned on the last
outcome r = +-1, because the probe remains correlated with the bath during
free flight. Interleaving an even number of pi-pulses (CPMG) averages the
+-A branches away; to first Magnus order both conditional propagators
collapse onto e^{-iB tau2}. The ideal-B mode short-circuits that limit
(probe reset between cycles).
"""

from dataclasses import dataclass

import numpy as np

from .baths import BathModel
from .channels import ConcatenatedChannel, RimConfig, build_rim_channel
from .errors import OddPulseCount
from .linalg import conjugation_superop, dagger, expm_hermitian

UNITARITY_TOL = 1e-10

MODE_FREE_CONDITIONAL = "free-conditional"
MODE_CPMG = "cpmg"
MODE_IDEAL_B = "ideal-B"


@dataclass(frozen=True)
class CpmgConfig:
    """Pulse count and free-evolution duration. n_pulses = 0 disables DD."""

    n_pulses: int
    tau2: float

    def __post_init__(self):
        if self.n_pulses < 0 or self.n_pulses % 2 != 0:
            raise OddPulseCount(
                f"n_pulses must be even and >= 0, got {self.n_pulses}")
        if self.tau2 < 0:
            raise ValueError("tau2 must be >= 0")


@dataclass(frozen=True)
class ConditionalEvolver:
    """Propagators applied after outcome r = +1 (u_plus) or r = -1 (u_minus)."""

    u_plus: np.ndarray
    u_minus: np.ndarray
    mode: str

    def __post_init__(self):
        for u in (self.u_plus, self.u_minus):
            d = u.shape[0]
            defect = np.max(np.abs(dagger(u) @ u - np.eye(d)))
            if defect > UNITARITY_TOL:
                raise ValueError(f"propagator unitarity defect {defect:.3e}")

    @property
    def dim(self) -> int:
        return int(self.u_plus.shape[0])

    def branch(self, r: int) -> np.ndarray:
        if r == 1:
            return self.u_plus
        if r == -1:
            return self.u_minus
        raise ValueError(f"outcome must be +1 or -1, got {r}")


def conditional_propagators(bath: BathModel, cfg: CpmgConfig,
                            mode: str = "conditional") -> ConditionalEvolver:
    """Build the outcome-conditioned free propagators.

    mode = "conditional" selects plain conditional evolution when
    n_pulses = 0 and the CPMG-interleaved product otherwise; "ideal-B"
    returns e^{-iB tau2} on both branches regardless of cfg.n_pulses.

    With N pulses at times (2n-1) tau2/(2N) the propagator for branch r is
    (e^{-i(rA+B)tau2/2N} e^{-i(-rA+B)tau2/N} e^{-i(rA+B)tau2/2N})^{N/2},
    requiring even N.
    """
    if mode == MODE_IDEAL_B:
        u_b = expm_hermitian(bath.b_op, cfg.tau2)
        return ConditionalEvolver(u_plus=u_b, u_minus=u_b, mode=MODE_IDEAL_B)
    if mode != "conditional":
        raise ValueError(f"unknown mode {mode!r}")

    if cfg.n_pulses == 0:
        u_plus = expm_hermitian(bath.a_op + bath.b_op, cfg.tau2)
        u_minus = expm_hermitian(-bath.a_op + bath.b_op, cfg.tau2)
        return ConditionalEvolver(u_plus=u_plus, u_minus=u_minus,
                                  mode=MODE_FREE_CONDITIONAL)

    n = cfg.n_pulses
    u_plus = _cpmg_propagator(bath.a_op, bath.b_op, cfg.tau2, n, +1)
    u_minus = _cpmg_propagator(bath.a_op, bath.b_op, cfg.tau2, n, -1)
    return ConditionalEvolver(u_plus=u_plus, u_minus=u_minus, mode=MODE_CPMG)


def _cpmg_propagator(a_op, b_op, tau2, n_pulses, r):
    half = expm_hermitian(r * a_op + b_op, tau2 / (2 * n_pulses))
    middle = expm_hermitian(-r * a_op + b_op, tau2 / n_pulses)
    block = half @ middle @ half
    return np.linalg.matrix_power(block, n_pulses // 2)


def trajectory_free_step(rho: np.ndarray, outcome: int,
                         evolver: ConditionalEvolver) -> np.ndarray:
    """Propagate the bath state through the branch selected by outcome r."""
    u = evolver.branch(outcome)
    return u @ rho @ dagger(u)


def conditional_cycle(bath: BathModel, rim_cfg: RimConfig, tau: float,
                      evolver: ConditionalEvolver) -> ConcatenatedChannel:
    """Assemble the measurement cycle with outcome-conditioned free flight.

    Phi = sum_a (U_{r(a)} . U_{r(a)}^dag) M_a, with r(0) = +1 and r(1) = -1;
    the parity-signed version weights the a = 1 term by -1. Durations must
    satisfy tau = tau1 + tau2 of the evolver's construction; the caller owns
    that bookkeeping since the evolver does not retain tau2.
    """
    rim = build_rim_channel(bath, rim_cfg)
    m_hats = rim.measurement_superops()
    u_hat_plus = conjugation_superop(evolver.u_plus)
    u_hat_minus = conjugation_superop(evolver.u_minus)
    superop = u_hat_plus @ m_hats[0] + u_hat_minus @ m_hats[1]
    p_hat = u_hat_plus @ m_hats[0] - u_hat_minus @ m_hats[1]
    return ConcatenatedChannel(superop=superop, measurement_superops=m_hats,
                               p_hat=p_hat, tau=tau, dim=bath.dim,
                               kraus_ops=rim.kraus_ops, free_unitary=None)


def decoupling_defect(bath: BathModel, cfg: CpmgConfig) -> float:
    """Spectral-norm distance of the CPMG branch from the pure-B propagator.

    Decreases toward 0 as n_pulses grows (first-order Magnus); used to
    quantify how well a pulse budget restores back-action-free evolution.
    """
    evolver = conditional_propagators(bath, cfg)
    u_b = expm_hermitian(bath.b_op, cfg.tau2)
    return float(np.linalg.norm(evolver.u_plus - u_b, ord=2))
