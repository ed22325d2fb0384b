"""Measurement channels induced by repeated Ramsey interferometry.

One interrogation cycle consists of a two-outcome weak measurement of the
bath (the RIM, duration tau1) followed by free evolution (duration tau2).
The measurement Kraus operators are

    M_a = [U_0 - (-1)^a e^{i delta_phi} U_1] / 2,
    U_alpha = exp(-i [(-1)^alpha A + B] tau1),

and the cycle superoperator is Phi = U_free . (M0_hat + M1_hat) with
M_a_hat = M_a (x) M_a^*. The signed combination
P_hat = U_free . (M0_hat - M1_hat) propagates outcome parity and is what
two-point correlations contract against.

For weak measurements (tau1 ||A|| << 1) the cycle is approximately
U'_B (I + (tau1^2/2) L) with L = -(A (x) I - I (x) A^T)^2; the second-order
coefficient 1/2 follows from expanding (U0 (x) U0* + U1 (x) U1*)/2 and is
validated against exact eigenvalues (quartic residual). L is diagonal in
the eigenbasis of B except within degenerate-frequency sectors, where the
block must be diagonalized; the trace mode of each such sector keeps
eigenvalue exactly 1.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .baths import BathModel
from .errors import DimensionMismatch, NonDiagonalizable, WeakMeasurementViolation
from .linalg import (
    as_operator,
    commutator_superop,
    conjugation_superop,
    dagger,
    expm_hermitian,
    vec_identity,
)

WEAK_THRESHOLD = 0.3
CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class RimConfig:
    """Interrogation parameters of one RIM.

    tau1 is the probe-bath interaction time; delta_phi the relative phase of
    the two Ramsey pi/2 pulses (the correlation formulas are derived at
    pi/2, other values are accepted). tau1 = 0 is allowed as a degenerate
    identity-measurement case. weak_threshold bounds tau1 * ||A||_eff for
    the weak-measurement regime flag.
    """

    tau1: float
    delta_phi: float = np.pi / 2.0
    weak_threshold: float = WEAK_THRESHOLD

    def __post_init__(self):
        if self.tau1 < 0:
            raise ValueError("tau1 must be >= 0")

    def is_weak(self, a_norm_eff: float) -> bool:
        return self.tau1 * a_norm_eff <= self.weak_threshold


@dataclass(frozen=True)
class KrausChannel:
    """Two-outcome measurement channel in Kraus form."""

    kraus_ops: tuple
    dim: int

    def completeness_defect(self) -> float:
        acc = sum(dagger(m) @ m for m in self.kraus_ops)
        return float(np.max(np.abs(acc - np.eye(self.dim))))

    def measurement_superops(self) -> tuple:
        """M_a_hat = M_a (x) M_a^* for each outcome."""
        return tuple(np.kron(m, m.conj()) for m in self.kraus_ops)

    def superop(self) -> np.ndarray:
        out = np.zeros((self.dim**2, self.dim**2), dtype=complex)
        for m_hat in self.measurement_superops():
            out += m_hat
        return out


@dataclass(frozen=True)
class ConcatenatedChannel:
    """One full cycle: measurement then free evolution.

    superop is the unconditional cycle Phi; p_hat the parity-signed variant;
    measurement_superops the per-outcome pieces before free evolution.
    kraus_ops and free_unitary are retained when available so large baths
    can iterate the cycle at d x d cost instead of d^2 x d^2.
    """

    superop: np.ndarray
    measurement_superops: tuple
    p_hat: np.ndarray
    tau: float
    dim: int
    kraus_ops: tuple | None = field(default=None, repr=False)
    free_unitary: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem of a cycle superoperator.

    eigenvalues are sorted by modulus descending, ties by phase ascending.
    right_vectors holds |R_k>> as columns, left_vectors holds <<L_k| as rows,
    normalized to <<L_j|R_k>> = delta_jk.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    condition_estimate: float

    def reconstruct(self) -> np.ndarray:
        return (self.right_vectors * self.eigenvalues) @ self.left_vectors


def build_rim_channel(bath: BathModel, cfg: RimConfig) -> KrausChannel:
    """Kraus pair of one RIM on the given bath."""
    u0 = expm_hermitian(bath.a_op + bath.b_op, cfg.tau1)
    u1 = expm_hermitian(-bath.a_op + bath.b_op, cfg.tau1)
    phase = np.exp(1j * cfg.delta_phi)
    m0 = (u0 - phase * u1) / 2.0
    m1 = (u0 + phase * u1) / 2.0
    return KrausChannel(kraus_ops=(m0, m1), dim=bath.dim)


def build_free_evolution_channel(bath: BathModel, tau2: float) -> np.ndarray:
    """Unitary superoperator of free evolution under B for time tau2."""
    if tau2 < 0:
        raise ValueError("tau2 must be >= 0")
    return conjugation_superop(expm_hermitian(bath.b_op, tau2))


def concatenate(rim: KrausChannel, free: np.ndarray, tau: float,
                free_unitary: np.ndarray | None = None) -> ConcatenatedChannel:
    """Compose measurement and free evolution into one cycle channel.

    Args:
        rim: the measurement channel.
        free: free-evolution superoperator (unitary or dissipative).
        tau: full cycle period tau1 + tau2.
        free_unitary: the d x d unitary behind ``free`` when it is unitary;
            enables the iterated d x d correlation path downstream.
    """
    free = as_operator(free)
    if free.shape[0] != rim.dim**2:
        raise DimensionMismatch(
            f"free evolution acts on dim {free.shape[0]}, RIM on {rim.dim**2}")
    m_hats = rim.measurement_superops()
    return ConcatenatedChannel(
        superop=free @ (m_hats[0] + m_hats[1]),
        measurement_superops=m_hats,
        p_hat=free @ (m_hats[0] - m_hats[1]),
        tau=tau,
        dim=rim.dim,
        kraus_ops=rim.kraus_ops,
        free_unitary=free_unitary,
    )


def build_cycle(bath: BathModel, cfg: RimConfig, tau: float,
                free: np.ndarray | None = None) -> ConcatenatedChannel:
    """Convenience: RIM channel plus free evolution over tau - tau1.

    A dissipative or otherwise custom free superoperator can be passed in;
    by default the unitary channel of B is used and the underlying unitary
    is retained for iterated application.
    """
    if tau < cfg.tau1:
        raise ValueError("cycle period tau must be at least tau1")
    rim = build_rim_channel(bath, cfg)
    if free is None:
        u_free = expm_hermitian(bath.b_op, tau - cfg.tau1)
        return concatenate(rim, conjugation_superop(u_free), tau, free_unitary=u_free)
    return concatenate(rim, free, tau)


def spectral_decompose(ch: ConcatenatedChannel) -> SpectralDecomposition:
    """Eigendecomposition of the cycle superoperator with biorthonormal duals.

    Left vectors come from the inverse of the right-eigenvector matrix, so
    biorthogonality holds to inversion error; a condition estimate above
    CONDITION_LIMIT raises NonDiagonalizable and callers fall back to
    iterated application.
    """
    evals, right = np.linalg.eig(ch.superop)
    cond = float(np.linalg.cond(right))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise NonDiagonalizable(
            f"eigenvector matrix condition {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")
    left = np.linalg.inv(right)
    # scale rows/columns so <<L_k|R_k>> = 1 exactly even after sorting
    order = np.lexsort((np.angle(evals), -np.abs(evals)))
    evals = evals[order]
    right = right[:, order]
    left = left[order, :]
    diag = np.einsum("ij,ji->i", left, right)
    left = left / diag[:, None]
    return SpectralDecomposition(eigenvalues=evals, right_vectors=right,
                                 left_vectors=left, condition_estimate=cond)


def damping_generator(a_op: np.ndarray) -> np.ndarray:
    """L = -(A (x) I - I (x) A^T)^2, the second-order back-action generator."""
    a_hat = commutator_superop(a_op)
    return -(a_hat @ a_hat)


def perturbative_channel(bath: BathModel, cfg: RimConfig, tau: float) -> np.ndarray:
    """Second-order weak-measurement cycle U'_B (I + (tau1^2/2) L).

    Emits a WeakMeasurementViolation warning (and still computes) when
    tau1 * ||A||_eff exceeds the configured threshold. The residual against
    the exact cycle shrinks at least cubically in tau1.
    """
    if not cfg.is_weak(bath.a_norm_eff):
        warnings.warn(
            f"tau1*||A||_eff = {cfg.tau1 * bath.a_norm_eff:.3f} exceeds "
            f"{cfg.weak_threshold}; perturbative channel degrades",
            WeakMeasurementViolation, stacklevel=2)
    u_b = expm_hermitian(bath.b_op, tau)
    lhat = damping_generator(bath.a_op)
    d2 = bath.dim**2
    return conjugation_superop(u_b) @ (np.eye(d2) + 0.5 * cfg.tau1**2 * lhat)


@dataclass(frozen=True)
class PerturbativeMode:
    """Predicted eigenmode of the cycle channel at second order.

    pair is (i, j) in the eigenbasis of B (the dominant basis pair for
    degenerate sectors); omega = b_i - b_j; eigenvalue the predicted complex
    eigenvalue e^{-i omega tau} (1 + (tau1^2/2) mu); vector the predicted
    right eigenvector in the computational vectorized basis.
    """

    pair: tuple
    omega: float
    eigenvalue: complex
    vector: np.ndarray


def perturbative_modes(bath: BathModel, cfg: RimConfig, tau: float,
                       degeneracy_tol: float = 1e-9) -> list:
    """Second-order eigenvalue predictions with degenerate sectors resolved.

    The unperturbed cycle U'_B has eigenvalues v_ij = e^{-i omega_ij tau} on
    the basis |ij>> of B-eigenpairs. Within each group of equal v (the i = j
    sector always, plus any accidental or aliasing coincidences) the
    perturbation L is diagonalized on the group block; elsewhere its
    diagonal element suffices. Every group containing the trace direction
    produces one eigenvalue pinned at exactly v (trace preservation).
    """
    b_evals, v = np.linalg.eigh(bath.b_op)
    a_p = dagger(v) @ bath.a_op @ v
    d = bath.dim
    a_sq = a_p @ a_p

    pairs = [(i, j) for i in range(d) for j in range(d)]
    omegas = np.array([b_evals[i] - b_evals[j] for i, j in pairs])
    unperturbed = np.exp(-1j * omegas * tau)

    # group indices with (numerically) equal unperturbed eigenvalues
    groups: list[list[int]] = []
    assigned = np.full(len(pairs), -1)
    for idx in range(len(pairs)):
        if assigned[idx] >= 0:
            continue
        close = np.where(np.abs(unperturbed - unperturbed[idx]) <= degeneracy_tol)[0]
        gid = len(groups)
        groups.append(list(close))
        assigned[close] = gid

    rot = np.kron(v, v.conj())  # maps |ij>>_B to the computational basis
    half_t2 = 0.5 * cfg.tau1**2
    modes = []
    for group in groups:
        block = np.empty((len(group), len(group)), dtype=complex)
        for r, gi in enumerate(group):
            i, j = pairs[gi]
            for c, gj in enumerate(group):
                k, l = pairs[gj]
                # <<ij| L |kl>> = -<<ij| A_hat^2 |kl>> with A_hat acting in B basis
                val = (a_sq[i, k] * (1.0 if j == l else 0.0)
                       + (1.0 if i == k else 0.0) * a_sq[l, j]
                       - 2.0 * a_p[i, k] * a_p[l, j])
                block[r, c] = -val
        block = (block + dagger(block)) / 2.0
        mus, bvecs = np.linalg.eigh(block)
        for m_idx in range(len(group)):
            coeffs = bvecs[:, m_idx]
            dominant = group[int(np.argmax(np.abs(coeffs)))]
            vec = np.zeros(d * d, dtype=complex)
            for r, gi in enumerate(group):
                i, j = pairs[gi]
                vec[i * d + j] = coeffs[r]
            modes.append(PerturbativeMode(
                pair=pairs[dominant],
                omega=float(omegas[dominant]),
                eigenvalue=unperturbed[group[0]] * (1.0 + half_t2 * mus[m_idx]),
                vector=rot @ vec,
            ))
    return modes


def match_modes(decomp: SpectralDecomposition, modes: list) -> dict:
    """Pair predicted modes with exact eigenvalues by eigenvector overlap.

    Returns a dict mapping position in ``modes`` to the index into
    ``decomp.eigenvalues``. Maximal-overlap assignment (not value ordering)
    keeps degenerate and near-crossing sectors unambiguous.
    """
    right = decomp.right_vectors
    norms = np.linalg.norm(right, axis=0)
    overlaps = np.empty((len(modes), right.shape[1]))
    for r, mode in enumerate(modes):
        vec = mode.vector / np.linalg.norm(mode.vector)
        overlaps[r, :] = np.abs(np.conj(vec) @ right) / norms
    rows, cols = linear_sum_assignment(-overlaps)
    return {int(r): int(c) for r, c in zip(rows, cols)}


def channel_fixed_point_defect(superop: np.ndarray) -> float:
    """Max deviation of <<I| from being a left fixed point (TP check)."""
    s = as_operator(superop)
    d = int(round(np.sqrt(s.shape[0])))
    vec_i = vec_identity(d)
    return float(np.max(np.abs(vec_i @ s - vec_i)))
