"""Bath models: spin-boson modes, central-spin clusters, Lindblad dissipation.

A bath is the triple (A, B, rho0) of a pure-dephasing model: A is the noise
operator coupled to the probe, B the bath's free Hamiltonian, rho0 its
initial state. Spectroscopy sees the transition frequencies omega_ij of B
weighted by the matrix elements of A, so everything downstream consumes the
same BathModel regardless of what physical system produced it.

Two families are provided. The bosonic family discretizes an Ohmic spectral
density into independent harmonic modes with thermal initial states and
truncated Fock spaces. The central-spin family models 13C nuclear spins
around an NV center, either in the ms = +-1 probe subspace (Ising hyperfine
plus secular dipolar coupling) or the ms = 0,-1 subspace (full hyperfine
vectors with the back-action tilt of the nuclear quantization axis).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import units
from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    InconsistentSpec,
    TruncationInsufficient,
)
from .linalg import (
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    as_operator,
    commutator_superop,
    conjugation_superop,
    dagger,
    density_matrix_defects,
    expm_general,
    expm_hermitian,
    require_hermitian,
)

# Largest dense Hilbert space we will build as a single tensor product.
MAX_PRODUCT_DIM = 4096

# Per-mode thermal weight allowed beyond the Fock cutoff, and the number of
# guard levels added on top of the thermal requirement to absorb the small
# displacements generated by measurement back-action.
TAIL_WEIGHT = 1e-4
GUARD_LEVELS = 2

DENSITY_TOL = 1e-10


@dataclass(frozen=True)
class BathModel:
    """Noise operator, free Hamiltonian, and initial state of one bath.

    Attributes:
        a_op: Hermitian noise operator A.
        b_op: Hermitian free Hamiltonian B (angular frequency units).
        rho0: initial density matrix.
        a_norm_eff: effective spectral norm of A (see :func:`effective_norm`).
        label: short human-readable tag.
        occupied_projector: for truncated bosonic baths, the projector onto
            the thermally occupied sector used by the effective norm; None
            for finite spin baths.
    """

    a_op: np.ndarray
    b_op: np.ndarray
    rho0: np.ndarray
    a_norm_eff: float
    label: str = ""
    occupied_projector: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        a = require_hermitian(self.a_op, "A")
        b = require_hermitian(self.b_op, "B")
        rho = as_operator(self.rho0)
        if not (a.shape == b.shape == rho.shape):
            raise DimensionMismatch(
                f"A {a.shape}, B {b.shape}, rho {rho.shape} must share one dimension")
        herm, tr, neg = density_matrix_defects(rho)
        if herm > DENSITY_TOL or tr > DENSITY_TOL or neg > DENSITY_TOL:
            raise ValueError(
                f"rho0 is not a density matrix (hermiticity {herm:.2e}, "
                f"trace defect {tr:.2e}, negativity {neg:.2e})")
        object.__setattr__(self, "a_op", a)
        object.__setattr__(self, "b_op", b)
        object.__setattr__(self, "rho0", rho)

    @property
    def dim(self) -> int:
        return self.a_op.shape[0]


def make_bath(a_op, b_op, rho0, label: str = "") -> BathModel:
    """Build a BathModel for a finite spin system (plain spectral norm)."""
    a = require_hermitian(a_op, "A")
    return BathModel(a, np.asarray(b_op, dtype=complex),
                     np.asarray(rho0, dtype=complex),
                     a_norm_eff=float(np.linalg.norm(a, 2)), label=label)


def single_qubit_bath(a: float, b: float, rho0=None) -> BathModel:
    """The workhorse test bath A = a sigma_x, B = b sigma_z, rho0 = I/2."""
    if rho0 is None:
        rho0 = np.eye(2, dtype=complex) / 2.0
    return make_bath(a * SIGMA_X, b * SIGMA_Z, rho0, label="single-qubit")


def effective_norm(bath: BathModel) -> float:
    """Effective spectral norm of A entering the weak-measurement condition.

    Finite spin baths use the plain spectral norm. Truncated bosonic baths
    restrict A to the thermally occupied sector (the levels carrying at
    least 1 - 1e-4 of the initial weight, plus one guard level so a
    ground-state-dominated mode still sees its first excitation element);
    the far tail of a large truncated Fock space would otherwise dominate
    the norm while carrying no weight.
    """
    if bath.occupied_projector is None:
        return float(np.linalg.norm(bath.a_op, 2))
    p = bath.occupied_projector
    return float(np.linalg.norm(p @ bath.a_op @ p, 2))


# ---------------------------------------------------------------------------
# spin-boson family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinBosonSpec:
    """Discretized Ohmic bath: J(omega) = alpha * omega up to omega_max.

    Mode l = 1..n_modes sits at omega_l = l * delta_omega with coupling
    g_l = sqrt(alpha * omega_l * delta_omega), delta_omega = omega_max/n_modes.
    n_max is the highest retained Fock index per mode; None selects it
    automatically from the thermal tail rule.
    """

    alpha: float
    omega_max: float
    n_modes: int
    beta: float
    n_max: int | None = None
    tail_weight: float = TAIL_WEIGHT
    guard_levels: int = GUARD_LEVELS

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive (thermal state)")
        if self.n_max is not None and self.n_max < 2:
            raise ValueError("n_max must be at least 2")

    @property
    def delta_omega(self) -> float:
        return self.omega_max / self.n_modes

    def omega(self, l: int) -> float:
        return l * self.delta_omega

    def coupling(self, l: int) -> float:
        return math.sqrt(self.alpha * self.omega(l) * self.delta_omega)

    def nbar(self, l: int) -> float:
        return 1.0 / math.expm1(self.beta * self.omega(l))

    def mode_n_max(self, l: int) -> int:
        """Fock cutoff for mode l: explicit value or the thermal tail rule."""
        if self.n_max is not None:
            required = required_levels(self.beta, self.omega(l), self.tail_weight)
            if self.n_max < required:
                raise TruncationInsufficient(
                    f"mode {l}: n_max = {self.n_max} keeps thermal tail above "
                    f"{self.tail_weight:g}; need n_max >= {required}")
            return self.n_max
        required = required_levels(self.beta, self.omega(l), self.tail_weight)
        return max(2, required + self.guard_levels)


def required_levels(beta: float, omega: float, tail: float = TAIL_WEIGHT) -> int:
    """Smallest n with thermal weight beyond n at most ``tail``.

    The truncated geometric distribution has P(n > m) = q^(m+1) with
    q = exp(-beta*omega).
    """
    log_q = -beta * omega
    if log_q < math.log(tail):  # tail already met at n = 0
        return 0
    return max(0, math.ceil(math.log(tail) / log_q) - 1)


def annihilation(n_levels: int) -> np.ndarray:
    """Truncated annihilation operator on n_levels Fock states."""
    a = np.zeros((n_levels, n_levels), dtype=complex)
    for n in range(1, n_levels):
        a[n - 1, n] = math.sqrt(n)
    return a


def thermal_state(omega: float, beta: float, n_levels: int) -> np.ndarray:
    """Truncated, renormalized thermal state of one harmonic mode."""
    weights = np.exp(-beta * omega * np.arange(n_levels))
    weights /= weights.sum()
    return np.diag(weights).astype(complex)


def _occupied_projector(rho_diag: np.ndarray, tail: float = TAIL_WEIGHT) -> np.ndarray:
    """Projector onto the leading levels holding >= 1 - tail weight, plus one."""
    cum = np.cumsum(rho_diag)
    cutoff = int(np.searchsorted(cum, 1.0 - tail)) + 1  # levels 0..cutoff-1
    keep = min(len(rho_diag), cutoff + 1)
    p = np.zeros((len(rho_diag), len(rho_diag)), dtype=complex)
    p[:keep, :keep] = np.eye(keep)
    return p


def single_mode_bath(g: float, omega: float, beta: float, n_levels: int,
                     label: str = "boson-mode") -> BathModel:
    """One harmonic mode: A = g(b + b^dag), B = omega b^dag b, thermal rho0."""
    b = annihilation(n_levels)
    a_op = g * (b + dagger(b))
    b_op = omega * (dagger(b) @ b)
    rho0 = thermal_state(omega, beta, n_levels)
    proj = _occupied_projector(np.real(np.diag(rho0)))
    norm = float(np.linalg.norm(proj @ a_op @ proj, 2))
    return BathModel(a_op, b_op, rho0, a_norm_eff=norm, label=label,
                     occupied_projector=proj)


def spin_boson_mode_baths(spec: SpinBosonSpec) -> list[BathModel]:
    """Per-mode BathModels for the factorized multi-mode simulation."""
    baths = []
    for l in range(1, spec.n_modes + 1):
        n_levels = spec.mode_n_max(l) + 1
        baths.append(single_mode_bath(spec.coupling(l), spec.omega(l), spec.beta,
                                      n_levels, label=f"boson-mode-{l}"))
    return baths


def build_spin_boson(spec: SpinBosonSpec) -> BathModel:
    """Full tensor-product bosonic bath (small mode counts only).

    A = sum_l g_l (b_l + b_l^dag), B = sum_l omega_l b_l^dag b_l, with each
    operator embedded by Kronecker products, and rho0 the product of the
    per-mode thermal states. Intended for oracle-scale checks; the
    production path factorizes mode by mode (see spin_boson_mode_baths).

    Raises:
        DimensionTooLarge: if the product dimension exceeds MAX_PRODUCT_DIM.
        TruncationInsufficient: if an explicit n_max violates the tail rule.
    """
    dims = [spec.mode_n_max(l) + 1 for l in range(1, spec.n_modes + 1)]
    total = math.prod(dims)
    if total > MAX_PRODUCT_DIM:
        raise DimensionTooLarge(
            f"product dimension {total} exceeds {MAX_PRODUCT_DIM}; "
            "use spin_boson_mode_baths for large mode counts")

    a_op = np.zeros((total, total), dtype=complex)
    b_op = np.zeros((total, total), dtype=complex)
    rho0 = np.ones((1, 1), dtype=complex)
    proj = np.ones((1, 1), dtype=complex)
    for idx, l in enumerate(range(1, spec.n_modes + 1)):
        n_levels = dims[idx]
        b = annihilation(n_levels)
        x = spec.coupling(l) * (b + dagger(b))
        num = spec.omega(l) * (dagger(b) @ b)
        left = math.prod(dims[:idx])
        right = math.prod(dims[idx + 1:])
        a_op += np.kron(np.kron(np.eye(left), x), np.eye(right))
        b_op += np.kron(np.kron(np.eye(left), num), np.eye(right))
        rho_l = thermal_state(spec.omega(l), spec.beta, n_levels)
        rho0 = np.kron(rho0, rho_l)
        proj = np.kron(proj, _occupied_projector(np.real(np.diag(rho_l))))

    norm = float(np.linalg.norm(proj @ a_op @ proj, 2))
    return BathModel(a_op, b_op, rho0, a_norm_eff=norm,
                     label=f"spin-boson-{spec.n_modes}", occupied_projector=proj)


def exact_boson_channel(spec: SpinBosonSpec, rim_cfg, pad_levels: int = 0) -> np.ndarray:
    """Measurement channel of bosonic modes from the displacement closed form.

    For A = sum_l g_l (b_l + b_l^dag) and B = sum_l omega_l n_l the interaction
    propagators factor exactly into free evolution times a displacement:
    U_alpha = e^{-iB tau1} exp(-i (-1)^alpha D) e^{i Omega2}, where
    D = sum_l (g_l / (i omega_l)) [b_l^dag delta_l - b_l delta_l^*] with
    delta_l = e^{i omega_l tau1} - 1, and Omega2 is a c-number phase. The
    two-outcome channel then collapses to

        Phi_R = conj(U_B(tau1)) . cos(Dhat),   Dhat = D x I - I x D^T,

    the phase cancelling identically between U and U^*. This is an
    independent construction from the generic expm-built Kraus channel and
    is used to validate it; cos is evaluated spectrally (Dhat Hermitian).

    Args:
        spec: bosonic spec; the product dimension must stay oracle-sized.
        rim_cfg: RimConfig carrying tau1 (delta_phi does not enter Phi_R).
        pad_levels: extra Fock levels per mode on top of mode_n_max.

    Returns:
        The d^2 x d^2 measurement-channel superoperator.
    """
    tau1 = rim_cfg.tau1
    dims = [spec.mode_n_max(l) + 1 + pad_levels for l in range(1, spec.n_modes + 1)]
    total = math.prod(dims)
    if total > 64:
        raise DimensionTooLarge(
            f"displacement-channel oracle limited to dim <= 64, got {total}")

    d_op = np.zeros((total, total), dtype=complex)
    b_op = np.zeros((total, total), dtype=complex)
    for idx, l in enumerate(range(1, spec.n_modes + 1)):
        n_levels = dims[idx]
        b = annihilation(n_levels)
        omega = spec.omega(l)
        g = spec.coupling(l)
        delta = np.exp(1j * omega * tau1) - 1.0
        d_l = (g / (1j * omega)) * (dagger(b) * delta - b * np.conj(delta))
        left = math.prod(dims[:idx])
        right = math.prod(dims[idx + 1:])
        d_op += np.kron(np.kron(np.eye(left), d_l), np.eye(right))
        b_op += np.kron(np.kron(np.eye(left), omega * (dagger(b) @ b)), np.eye(right))

    d_op = require_hermitian(d_op, "displacement generator")
    dhat = commutator_superop(d_op)
    evals, vecs = np.linalg.eigh(dhat)
    cos_dhat = (vecs * np.cos(evals)) @ dagger(vecs)
    u_b = expm_hermitian(b_op, tau1)
    return conjugation_superop(u_b) @ cos_dhat


# ---------------------------------------------------------------------------
# central-spin family
# ---------------------------------------------------------------------------

SUBSPACE_MS_PM1 = "ms+-1"
SUBSPACE_MS_0M1 = "ms0-1"


@dataclass(frozen=True)
class CentralSpinSpec:
    """Cluster of spin-1/2 nuclei around the probe.

    Attributes:
        hyperfine_vectors: per-spin (h_x, h_y, h_z) in rad per time unit.
        larmor: nuclear Larmor angular frequency omega0 >= 0.
        probe_subspace: "ms+-1" (Ising hyperfine, double quantum probe) or
            "ms0-1" (vector hyperfine with quantization-axis back-action).
        positions: optional per-spin coordinates in nm; dipolar couplings are
            derived from them when given.
        coupling_matrix: optional explicit secular couplings D_jk in rad per
            time unit (symmetric, zero diagonal). Supplying both positions
            and a conflicting matrix is an error.
        gamma_mhz_per_t: gyromagnetic ratio used for position-derived couplings.
    """

    hyperfine_vectors: tuple
    larmor: float = 0.0
    probe_subspace: str = SUBSPACE_MS_PM1
    positions: tuple | None = None
    coupling_matrix: np.ndarray | None = None
    gamma_mhz_per_t: float = units.GAMMA_C13_MHZ_PER_T

    def __post_init__(self):
        hv = tuple(tuple(float(c) for c in v) for v in self.hyperfine_vectors)
        if any(len(v) != 3 for v in hv):
            raise ValueError("hyperfine vectors must have three components")
        object.__setattr__(self, "hyperfine_vectors", hv)
        if self.larmor < 0:
            raise ValueError("larmor frequency must be >= 0")
        if self.probe_subspace not in (SUBSPACE_MS_PM1, SUBSPACE_MS_0M1):
            raise ValueError(f"unknown probe subspace {self.probe_subspace!r}")
        if self.positions is not None:
            pos = tuple(tuple(float(c) for c in p) for p in self.positions)
            if len(pos) != len(hv):
                raise InconsistentSpec("positions and hyperfine vectors disagree in count")
            object.__setattr__(self, "positions", pos)
        if self.coupling_matrix is not None:
            m = np.asarray(self.coupling_matrix, dtype=float)
            n = len(hv)
            if m.shape != (n, n):
                raise InconsistentSpec(f"coupling matrix must be {n}x{n}")
            if np.max(np.abs(m - m.T)) > 1e-12 or np.max(np.abs(np.diag(m))) > 0:
                raise InconsistentSpec("coupling matrix must be symmetric with zero diagonal")
            object.__setattr__(self, "coupling_matrix", m)

    @property
    def n_spins(self) -> int:
        return len(self.hyperfine_vectors)


def spin_component(n_spins: int, k: int, axis: int) -> np.ndarray:
    """Spin-1/2 operator I_k^axis embedded in the n_spins product space."""
    pauli = (SIGMA_X, SIGMA_Y, SIGMA_Z)[axis]
    op = np.ones((1, 1), dtype=complex)
    for j in range(n_spins):
        op = np.kron(op, pauli / 2.0 if j == k else np.eye(2))
    return op


def dipolar_matrix(spec: CentralSpinSpec) -> np.ndarray:
    """Secular dipolar couplings D_jk = D'_jk (1 - 3 cos^2 theta_jk).

    theta_jk is the angle between the internuclear vector and the z axis
    (the external field direction). Position-derived values are cross-checked
    against an explicit coupling_matrix when both are present.
    """
    n = spec.n_spins
    d = np.zeros((n, n))
    if spec.positions is not None:
        pos = np.asarray(spec.positions)
        for j in range(n):
            for k in range(j + 1, n):
                rvec = pos[j] - pos[k]
                r = float(np.linalg.norm(rvec))
                if r == 0.0:
                    raise InconsistentSpec(f"spins {j} and {k} coincide")
                cos_t = rvec[2] / r
                val = units.dipolar_coefficient(r, spec.gamma_mhz_per_t) \
                    * (1.0 - 3.0 * cos_t**2)
                d[j, k] = d[k, j] = val
        if spec.coupling_matrix is not None:
            scale = max(np.max(np.abs(d)), 1e-30)
            if np.max(np.abs(d - spec.coupling_matrix)) > 1e-8 * scale:
                raise InconsistentSpec(
                    "explicit coupling matrix conflicts with position-derived values")
        return d
    if spec.coupling_matrix is not None:
        return np.array(spec.coupling_matrix)
    return d


def build_central_spin(spec: CentralSpinSpec) -> BathModel:
    """Assemble (A, B, rho0) for a nuclear-spin cluster.

    In the ms = +-1 subspace the hyperfine interaction is Ising:
    A = sum_k h_k^z I_k^z (the overall sign of A is unobservable in the
    spectrum, which depends on |A_ji (A rho)_ij|), and
    B = -omega0 sum_k I_k^z + sum_{j<k} D_jk [I_j^z I_k^z - (I_j^x I_k^x
    + I_j^y I_k^y)/2].

    In the ms = 0,-1 subspace the full hyperfine vector acts and half of it
    moves into B, tilting each nuclear quantization axis:
    A = -1/2 sum_k h_k . I_k, B = -1/2 sum_k (h_k . I_k + 2 omega0 I_k^z)
    plus the same secular dipolar term.

    rho0 is maximally mixed (unpolarized nuclei).
    """
    n = spec.n_spins
    dim = 2**n
    if dim > 64:
        raise DimensionTooLarge(f"{n} spins give dim {dim} > 64")
    iz = [spin_component(n, k, 2) for k in range(n)]
    ix = [spin_component(n, k, 0) for k in range(n)]
    iy = [spin_component(n, k, 1) for k in range(n)]

    d_jk = dipolar_matrix(spec)
    dipolar = np.zeros((dim, dim), dtype=complex)
    for j in range(n):
        for k in range(j + 1, n):
            if d_jk[j, k] != 0.0:
                dipolar += d_jk[j, k] * (
                    iz[j] @ iz[k] - 0.5 * (ix[j] @ ix[k] + iy[j] @ iy[k]))

    if spec.probe_subspace == SUBSPACE_MS_PM1:
        a_op = sum((h[2] * iz[k] for k, h in enumerate(spec.hyperfine_vectors)),
                   np.zeros((dim, dim), dtype=complex))
        b_op = -spec.larmor * sum(iz) + dipolar
    else:
        a_op = np.zeros((dim, dim), dtype=complex)
        b_op = dipolar.astype(complex)
        for k, h in enumerate(spec.hyperfine_vectors):
            h_dot_i = h[0] * ix[k] + h[1] * iy[k] + h[2] * iz[k]
            a_op += -0.5 * h_dot_i
            b_op += -0.5 * (h_dot_i + 2.0 * spec.larmor * iz[k])

    rho0 = np.eye(dim, dtype=complex) / dim
    return make_bath(a_op, b_op, rho0, label=f"central-spin-{n}-{spec.probe_subspace}")


def effective_larmor(h: tuple, omega0: float) -> float:
    """Single-spin precession frequency in the ms = 0,-1 subspace.

    omega = 1/2 sqrt(h_x^2 + h_y^2 + (h_z + 2 omega0)^2); the corresponding
    spectral peak carries weight |h_perp|^2 / 4 where h_perp is the hyperfine
    component transverse to the effective field h + 2 omega0 e_z.
    """
    return 0.5 * math.sqrt(h[0]**2 + h[1]**2 + (h[2] + 2.0 * omega0)**2)


# ---------------------------------------------------------------------------
# dissipation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DissipationSpec:
    """Lindblad rates: relaxation gamma1 (sigma_minus) and dephasing gamma_phi
    (sigma_z), applied to every bath spin during free evolution."""

    gamma1: float = 0.0
    gamma_phi: float = 0.0

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma_phi < 0:
            raise ValueError("dissipation rates must be >= 0")

    @property
    def is_trivial(self) -> bool:
        return self.gamma1 == 0.0 and self.gamma_phi == 0.0


def _embedded_single_spin_ops(n_spins: int, op: np.ndarray) -> list[np.ndarray]:
    out = []
    for k in range(n_spins):
        full = np.ones((1, 1), dtype=complex)
        for j in range(n_spins):
            full = np.kron(full, op if j == k else np.eye(2))
        out.append(full)
    return out


def lindblad_generator(b_op: np.ndarray, jump_ops: list[np.ndarray]) -> np.ndarray:
    """Vectorized Lindbladian -i[B, .] + sum_X D[X] with D the usual dissipator."""
    b_op = require_hermitian(b_op, "B")
    d = b_op.shape[0]
    eye = np.eye(d, dtype=complex)
    gen = -1j * commutator_superop(b_op)
    for x in jump_ops:
        xdx = dagger(x) @ x
        gen += np.kron(x, x.conj())
        gen -= 0.5 * (np.kron(xdx, eye) + np.kron(eye, xdx.T))
    return gen


def dissipative_free_evolution(bath: BathModel, spec: DissipationSpec,
                               tau2: float) -> np.ndarray:
    """Free-evolution superoperator exp(tau2 * L) with per-spin dissipators.

    The generator combines -i[B, .] with relaxation sqrt(gamma1) sigma_k^-
    and dephasing sqrt(gamma_phi) sigma_k^z on every bath spin (sigma^-
    lowers toward the sigma_z = -1 state). The exponential goes through the
    general Pade path even at zero rates, so agreement with the spectrally
    built unitary channel is a genuine cross-check of two routes rather
    than an identity.

    The bath dimension must be a power of two (spin baths); dissipation on
    truncated bosonic modes is out of scope.
    """
    n_spins = int(round(math.log2(bath.dim)))
    if 2**n_spins != bath.dim:
        raise DimensionMismatch(
            "per-spin dissipators need a spin bath (dimension a power of 2)")
    jump_ops = []
    if spec.gamma1 > 0:
        root = math.sqrt(spec.gamma1)
        jump_ops += [root * m for m in _embedded_single_spin_ops(n_spins, SIGMA_MINUS)]
    if spec.gamma_phi > 0:
        root = math.sqrt(spec.gamma_phi)
        jump_ops += [root * m for m in _embedded_single_spin_ops(n_spins, SIGMA_Z)]
    gen = lindblad_generator(bath.b_op, jump_ops)
    return expm_general(tau2 * gen)


def rescale_bath(bath: BathModel, factor: float) -> BathModel:
    """Bath with A scaled by ``factor`` (used by bandwidth-ratio sweeps)."""
    return replace(bath, a_op=factor * bath.a_op,
                   a_norm_eff=abs(factor) * bath.a_norm_eff)
