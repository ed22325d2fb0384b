"""Monte Carlo sampling of measurement-outcome trajectories.

Each trajectory draws an outcome a with p(a) = Tr(M_a rho M_a^dag) at every
cycle, collapses the bath state accordingly, then free-evolves (unitary,
dissipative superoperator, or outcome-conditioned). Records hold the +-1
strings; the estimator correlates every later outcome against the first one.

Seeding is counter-based: trajectory i under master seed s gets
splitmix(s + GOLDEN * (i + 1)), so any partitioning of a batch over workers
or chunks reproduces the identical outcome matrix.

Backends: the compiled kernel (qspec._ckernel) when importable, else the
numpy one. Override with QSPEC_BACKEND={cython,python}; both consume the
same per-trajectory uniform draws and produce identical outcomes.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baths import BathModel
from .channels import RimConfig, build_rim_channel
from .correlation import PROVENANCE_MC, CorrelationSeries
from .decoupling import ConditionalEvolver
from .errors import DimensionMismatch, EmptyInput, InvalidState, OutOfRange
from .linalg import dagger, devectorize, vectorize
from . import _kernel_py

try:
    from . import _ckernel
except ImportError:
    _ckernel = None

P_FLOOR = 1e-14
TRACE_TOL = 1e-8

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

DEFAULT_CHUNK = 8192


def derive_seeds(master_seed: int, n: int, start: int = 0) -> np.ndarray:
    """Per-trajectory 64-bit seeds from a master seed (splitmix finalizer)."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    z = np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN * idx
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def active_backend() -> str:
    """Name of the kernel batch sampling will use ("cython" or "python")."""
    choice = os.environ.get("QSPEC_BACKEND", "auto").lower()
    if choice == "python":
        return "python"
    if choice == "cython":
        if _ckernel is None:
            raise RuntimeError("QSPEC_BACKEND=cython but the compiled kernel "
                               "is not importable")
        return "cython"
    if choice != "auto":
        raise ValueError(f"unknown QSPEC_BACKEND {choice!r}")
    return "cython" if _ckernel is not None else "python"


def n_workers() -> int:
    value = os.environ.get("QSPEC_THREADS")
    if value is None:
        return 1
    count = int(value)
    if count < 1:
        raise ValueError("QSPEC_THREADS must be >= 1")
    return count


@dataclass(frozen=True)
class TrajectoryRecord:
    """One trajectory's +-1 outcomes (length N+1) and its 64-bit seed."""

    outcomes: np.ndarray
    seed: int

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=np.int8)
        if out.ndim != 1 or not np.all(np.abs(out) == 1):
            raise ValueError("outcomes must be a flat +-1 sequence")
        object.__setattr__(self, "outcomes", out)


@dataclass(frozen=True)
class TrajectoryBatch:
    """Packed outcome matrix (n_traj, N+1) with per-trajectory seeds."""

    outcomes: np.ndarray
    seeds: np.ndarray
    tau: float | None = None

    @property
    def n_trajectories(self) -> int:
        return int(self.outcomes.shape[0])

    def record(self, i: int) -> TrajectoryRecord:
        return TrajectoryRecord(outcomes=self.outcomes[i], seed=int(self.seeds[i]))


@dataclass(frozen=True)
class SamplePlan:
    """Hoeffding budget: n_samples guarantee |error| <= delta except with
    probability epsilon, per correlation point."""

    delta: float
    epsilon: float
    n_samples: int


def plan_samples(delta: float, epsilon: float) -> SamplePlan:
    """N_s = ceil((2/delta^2) ln(2/epsilon)); delta in (0, 1], epsilon in (0, 1)."""
    if not 0 < delta <= 1:
        raise OutOfRange(f"delta must be in (0, 1], got {delta}")
    if not 0 < epsilon < 1:
        raise OutOfRange(f"epsilon must be in (0, 1), got {epsilon}")
    n = math.ceil((2.0 / delta**2) * math.log(2.0 / epsilon))
    return SamplePlan(delta=delta, epsilon=epsilon, n_samples=n)


def _measurement_ops(bath: BathModel, rim_cfg: RimConfig):
    rim = build_rim_channel(bath, rim_cfg)
    return rim.kraus_ops[0], rim.kraus_ops[1]


def _branch_unitaries(bath: BathModel, free_evolver):
    """Resolve a free evolver into (u_plus, u_minus) or None for superops."""
    d = bath.dim
    if isinstance(free_evolver, ConditionalEvolver):
        if free_evolver.dim != d:
            raise DimensionMismatch("evolver dimension does not match bath")
        return free_evolver.u_plus, free_evolver.u_minus
    arr = np.asarray(free_evolver)
    if arr.shape == (d, d):
        return arr, arr
    if arr.shape == (d * d, d * d):
        return None
    raise DimensionMismatch(
        f"free evolver shape {arr.shape} fits neither operators nor "
        f"superoperators of dimension {d}")


def sample_trajectory(bath: BathModel, rim_cfg: RimConfig, free_evolver,
                      n: int, seed: int) -> TrajectoryRecord:
    """Sample one trajectory of n+1 measurements (reference implementation).

    Deterministic given the seed. The batched sampler reproduces this
    bit-for-bit when handed the same derived seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m0, m1 = _measurement_ops(bath, rim_cfg)
    g0 = dagger(m0) @ m0
    g1 = dagger(m1) @ m1
    branches = _branch_unitaries(bath, free_evolver)
    superop = None if branches is not None else np.asarray(free_evolver, dtype=complex)

    rng = np.random.Generator(np.random.PCG64(int(seed)))
    uniforms = rng.random(n + 1)

    rho = bath.rho0.copy()
    outcomes = np.empty(n + 1, dtype=np.int8)
    for k in range(n + 1):
        p0 = float(np.einsum("ij,ji->", g0, rho).real)
        p1 = float(np.einsum("ij,ji->", g1, rho).real)
        if abs(p0 + p1 - 1.0) > 1e-10:
            raise InvalidState(f"outcome probabilities sum defect {p0 + p1 - 1.0:.3e}")
        p0 = min(max(p0, 0.0), 1.0)
        a = 0 if uniforms[k] < p0 else 1
        if p0 < P_FLOOR:
            a = 1
        if 1.0 - p0 < P_FLOOR:
            a = 0
        outcomes[k] = 1 if a == 0 else -1

        m_op = m0 if a == 0 else m1
        p = p0 if a == 0 else min(max(p1, 0.0), 1.0)
        rho = (m_op @ rho @ dagger(m_op)) / p
        drift = abs(float(np.trace(rho).real) - 1.0)
        if drift > TRACE_TOL:
            raise InvalidState(f"trace drift {drift:.3e} after cycle {k}")

        if k < n:
            if superop is not None:
                rho = devectorize(superop @ vectorize(rho))
                tr = float(np.trace(rho).real)
                if abs(tr - 1.0) > TRACE_TOL:
                    raise InvalidState("free superoperator is not trace-preserving")
                rho = rho / tr
            else:
                u = branches[0] if a == 0 else branches[1]
                rho = u @ rho @ dagger(u)
    return TrajectoryRecord(outcomes=outcomes, seed=int(seed))


def _run_chunk(args):
    (rho0, m0, m1, branches, superop, seeds, n_cycles, backend) = args
    uniforms = np.empty((seeds.size, n_cycles))
    for row, s in enumerate(seeds):
        gen = np.random.Generator(np.random.PCG64(int(s)))
        uniforms[row] = gen.random(n_cycles)
    if superop is not None:
        return _kernel_py.run_batch_superop(rho0, m0, m1, superop, uniforms)
    if backend == "cython":
        return _ckernel.run_batch(rho0, m0, m1, branches[0], branches[1], uniforms)
    return _kernel_py.run_batch(rho0, m0, m1, branches[0], branches[1], uniforms)


def sample_trajectories(bath: BathModel, rim_cfg: RimConfig, free_evolver,
                        n: int, n_samples: int, master_seed: int,
                        tau: float | None = None,
                        chunk_size: int = DEFAULT_CHUNK) -> TrajectoryBatch:
    """Sample n_samples independent trajectories of n+1 measurements each.

    Chunked for memory; chunk boundaries and worker counts (QSPEC_THREADS)
    do not affect the result because seeding is per trajectory index.
    Superoperator free evolvers always run on the numpy backend.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    m0, m1 = _measurement_ops(bath, rim_cfg)
    branches = _branch_unitaries(bath, free_evolver)
    superop = None if branches is not None else np.asarray(free_evolver, dtype=complex)
    backend = active_backend()
    seeds = derive_seeds(master_seed, n_samples)

    chunks = [seeds[lo:lo + chunk_size] for lo in range(0, n_samples, chunk_size)]
    jobs = [(bath.rho0, m0, m1, branches, superop, chunk, n + 1, backend)
            for chunk in chunks]

    workers = n_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(job) for job in jobs]
    outcomes = np.vstack(parts)
    return TrajectoryBatch(outcomes=outcomes, seeds=seeds, tau=tau)


def estimate_correlation(records, n: int, tau: float | None = None,
                         lag_averaged: bool = False) -> CorrelationSeries:
    """Estimate C(m tau) = mean of r_1 * r_{m+1} over trajectories, m = 1..n.

    Accepts a TrajectoryBatch or an iterable of TrajectoryRecord. The
    default correlates against the first outcome only, matching the
    protocol's estimator; lag_averaged=True instead averages all pairs at
    fixed lag (smaller variance, but averages over back-action history).
    """
    if isinstance(records, TrajectoryBatch):
        matrix = records.outcomes
        if tau is None:
            tau = records.tau
    else:
        rows = [np.asarray(r.outcomes, dtype=np.int8) for r in records]
        if not rows:
            raise EmptyInput("no trajectory records")
        matrix = np.vstack(rows)
    if matrix.shape[0] == 0:
        raise EmptyInput("no trajectory records")
    if matrix.shape[1] < n + 1:
        raise DimensionMismatch(
            f"records hold {matrix.shape[1]} outcomes, need {n + 1}")
    if tau is None:
        raise ValueError("tau is required (records carry none)")

    signs = matrix.astype(np.float64)
    if lag_averaged:
        n_cols = matrix.shape[1]
        values = np.array([
            np.mean(signs[:, :n_cols - m] * signs[:, m:]) for m in range(1, n + 1)])
    else:
        values = (signs[:, 0:1] * signs[:, 1:n + 1]).mean(axis=0)
    return CorrelationSeries(tau=float(tau), values=values,
                             provenance=PROVENANCE_MC,
                             total_detection_time=n * float(tau),
                             n_samples=int(matrix.shape[0]))
