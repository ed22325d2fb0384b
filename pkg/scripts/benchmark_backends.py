"""Time the compiled trajectory kernel against the numpy fallback.

Runs the same seeded batches through both backends (QSPEC_BACKEND is read
per call), checks the outcome matrices are bit-identical, and reports
wall-clock times and the speedup. Two workloads: a single qubit (the
unrolled d=2 path) and a 32-dimensional five-spin cluster.

Usage: python3 scripts/benchmark_backends.py [--samples 2000] [--cycles 64]
"""

import argparse
import os
import time

import numpy as np

from qspec import (
    CentralSpinSpec,
    RimConfig,
    build_central_spin,
    sample_trajectories,
    single_qubit_bath,
)
from qspec.linalg import expm_hermitian
from qspec.trajectories import _ckernel


def _cluster_bath():
    rng = np.random.default_rng(2024)
    vectors = tuple(tuple(v) for v in rng.normal(0.0, 0.08, size=(5, 3)))
    return build_central_spin(CentralSpinSpec(hyperfine_vectors=vectors,
                                              larmor=0.9))


def _run(bath, backend, n_samples, n_cycles, seed=42):
    cfg = RimConfig(tau1=0.1)
    evolver = expm_hermitian(bath.b_op, 0.9)
    os.environ["QSPEC_BACKEND"] = backend
    start = time.perf_counter()
    batch = sample_trajectories(bath, cfg, evolver, n_cycles, n_samples, seed)
    elapsed = time.perf_counter() - start
    return batch.outcomes, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=2000)
    parser.add_argument("--cycles", type=int, default=64)
    args = parser.parse_args()

    if _ckernel is None:
        print("compiled kernel not importable; nothing to compare")
        return

    cases = [("single qubit (d=2)", single_qubit_bath(a=0.1, b=1.0)),
             ("five-spin cluster (d=32)", _cluster_bath())]
    print(f"{args.samples} trajectories x {args.cycles + 1} measurements each")
    for name, bath in cases:
        out_py, t_py = _run(bath, "python", args.samples, args.cycles)
        out_cy, t_cy = _run(bath, "cython", args.samples, args.cycles)
        if not np.array_equal(out_py, out_cy):
            raise SystemExit(f"{name}: backends disagree, benchmark void")
        print(f"{name}: python {t_py:.3f}s  cython {t_cy:.3f}s  "
              f"speedup x{t_py / t_cy:.1f}  (outcomes identical)")
    os.environ.pop("QSPEC_BACKEND", None)


if __name__ == "__main__":
    main()
