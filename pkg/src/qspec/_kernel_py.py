"""Pure-numpy trajectory kernel, batched over trajectories.

Reference semantics for the compiled kernel in _ckernel: both consume the
same pre-drawn uniforms in the same per-cycle order and must produce
identical outcome strings. State updates act on dense density matrices;
outcome a = 0 records r = +1 and selects the u_plus free branch.
"""

import numpy as np

P_FLOOR = 1e-14
PROB_SUM_TOL = 1e-10
TRACE_TOL = 1e-8


def run_batch(rho0, m0, m1, u_plus, u_minus, uniforms):
    """Evolve a batch of measurement trajectories.

    Args:
        rho0: initial density matrix (d, d), shared by every trajectory.
        m0, m1: measurement operators.
        u_plus, u_minus: free propagators selected by the last outcome
            (pass the same array twice for unconditional evolution).
        uniforms: (n_traj, n_cycles) draws in [0, 1).

    Returns:
        int8 array (n_traj, n_cycles) of +-1 outcomes.

    Raises:
        ValueError if the outcome probabilities fail to sum to 1 or the
        state trace drifts, which indicates non-measurement Kraus input.
    """
    uniforms = np.asarray(uniforms, dtype=float)
    n_traj, n_cycles = uniforms.shape
    d = rho0.shape[0]
    g0 = m0.conj().T @ m0
    g1 = m1.conj().T @ m1

    rho = np.broadcast_to(rho0, (n_traj, d, d)).copy()
    outcomes = np.empty((n_traj, n_cycles), dtype=np.int8)

    for k in range(n_cycles):
        p0 = np.einsum("ij,bji->b", g0, rho).real
        p1 = np.einsum("ij,bji->b", g1, rho).real
        worst = np.max(np.abs(p0 + p1 - 1.0))
        if worst > PROB_SUM_TOL:
            raise ValueError(f"outcome probabilities sum defect {worst:.3e}")
        p0 = np.clip(p0, 0.0, 1.0)
        pick1 = uniforms[:, k] >= p0
        # degenerate branches are forced to the other outcome
        pick1 |= p0 < P_FLOOR
        pick1 &= ~(1.0 - p0 < P_FLOOR)
        outcomes[:, k] = np.where(pick1, -1, 1)

        for mask, m_op, p_sel in ((~pick1, m0, p0), (pick1, m1, np.clip(p1, 0.0, 1.0))):
            if not np.any(mask):
                continue
            sub = m_op @ rho[mask] @ m_op.conj().T
            sub /= p_sel[mask][:, None, None]
            rho[mask] = sub

        trace_drift = np.max(np.abs(np.einsum("bii->b", rho).real - 1.0))
        if trace_drift > TRACE_TOL:
            raise ValueError(f"trace drift {trace_drift:.3e}")

        if k + 1 < n_cycles:
            for mask, u in ((~pick1, u_plus), (pick1, u_minus)):
                if not np.any(mask):
                    continue
                rho[mask] = u @ rho[mask] @ u.conj().T

    return outcomes


def run_batch_superop(rho0, m0, m1, free_superop, uniforms):
    """Same protocol with a superoperator free step (dissipative evolution).

    free_superop acts on row-major vectorized states: rho_vec (b, d^2)
    maps to rho_vec @ free_superop.T.
    """
    uniforms = np.asarray(uniforms, dtype=float)
    n_traj, n_cycles = uniforms.shape
    d = rho0.shape[0]
    g0 = m0.conj().T @ m0
    g1 = m1.conj().T @ m1

    rho = np.broadcast_to(rho0, (n_traj, d, d)).copy()
    outcomes = np.empty((n_traj, n_cycles), dtype=np.int8)
    free_t = free_superop.T.copy()

    for k in range(n_cycles):
        p0 = np.einsum("ij,bji->b", g0, rho).real
        p1 = np.einsum("ij,bji->b", g1, rho).real
        worst = np.max(np.abs(p0 + p1 - 1.0))
        if worst > PROB_SUM_TOL:
            raise ValueError(f"outcome probabilities sum defect {worst:.3e}")
        p0 = np.clip(p0, 0.0, 1.0)
        pick1 = uniforms[:, k] >= p0
        pick1 |= p0 < P_FLOOR
        pick1 &= ~(1.0 - p0 < P_FLOOR)
        outcomes[:, k] = np.where(pick1, -1, 1)

        for mask, m_op, p_sel in ((~pick1, m0, p0), (pick1, m1, np.clip(p1, 0.0, 1.0))):
            if not np.any(mask):
                continue
            sub = m_op @ rho[mask] @ m_op.conj().T
            sub /= p_sel[mask][:, None, None]
            rho[mask] = sub

        trace_drift = np.max(np.abs(np.einsum("bii->b", rho).real - 1.0))
        if trace_drift > TRACE_TOL:
            raise ValueError(f"trace drift {trace_drift:.3e}")

        if k + 1 < n_cycles:
            flat = rho.reshape(n_traj, d * d) @ free_t
            rho = np.ascontiguousarray(flat.reshape(n_traj, d, d))
            tr = np.einsum("bii->b", rho).real
            if np.max(np.abs(tr - 1.0)) > TRACE_TOL:
                raise ValueError("free superoperator is not trace-preserving")
            rho /= tr[:, None, None]

    return outcomes
