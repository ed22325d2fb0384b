# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled trajectory kernel.

Semantics match _kernel_py.run_batch exactly: same uniforms consumed in the
same order, same clamping and forced-outcome rules, so the two backends
produce identical outcome strings for identical inputs. The d = 2 case is
unrolled (single-qubit probes dominate usage); larger dimensions go through
BLAS zgemm on per-trajectory d x d buffers.
"""

import numpy as np

from libc.math cimport fabs
from scipy.linalg.cython_blas cimport zgemm

cdef double P_FLOOR = 1e-14
cdef double PROB_SUM_TOL = 1e-10
cdef double TRACE_TOL = 1e-8


cdef inline double _trprod(double complex[:, ::1] g, double complex[:, ::1] rho,
                           int d):
    cdef int i, j
    cdef double complex acc = 0
    for i in range(d):
        for j in range(d):
            acc = acc + g[i, j] * rho[j, i]
    return acc.real


cdef inline void _matmul(int d, double complex[:, ::1] a,
                         double complex[:, ::1] b, double complex[:, ::1] c):
    # row-major C = A @ B through column-major zgemm: C^T = B^T A^T
    cdef char trans = b'N'
    cdef double complex one = 1, zero = 0
    zgemm(&trans, &trans, &d, &d, &d, &one, &b[0, 0], &d, &a[0, 0], &d,
          &zero, &c[0, 0], &d)


def run_batch(rho0, m0, m1, u_plus, u_minus, uniforms):
    """Batched trajectory evolution; see _kernel_py.run_batch for the contract."""
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t n_traj = uniforms.shape[0]
    cdef Py_ssize_t n_cycles = uniforms.shape[1]
    cdef int d = rho0.shape[0]

    rho0 = np.ascontiguousarray(rho0, dtype=np.complex128)
    ops = {}
    for name, arr in (("m0", m0), ("m1", m1), ("up", u_plus), ("um", u_minus)):
        arr = np.ascontiguousarray(arr, dtype=np.complex128)
        ops[name] = arr
        ops[name + "h"] = np.ascontiguousarray(arr.conj().T)
    g0 = np.ascontiguousarray(ops["m0h"] @ ops["m0"])
    g1 = np.ascontiguousarray(ops["m1h"] @ ops["m1"])

    outcomes = np.empty((n_traj, n_cycles), dtype=np.int8)
    if d == 2:
        _run_d2(rho0, ops["m0"], ops["m1"], ops["up"], ops["um"], g0, g1,
                uniforms, outcomes)
    else:
        _run_general(d, rho0, ops["m0"], ops["m0h"], ops["m1"], ops["m1h"],
                     ops["up"], ops["uph"], ops["um"], ops["umh"], g0, g1,
                     uniforms, outcomes)
    return outcomes


cdef void _run_general(int d, double complex[:, ::1] rho0,
                       double complex[:, ::1] m0, double complex[:, ::1] m0h,
                       double complex[:, ::1] m1, double complex[:, ::1] m1h,
                       double complex[:, ::1] up, double complex[:, ::1] uph,
                       double complex[:, ::1] um, double complex[:, ::1] umh,
                       double complex[:, ::1] g0, double complex[:, ::1] g1,
                       double[:, ::1] uniforms, signed char[:, ::1] out) except *:
    cdef Py_ssize_t b, k
    cdef int i, j, a
    cdef double p0, p1, p, tr
    cdef Py_ssize_t n_traj = uniforms.shape[0]
    cdef Py_ssize_t n_cycles = uniforms.shape[1]

    cur_arr = np.empty((d, d), dtype=np.complex128)
    tmp_arr = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] cur = cur_arr
    cdef double complex[:, ::1] tmp = tmp_arr
    cdef double complex scale

    for b in range(n_traj):
        cur[:, :] = rho0
        for k in range(n_cycles):
            p0 = _trprod(g0, cur, d)
            p1 = _trprod(g1, cur, d)
            if fabs(p0 + p1 - 1.0) > PROB_SUM_TOL:
                raise ValueError(
                    f"outcome probabilities sum defect {fabs(p0 + p1 - 1.0):.3e}")
            if p0 < 0.0:
                p0 = 0.0
            elif p0 > 1.0:
                p0 = 1.0
            a = 0 if uniforms[b, k] < p0 else 1
            if p0 < P_FLOOR:
                a = 1
            if 1.0 - p0 < P_FLOOR:
                a = 0
            out[b, k] = 1 if a == 0 else -1

            if a == 0:
                p = p0
                _matmul(d, m0, cur, tmp)
                _matmul(d, tmp, m0h, cur)
            else:
                p = p1
                if p < 0.0:
                    p = 0.0
                elif p > 1.0:
                    p = 1.0
                _matmul(d, m1, cur, tmp)
                _matmul(d, tmp, m1h, cur)
            scale = 1.0 / p
            for i in range(d):
                for j in range(d):
                    cur[i, j] = cur[i, j] * scale

            tr = 0.0
            for i in range(d):
                tr += cur[i, i].real
            if fabs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"trace drift {fabs(tr - 1.0):.3e}")

            if k + 1 < n_cycles:
                if a == 0:
                    _matmul(d, up, cur, tmp)
                    _matmul(d, tmp, uph, cur)
                else:
                    _matmul(d, um, cur, tmp)
                    _matmul(d, tmp, umh, cur)


cdef void _run_d2(double complex[:, ::1] rho0,
                  double complex[:, ::1] m0_in, double complex[:, ::1] m1_in,
                  double complex[:, ::1] up_in, double complex[:, ::1] um_in,
                  double complex[:, ::1] g0_in, double complex[:, ::1] g1_in,
                  double[:, ::1] uniforms, signed char[:, ::1] out) except *:
    cdef Py_ssize_t b, k
    cdef int a
    cdef double p0, p1, p, tr
    cdef Py_ssize_t n_traj = uniforms.shape[0]
    cdef Py_ssize_t n_cycles = uniforms.shape[1]

    cdef double complex r00, r01, r10, r11
    cdef double complex t00, t01, t10, t11
    cdef double complex x00, x01, x10, x11
    cdef double complex g000 = g0_in[0, 0], g001 = g0_in[0, 1]
    cdef double complex g010 = g0_in[1, 0], g011 = g0_in[1, 1]
    cdef double complex g100 = g1_in[0, 0], g101 = g1_in[0, 1]
    cdef double complex g110 = g1_in[1, 0], g111 = g1_in[1, 1]

    for b in range(n_traj):
        r00 = rho0[0, 0]; r01 = rho0[0, 1]; r10 = rho0[1, 0]; r11 = rho0[1, 1]
        for k in range(n_cycles):
            p0 = (g000 * r00 + g001 * r10 + g010 * r01 + g011 * r11).real
            p1 = (g100 * r00 + g101 * r10 + g110 * r01 + g111 * r11).real
            if fabs(p0 + p1 - 1.0) > PROB_SUM_TOL:
                raise ValueError(
                    f"outcome probabilities sum defect {fabs(p0 + p1 - 1.0):.3e}")
            if p0 < 0.0:
                p0 = 0.0
            elif p0 > 1.0:
                p0 = 1.0
            a = 0 if uniforms[b, k] < p0 else 1
            if p0 < P_FLOOR:
                a = 1
            if 1.0 - p0 < P_FLOOR:
                a = 0
            out[b, k] = 1 if a == 0 else -1

            if a == 0:
                p = p0
                x00 = m0_in[0, 0]; x01 = m0_in[0, 1]
                x10 = m0_in[1, 0]; x11 = m0_in[1, 1]
            else:
                p = p1
                if p < 0.0:
                    p = 0.0
                elif p > 1.0:
                    p = 1.0
                x00 = m1_in[0, 0]; x01 = m1_in[0, 1]
                x10 = m1_in[1, 0]; x11 = m1_in[1, 1]
            # t = X rho; rho = t X^dag / p
            t00 = x00 * r00 + x01 * r10
            t01 = x00 * r01 + x01 * r11
            t10 = x10 * r00 + x11 * r10
            t11 = x10 * r01 + x11 * r11
            r00 = (t00 * x00.conjugate() + t01 * x01.conjugate()) / p
            r01 = (t00 * x10.conjugate() + t01 * x11.conjugate()) / p
            r10 = (t10 * x00.conjugate() + t11 * x01.conjugate()) / p
            r11 = (t10 * x10.conjugate() + t11 * x11.conjugate()) / p

            tr = r00.real + r11.real
            if fabs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"trace drift {fabs(tr - 1.0):.3e}")

            if k + 1 < n_cycles:
                if a == 0:
                    x00 = up_in[0, 0]; x01 = up_in[0, 1]
                    x10 = up_in[1, 0]; x11 = up_in[1, 1]
                else:
                    x00 = um_in[0, 0]; x01 = um_in[0, 1]
                    x10 = um_in[1, 0]; x11 = um_in[1, 1]
                t00 = x00 * r00 + x01 * r10
                t01 = x00 * r01 + x01 * r11
                t10 = x10 * r00 + x11 * r10
                t11 = x10 * r01 + x11 * r11
                r00 = t00 * x00.conjugate() + t01 * x01.conjugate()
                r01 = t00 * x10.conjugate() + t01 * x11.conjugate()
                r10 = t10 * x00.conjugate() + t11 * x01.conjugate()
                r11 = t10 * x10.conjugate() + t11 * x11.conjugate()
