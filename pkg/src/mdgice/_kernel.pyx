# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled residual kernel.

Same calling convention and results as
:func:`mdgice._kernel_py.residual_batch`; see that function for the
meaning of every argument.
"""
import numpy as np
from libc.math cimport fabs, sqrt

cdef inline void _flux(const double* U, double* F, int kind, double param, int m) noexcept nogil:
    cdef double rho, mom, ener, u, p
    if kind == 0:
        F[0] = param * U[0]
    elif kind == 1:
        F[0] = 0.5 * U[0] * U[0]
    else:
        rho = U[0]
        mom = U[1]
        ener = U[2]
        u = mom / rho
        p = (param - 1.0) * (ener - 0.5 * mom * u)
        F[0] = mom
        F[1] = mom * u + p
        F[2] = u * (ener + p)


cdef inline double _wave(const double* U, int kind, double param, double nx, double nt) noexcept nogil:
    cdef double u, p, c, s1, s2
    if kind == 0:
        return fabs(param * nx + nt)
    if kind == 1:
        return fabs(U[0] * nx + nt)
    u = U[1] / U[0]
    p = (param - 1.0) * (U[2] - 0.5 * U[1] * u)
    c = sqrt(fabs(param * p / U[0]))
    s1 = fabs((u + c) * nx + nt)
    s2 = fabs((u - c) * nx + nt)
    return s1 if s1 > s2 else s2


def residual_batch(double[:, :, :, ::1] coeffs, double[:, ::1] xt, double[::1] xb,
                   double dt, double[:, ::1] Bv, double[:, ::1] Bxi, double[:, ::1] Beta,
                   double[::1] wv, double[::1] xiq, double[::1] etaq,
                   double[:, ::1] Btop, double[:, ::1] Bleft, double[:, ::1] Bright,
                   double[::1] wf, double[::1] sf, int kind, double param,
                   double[:, :, ::1] bottom_rhs, ext_left, ext_right, double dissipation=0.0):
    cdef Py_ssize_t Bn = coeffs.shape[0], E = coeffs.shape[1]
    cdef Py_ssize_t N = coeffs.shape[2], m = coeffs.shape[3]
    cdef Py_ssize_t nq = wv.shape[0], nf = wf.shape[0]
    cdef double[::1] exl = np.ascontiguousarray(ext_left, dtype=float)
    cdef double[::1] exr = np.ascontiguousarray(ext_right, dtype=float)
    R_arr = np.zeros((Bn, E, N, m))
    J_arr = np.zeros((Bn, E + 1, 2, m))
    cdef double[:, :, :, ::1] R = R_arr
    cdef double[:, :, :, ::1] J = J_arr
    # scratch: traces on the right/left edges of every element
    tr_arr = np.empty((E, nf, 2, m))
    cdef double[:, :, :, ::1] tr = tr_arr
    cdef double U[3]
    cdef double F[3]
    cdef double Fe[3]
    cdef double a[3]
    cdef double b[3]
    cdef Py_ssize_t bi, e, q, n, c, f, k
    cdef double t_eta = 0.5 * dt, x_xi, x_eta, w, half_w, nt, avg, jump, alpha, a2
    cdef double nx = 0.5 * dt

    with nogil:
        for bi in range(Bn):
            for e in range(E):
                # volume
                for q in range(nq):
                    for c in range(m):
                        U[c] = 0.0
                        for n in range(N):
                            U[c] += Bv[q, n] * coeffs[bi, e, n, c]
                    _flux(U, F, kind, param, <int>m)
                    x_xi = ((1 - etaq[q]) * (xb[e + 1] - xb[e])
                            + (1 + etaq[q]) * (xt[bi, e + 1] - xt[bi, e])) / 4.0
                    x_eta = ((1 - xiq[q]) * (xt[bi, e] - xb[e])
                             + (1 + xiq[q]) * (xt[bi, e + 1] - xb[e + 1])) / 4.0
                    w = wv[q]
                    for n in range(N):
                        for c in range(m):
                            R[bi, e, n, c] += w * (-t_eta * Bxi[q, n] * F[c]
                                                   + (Bxi[q, n] * x_eta - Beta[q, n] * x_xi) * U[c])
                # top edge and bottom data
                half_w = 0.5 * (xt[bi, e + 1] - xt[bi, e])
                for f in range(nf):
                    for c in range(m):
                        U[c] = 0.0
                        for n in range(N):
                            U[c] += Btop[f, n] * coeffs[bi, e, n, c]
                    for n in range(N):
                        for c in range(m):
                            R[bi, e, n, c] += wf[f] * Btop[f, n] * half_w * U[c]
                for n in range(N):
                    for c in range(m):
                        R[bi, e, n, c] += bottom_rhs[e, n, c]
                # side traces: slot 0 right edge, slot 1 left edge
                for f in range(nf):
                    for c in range(m):
                        a[c] = 0.0
                        b[c] = 0.0
                        for n in range(N):
                            a[c] += Bright[f, n] * coeffs[bi, e, n, c]
                            b[c] += Bleft[f, n] * coeffs[bi, e, n, c]
                        tr[e, f, 0, c] = a[c]
                        tr[e, f, 1, c] = b[c]

            # interior faces
            for k in range(1, E):
                nt = -0.5 * (xt[bi, k] - xb[k])
                for f in range(nf):
                    for c in range(m):
                        a[c] = tr[k - 1, f, 0, c]
                        b[c] = tr[k, f, 1, c]
                    _flux(a, F, kind, param, <int>m)
                    _flux(b, Fe, kind, param, <int>m)
                    alpha = 0.0
                    if dissipation != 0.0:
                        alpha = _wave(a, kind, param, nx, nt)
                        a2 = _wave(b, kind, param, nx, nt)
                        if a2 > alpha:
                            alpha = a2
                    for c in range(m):
                        F[c] = F[c] * nx + a[c] * nt
                        Fe[c] = Fe[c] * nx + b[c] * nt
                        avg = 0.5 * (F[c] + Fe[c]) - 0.5 * dissipation * alpha * (b[c] - a[c])
                        jump = Fe[c] - F[c]
                        for n in range(N):
                            R[bi, k - 1, n, c] += wf[f] * Bright[f, n] * avg
                            R[bi, k, n, c] -= wf[f] * Bleft[f, n] * avg
                        J[bi, k, 0, c] += wf[f] * 0.5 * (1 + sf[f]) * jump
                        J[bi, k, 1, c] += wf[f] * 0.5 * (1 - sf[f]) * jump

            # domain ends: average with the exterior state
            nt = -0.5 * (xt[bi, 0] - xb[0])
            _flux(&exl[0], Fe, kind, param, <int>m)
            for f in range(nf):
                for c in range(m):
                    b[c] = tr[0, f, 1, c]
                _flux(b, F, kind, param, <int>m)
                alpha = 0.0
                if dissipation != 0.0:
                    alpha = _wave(b, kind, param, nx, nt)
                    a2 = _wave(&exl[0], kind, param, nx, nt)
                    if a2 > alpha:
                        alpha = a2
                for c in range(m):
                    avg = (0.5 * (F[c] * nx + b[c] * nt + Fe[c] * nx + exl[c] * nt)
                           - 0.5 * dissipation * alpha * (b[c] - exl[c]))
                    for n in range(N):
                        R[bi, 0, n, c] -= wf[f] * Bleft[f, n] * avg
            nt = -0.5 * (xt[bi, E] - xb[E])
            _flux(&exr[0], Fe, kind, param, <int>m)
            for f in range(nf):
                for c in range(m):
                    a[c] = tr[E - 1, f, 0, c]
                _flux(a, F, kind, param, <int>m)
                alpha = 0.0
                if dissipation != 0.0:
                    alpha = _wave(a, kind, param, nx, nt)
                    a2 = _wave(&exr[0], kind, param, nx, nt)
                    if a2 > alpha:
                        alpha = a2
                for c in range(m):
                    avg = (0.5 * (F[c] * nx + a[c] * nt + Fe[c] * nx + exr[c] * nt)
                           - 0.5 * dissipation * alpha * (exr[c] - a[c]))
                    for n in range(N):
                        R[bi, E - 1, n, c] += wf[f] * Bright[f, n] * avg
    return R_arr, J_arr
