"""Pure-numpy residual kernel (fallback for the compiled ``_kernel``).

Both implementations share one calling convention, documented on
:func:`residual_batch`.
"""
from __future__ import annotations

import numpy as np

KIND_ADVECTION, KIND_BURGERS, KIND_EULER = 0, 1, 2


def flux_x(U, kind: int, param: float):
    if kind == KIND_ADVECTION:
        return param * U
    if kind == KIND_BURGERS:
        return 0.5 * U * U
    rho, mom, ener = U[..., 0], U[..., 1], U[..., 2]
    u = mom / rho
    p = (param - 1.0) * (ener - 0.5 * mom * u)
    return np.stack([mom, mom * u + p, u * (ener + p)], axis=-1)


def wave_bound(U, kind: int, param: float, nx, nt):
    """``max_i |lambda_i nx + nt|``: largest space-time characteristic speed."""
    if kind == KIND_ADVECTION:
        return np.abs(param * nx + nt) + 0.0 * U[..., 0]
    if kind == KIND_BURGERS:
        return np.abs(U[..., 0] * nx + nt)
    rho = U[..., 0]
    u = U[..., 1] / rho
    p = (param - 1.0) * (U[..., 2] - 0.5 * U[..., 1] * u)
    c = np.sqrt(np.abs(param * p / rho))
    return np.maximum(np.abs((u + c) * nx + nt), np.abs((u - c) * nx + nt))


def residual_batch(coeffs, xt, xb, dt, Bv, Bxi, Beta, wv, xiq, etaq,
                   Btop, Bleft, Bright, wf, sf, kind, param,
                   bottom_rhs, ext_left, ext_right, dissipation=0.0):
    """Element DG residuals and face-jump moments for a batch of iterates.

    Parameters
    ----------
    coeffs : (B, E, N, m)
        Flow coefficients per batch member and element.
    xt : (B, E+1)
        Top-node abscissae (all nodes, including the fixed ends).
    xb : (E+1,)
        Bottom-node abscissae.
    dt : float
        Slab height.
    Bv, Bxi, Beta : (nq, N)
        Basis values and reference derivatives at volume points.
    wv, xiq, etaq : (nq,)
        Volume weights and point coordinates.
    Btop, Bleft, Bright : (nf, N)
        Basis values on the top edge ``(s, 1)``, left edge ``(-1, s)`` and
        right edge ``(1, s)``.
    wf, sf : (nf,)
        Edge weights and parameters.
    kind, param : int, float
        System code and its parameter (advection speed or gamma).
    bottom_rhs : (E, N, m)
        Precomputed bottom-edge contribution (past trace, fixed geometry).
    ext_left, ext_right : (m,)
        Exterior states on the two domain ends.
    dissipation : float
        Weight ``c`` of a local Lax-Friedrichs term: side-face fluxes become
        ``avg - c/2 * alpha * (U_R - U_L)``.  Zero gives the plain average.

    Returns
    -------
    R : (B, E, N, m)
        DG residuals.
    J : (B, E+1, 2, m)
        For interior face ``k`` (1..E-1): moments of the flux jump
        against the top hat ``(1+s)/2`` (slot 0) and bottom hat
        ``(1-s)/2`` (slot 1).  Boundary faces are zero.
    """
    Bn, E, N, m = coeffs.shape
    xb0, xb1 = xb[:-1], xb[1:]
    xt0, xt1 = xt[:, :-1], xt[:, 1:]

    # volume: -int F . adj(J)^T grad_ref B dxi deta (signed, no |detJ|)
    U = np.einsum("qn,benm->beqm", Bv, coeffs)
    Fx = flux_x(U, kind, param)
    t_eta = 0.5 * dt
    x_xi = ((1 - etaq) * (xb1 - xb0)[:, None] + (1 + etaq) * (xt1 - xt0)[..., None]) / 4.0
    x_eta = ((1 - xiq) * (xt0 - xb0)[..., None] + (1 + xiq) * (xt1 - xb1)[..., None]) / 4.0
    R = -t_eta * np.einsum("q,qn,beqm->benm", wv, Bxi, Fx)
    R += np.einsum("q,qn,beq,beqm->benm", wv, Bxi, x_eta, U)
    R -= np.einsum("q,qn,beq,beqm->benm", wv, Beta, x_xi, U)

    # top edge: own trace, outward normal (0, +len)
    Ut = np.einsum("fn,benm->befm", Btop, coeffs)
    half_w = 0.5 * (xt1 - xt0)
    R += np.einsum("f,fn,be,befm->benm", wf, Btop, half_w, Ut)

    R += bottom_rhs[None]

    # traces on the vertical-ish edges
    UL = np.einsum("fn,benm->befm", Bright, coeffs)  # right edge of each element
    UR = np.einsum("fn,benm->befm", Bleft, coeffs)   # left edge of each element
    dx = xt - xb[None, :]                            # (B, E+1) face tilt
    # left->right normal times half length per unit parameter
    nx = 0.5 * dt
    nt = -0.5 * dx
    FnL = flux_x(UL, kind, param) * nx + UL * nt[:, 1:, None, None]
    FnR = flux_x(UR, kind, param) * nx + UR * nt[:, :-1, None, None]

    J = np.zeros((Bn, E + 1, 2, m))
    if E > 1:
        a = FnL[:, :-1]  # element k-1's right trace on face k
        b = FnR[:, 1:]   # element k's left trace on face k
        avg = 0.5 * (a + b)
        if dissipation:
            nt_k = nt[:, 1:-1, None]
            alpha = np.maximum(wave_bound(UL[:, :-1], kind, param, nx, nt_k),
                               wave_bound(UR[:, 1:], kind, param, nx, nt_k))
            avg = avg - 0.5 * dissipation * alpha[..., None] * (UR[:, 1:] - UL[:, :-1])
        R[:, :-1] += np.einsum("f,fn,bkfm->bknm", wf, Bright, avg)
        R[:, 1:] -= np.einsum("f,fn,bkfm->bknm", wf, Bleft, avg)
        jump = b - a
        J[:, 1:-1, 0] = np.einsum("f,bkfm->bkm", wf * 0.5 * (1 + sf), jump)
        J[:, 1:-1, 1] = np.einsum("f,bkfm->bkm", wf * 0.5 * (1 - sf), jump)

    # domain ends: average of interior trace and exterior state
    ext_l = np.asarray(ext_left, dtype=float)
    ext_r = np.asarray(ext_right, dtype=float)
    fl = flux_x(ext_l, kind, param)
    fr = flux_x(ext_r, kind, param)
    ext_fn_l = fl * nx + ext_l[None, None, :] * nt[:, 0, None, None]
    ext_fn_r = fr * nx + ext_r[None, None, :] * nt[:, -1, None, None]
    avg_l = 0.5 * (FnR[:, 0] + ext_fn_l)
    avg_r = 0.5 * (FnL[:, -1] + ext_fn_r)
    if dissipation:
        ntl, ntr = nt[:, 0, None], nt[:, -1, None]
        el = np.broadcast_to(ext_l, FnR[:, 0].shape)
        er = np.broadcast_to(ext_r, FnL[:, -1].shape)
        al = np.maximum(wave_bound(UR[:, 0], kind, param, nx, ntl),
                        wave_bound(el, kind, param, nx, ntl))
        ar = np.maximum(wave_bound(UL[:, -1], kind, param, nx, ntr),
                        wave_bound(er, kind, param, nx, ntr))
        avg_l = avg_l - 0.5 * dissipation * al[..., None] * (UR[:, 0] - el)
        avg_r = avg_r - 0.5 * dissipation * ar[..., None] * (er - UL[:, -1])
    R[:, 0] -= np.einsum("f,fn,bfm->bnm", wf, Bleft, avg_l)
    R[:, -1] += np.einsum("f,fn,bfm->bnm", wf, Bright, avg_r)
    return R, J
