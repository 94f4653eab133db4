"""Levenberg-Marquardt driver for ``min 1/2 ||R(u)||^2``."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
import logging
import time

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

LAMBDA_MIN = 1e-14
LAMBDA_MAX = 1e14


@dataclass
class LmConfig:
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 1.0 / 3.0
    tol_r: float = 1e-10
    tol_step: float = 1e-12
    tol_grad: float = 1e-13
    max_iter: int = 200
    geometry_scale: float = 1.0
    eps_d: float = 1e-12
    fd_eps: float = 1e-7
    rcond: float = 1e-12
    geometry_reg: float = 1.0

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if not (self.lambda_up > 1.0 > self.lambda_down > 0.0):
            raise ValueError("need lambda_up > 1 > lambda_down > 0")
        if self.geometry_reg < 0:
            raise ValueError("geometry_reg must be nonnegative")
        if min(self.tol_r, self.tol_step, self.tol_grad) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def updated(self, **overrides) -> "LmConfig":
        vals = {k: getattr(self, k) for k in self.keys()}
        for k, v in overrides.items():
            if k not in vals:
                raise KeyError(f"unknown solver option {k!r}")
            vals[k] = type(vals[k])(v)
        return LmConfig(**vals)


@dataclass
class SolveReport:
    iterations: int = 0
    converged: bool = False
    reason: str = ""
    norm: float = np.nan
    norm_dg: float = np.nan
    norm_ice: float = np.nan
    history: list = field(default_factory=list)
    wall_time: float = 0.0
    rejected: int = 0

    def history_rows(self):
        return list(self.history)


def _norms(r, split):
    if split is None:
        return float(np.linalg.norm(r)), float(np.linalg.norm(r)), 0.0
    a, b = split(r)
    return float(np.linalg.norm(r)), float(np.linalg.norm(a)), float(np.linalg.norm(b))


def minimize(residual, jacobian, u0, cfg: LmConfig | None = None, scaling=None,
             split=None, monitor=None, iter_offset: int = 0, admissible=None,
             stiffness=None):
    """Damped Gauss-Newton iteration with Marquardt diagonal damping.

    Parameters
    ----------
    residual : callable ``u -> r``
    jacobian : callable ``(u, r) -> J`` (dense or scipy sparse)
    u0 : array
    cfg : LmConfig
    scaling : array, optional
        Column scaling ``D`` (right preconditioner): steps are solved for
        ``D^{-1} delta``.
    split : callable, optional
        ``r -> (r_dg, r_ice)`` for reporting the two residual blocks.
    monitor : callable, optional
        ``u -> dict`` of flags stored with every history row.
    admissible : callable, optional
        ``(u_new, u) -> bool``; a trial step for which this is false is
        treated like a step that fails to reduce the residual.
    stiffness : array, optional
        Symmetric positive semidefinite matrix ``K`` (scaled variables).
        The damping becomes ``lam (diag(A) + eps_d I + c K)`` with
        ``c = cfg.geometry_reg * mean(diag(A))``, which couples the steps
        of neighbouring unknowns.

    Returns
    -------
    u : array
    report : SolveReport
        ``history`` has ``iterations + 1`` rows; row ``k`` holds the state
        after ``k`` accepted steps.
    """
    cfg = cfg or LmConfig()
    t_start = time.perf_counter()
    u = np.array(u0, dtype=float)
    D = np.ones_like(u) if scaling is None else np.asarray(scaling, dtype=float)
    lam = cfg.lambda0
    report = SolveReport()

    r = residual(u)
    f, f_dg, f_ice = _norms(r, split)

    def record(k):
        row = {"iter": k + iter_offset, "norm": f, "norm_dg": f_dg, "norm_ice": f_ice,
               "lambda": lam}
        if monitor is not None:
            row.update(monitor(u))
        report.history.append(row)

    record(0)
    k = 0
    while True:
        if not np.isfinite(f):
            report.reason = "nonfinite residual"
            break
        if f <= cfg.tol_r:
            report.converged, report.reason = True, "residual tolerance"
            break
        if k >= cfg.max_iter:
            report.reason = "iteration limit"
            break
        J = jacobian(u, r)
        J = J.toarray() if hasattr(J, "toarray") else np.asarray(J)
        Js = J * D[None, :]
        A = Js.T @ Js
        g = Js.T @ r
        if np.max(np.abs(g)) <= cfg.tol_grad * max(1.0, f):
            report.converged, report.reason = True, "stationary point"
            break
        dA = np.diag(A).copy()
        M = np.diag(dA + cfg.eps_d)
        if stiffness is not None and cfg.geometry_reg > 0:
            M += cfg.geometry_reg * dA.mean() * stiffness
        # M = L L^T, so the damping rows are sqrt(lam) L^T
        Lt = np.linalg.cholesky(M).T
        accepted = False
        while lam <= LAMBDA_MAX:
            # (A + lam M) step = -g, solved as the equivalent augmented
            # least-squares problem (no squaring of cond(J))
            aug = np.vstack([Js, np.sqrt(lam) * Lt])
            rhs = np.concatenate([-r, np.zeros_like(u)])
            try:
                step = sla.lstsq(aug, rhs, cond=cfg.rcond, check_finite=False,
                                 lapack_driver="gelsd")[0]
            except (sla.LinAlgError, ValueError):
                step = np.full_like(u, np.nan)
            if not np.all(np.isfinite(step)):
                lam *= cfg.lambda_up
                report.rejected += 1
                continue
            u_new = u + D * step
            r_new = residual(u_new)
            f_new = float(np.linalg.norm(r_new))
            if np.isfinite(f_new) and f_new < f and (admissible is None
                                                      or admissible(u_new, u)):
                accepted = True
                break
            lam *= cfg.lambda_up
            report.rejected += 1
        if not accepted:
            report.reason = "damping cap reached"
            break
        step_norm = float(np.linalg.norm(step))
        u, r = u_new, r_new
        f, f_dg, f_ice = _norms(r, split)
        lam = max(lam * cfg.lambda_down, LAMBDA_MIN)
        k += 1
        record(k)
        log.debug("LM iter %d |R|=%.3e dg=%.3e ice=%.3e lam=%.1e", k, f, f_dg, f_ice, lam)
        if step_norm <= cfg.tol_step:
            report.converged, report.reason = True, "step tolerance"
            break

    report.iterations = k
    report.norm, report.norm_dg, report.norm_ice = f, f_dg, f_ice
    report.wall_time = time.perf_counter() - t_start
    return u, report
