"""Exact solutions used for verification: scalar Riemann problems, the
exact Euler Riemann solver, and the planar Noh problem.

Nothing here is used by the discretization itself.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

SHOCK = "shock"
RAREFACTION = "rarefaction"


class VacuumError(ValueError):
    """The data generate a vacuum; the star region does not exist."""


@dataclass(frozen=True)
class RiemannSolution:
    left: tuple  # (rho, u, p)
    right: tuple
    gamma: float
    p_star: float
    u_star: float
    waves: tuple  # (left wave kind, right wave kind)
    newton_iterations: int = 0

    # ---------------------------------------------------------------- derived
    def _c(self, rho, p):
        return math.sqrt(self.gamma * p / rho)

    @property
    def rho_star_left(self) -> float:
        return _star_density(self.left, self.p_star, self.gamma)

    @property
    def rho_star_right(self) -> float:
        return _star_density(self.right, self.p_star, self.gamma)

    def wave_speeds(self) -> dict:
        """Characteristic speeds bounding every region (x/t)."""
        g = self.gamma
        rl, ul, pl = self.left
        rr, ur, pr = self.right
        out = {"contact": self.u_star}
        if self.waves[0] == SHOCK:
            out["left_shock"] = ul - self._c(rl, pl) * math.sqrt(
                (g + 1) / (2 * g) * self.p_star / pl + (g - 1) / (2 * g))
        else:
            out["left_head"] = ul - self._c(rl, pl)
            out["left_tail"] = self.u_star - self._c(self.rho_star_left, self.p_star)
        if self.waves[1] == SHOCK:
            out["right_shock"] = ur + self._c(rr, pr) * math.sqrt(
                (g + 1) / (2 * g) * self.p_star / pr + (g - 1) / (2 * g))
        else:
            out["right_head"] = ur + self._c(rr, pr)
            out["right_tail"] = self.u_star + self._c(self.rho_star_right, self.p_star)
        return out

    def sample(self, x, t, x0: float = 0.0):
        """Primitive ``(rho, u, p)`` arrays at points ``x`` and time ``t > 0``."""
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ValueError("sampling requires t > 0")
        xi = (np.asarray(x, dtype=float) - x0) / t
        out = np.empty(xi.shape + (3,))
        flat = out.reshape(-1, 3)
        for i, s in enumerate(xi.ravel()):
            flat[i] = self._sample_point(float(s))
        return out[..., 0], out[..., 1], out[..., 2]

    def _sample_point(self, s: float):
        g = self.gamma
        rl, ul, pl = self.left
        rr, ur, pr = self.right
        ps, us = self.p_star, self.u_star
        if s <= us:
            if self.waves[0] == SHOCK:
                sl = ul - self._c(rl, pl) * math.sqrt((g + 1) / (2 * g) * ps / pl + (g - 1) / (2 * g))
                return (rl, ul, pl) if s <= sl else (self.rho_star_left, us, ps)
            cl = self._c(rl, pl)
            head = ul - cl
            tail = us - self._c(self.rho_star_left, ps)
            if s <= head:
                return rl, ul, pl
            if s >= tail:
                return self.rho_star_left, us, ps
            f = 2.0 / (g + 1) + (g - 1) / ((g + 1) * cl) * (ul - s)
            return (rl * f ** (2 / (g - 1)), 2.0 / (g + 1) * (cl + (g - 1) / 2 * ul + s),
                    pl * f ** (2 * g / (g - 1)))
        if self.waves[1] == SHOCK:
            sr = ur + self._c(rr, pr) * math.sqrt((g + 1) / (2 * g) * ps / pr + (g - 1) / (2 * g))
            return (rr, ur, pr) if s >= sr else (self.rho_star_right, us, ps)
        cr = self._c(rr, pr)
        head = ur + cr
        tail = us + self._c(self.rho_star_right, ps)
        if s >= head:
            return rr, ur, pr
        if s <= tail:
            return self.rho_star_right, us, ps
        f = 2.0 / (g + 1) - (g - 1) / ((g + 1) * cr) * (ur - s)
        return (rr * f ** (2 / (g - 1)), 2.0 / (g + 1) * (-cr + (g - 1) / 2 * ur + s),
                pr * f ** (2 * g / (g - 1)))


def _star_density(side, p_star, g):
    rho, _, p = side
    if p_star > p:
        r = p_star / p
        gm = (g - 1) / (g + 1)
        return rho * (r + gm) / (gm * r + 1)
    return rho * (p_star / p) ** (1 / g)


def pressure_function(p, side, g):
    """One-sided wave function ``f_K(p)`` and its derivative."""
    rho, _, pk = side
    if p > pk:
        A = 2.0 / ((g + 1) * rho)
        Bk = (g - 1) / (g + 1) * pk
        sq = math.sqrt(A / (p + Bk))
        return (p - pk) * sq, sq * (1 - 0.5 * (p - pk) / (p + Bk))
    c = math.sqrt(g * pk / rho)
    f = 2 * c / (g - 1) * ((p / pk) ** ((g - 1) / (2 * g)) - 1)
    df = (p / pk) ** (-(g + 1) / (2 * g)) / (rho * c)
    return f, df


def solve_euler_riemann(left, right, gamma: float = 1.4, tol: float = 1e-13,
                        max_iter: int = 100) -> RiemannSolution:
    """Exact Riemann solver: Newton iteration on the pressure function.

    ``left`` and ``right`` are primitive ``(rho, u, p)`` triples.
    """
    g = float(gamma)
    left = tuple(float(v) for v in left)
    right = tuple(float(v) for v in right)
    rl, ul, pl = left
    rr, ur, pr = right
    if min(rl, rr, pl, pr) <= 0:
        raise ValueError("Riemann data must have positive density and pressure")
    cl, cr = math.sqrt(g * pl / rl), math.sqrt(g * pr / rr)
    du = ur - ul
    if 2 * (cl + cr) / (g - 1) <= du:
        raise VacuumError("initial data generate a vacuum")
    # two-rarefaction guess
    z = (g - 1) / (2 * g)
    p = ((cl + cr - 0.5 * (g - 1) * du) / (cl / pl ** z + cr / pr ** z)) ** (1 / z)
    p = max(p, 1e-14 * max(pl, pr))
    it = 0
    for it in range(1, max_iter + 1):
        fl, dfl = pressure_function(p, left, g)
        fr, dfr = pressure_function(p, right, g)
        f = fl + fr + du
        p_new = p - f / (dfl + dfr)
        if p_new <= 0:
            p_new = 0.5 * p
        change = abs(p_new - p) / (0.5 * (p_new + p))
        p = p_new
        if change < tol:
            fl, _ = pressure_function(p, left, g)
            fr, _ = pressure_function(p, right, g)
            if abs(fl + fr + du) < 1e-13 * max(1.0, abs(du), cl, cr):
                break
    else:
        raise RuntimeError("Newton iteration on the star pressure did not converge")
    fl, _ = pressure_function(p, left, g)
    fr, _ = pressure_function(p, right, g)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    waves = (SHOCK if p > pl else RAREFACTION, SHOCK if p > pr else RAREFACTION)
    return RiemannSolution(left, right, g, p, u, waves, it)


def wave_relation_residuals(sol: RiemannSolution) -> dict:
    """Independent checks of the star state against each wave.

    Shocks: mass and momentum Rankine-Hugoniot fluxes in the shock frame.
    Rarefactions: constancy of the outgoing Riemann invariant and of
    ``p / rho^gamma``.
    """
    g = sol.gamma
    out = {}
    speeds = sol.wave_speeds()
    for side, (rho, u, p), rho_s in (("left", sol.left, sol.rho_star_left),
                                     ("right", sol.right, sol.rho_star_right)):
        kind = sol.waves[0 if side == "left" else 1]
        if kind == SHOCK:
            S = speeds[f"{side}_shock"]
            m0 = rho * (u - S)
            m1 = rho_s * (sol.u_star - S)
            mom0 = rho * (u - S) ** 2 + p
            mom1 = rho_s * (sol.u_star - S) ** 2 + sol.p_star
            e0 = (p / (g - 1) + 0.5 * rho * (u - S) ** 2 + p) * (u - S)
            e1 = (sol.p_star / (g - 1) + 0.5 * rho_s * (sol.u_star - S) ** 2 + sol.p_star) * (sol.u_star - S)
            scale = max(abs(mom0), 1.0)
            out[side] = max(abs(m1 - m0), abs(mom1 - mom0), abs(e1 - e0)) / scale
        else:
            c = math.sqrt(g * p / rho)
            cs = math.sqrt(g * sol.p_star / rho_s)
            sign = 1.0 if side == "left" else -1.0
            inv0 = u + sign * 2 * c / (g - 1)
            inv1 = sol.u_star + sign * 2 * cs / (g - 1)
            ent = abs(sol.p_star / rho_s ** g - p / rho ** g) / (p / rho ** g)
            out[side] = max(abs(inv1 - inv0) / max(1.0, abs(inv0)), ent)
    return out


def two_rarefaction_pressure(left, right, gamma: float) -> float:
    """Closed-form star pressure when both waves are rarefactions."""
    g = gamma
    rl, ul, pl = left
    rr, ur, pr = right
    cl, cr = math.sqrt(g * pl / rl), math.sqrt(g * pr / rr)
    z = (g - 1) / (2 * g)
    return ((cl + cr - 0.5 * (g - 1) * (ur - ul)) / (cl / pl ** z + cr / pr ** z)) ** (1 / z)


# ---------------------------------------------------------------- scalar laws
def scalar_exact(kind: str, u_l: float, u_r: float, x, t, a: float = 1.0, x0: float = 0.0):
    """Exact Riemann solution for linear advection or Burgers' equation."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("sampling requires t > 0")
    s = (x - x0) / t
    if kind == "advection":
        return np.where(s < a, u_l, u_r)
    if kind != "burgers":
        raise ValueError(f"unknown scalar law {kind!r}")
    if u_l > u_r:
        return np.where(s < 0.5 * (u_l + u_r), u_l, u_r)
    return np.clip(s, u_l, u_r) if u_l < u_r else np.full_like(s, u_l)


# ------------------------------------------------------------------------ Noh
@dataclass(frozen=True)
class NohSolution:
    gamma: float = 5.0 / 3.0
    rho0: float = 1.0
    u0: float = 1.0
    p0: float = 1e-6

    @property
    def shock_speed(self) -> float:
        return 0.5 * (self.gamma - 1) * self.u0

    @property
    def post_density(self) -> float:
        return self.rho0 * (self.gamma + 1) / (self.gamma - 1)

    @property
    def post_pressure(self) -> float:
        # infinite-strength limit: p = rho0 * u0 * (u0 + D) with D the shock speed
        return self.rho0 * self.u0 * (self.u0 + self.shock_speed)

    def sample(self, x, t, x0: float = 0.0):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float) - x0, np.asarray(t, dtype=float))
        inside = np.abs(x) < self.shock_speed * t
        rho = np.where(inside, self.post_density, self.rho0)
        u = np.where(inside, 0.0, np.where(x < 0, self.u0, -self.u0))
        p = np.where(inside, self.post_pressure, self.p0)
        return rho, u, p


def noh_exact(gamma: float, t: float, x):
    return NohSolution(gamma).sample(x, t)


def noh_jump_residuals(sol: NohSolution) -> float:
    """Rankine-Hugoniot mismatch across the right-moving shock (p0 -> 0 limit)."""
    g = sol.gamma
    S = sol.shock_speed
    # right shock: upstream (x > S t) rho0, u=-u0, p=0; downstream rho*, 0, p*
    ul, rl, pl = 0.0, sol.post_density, sol.post_pressure
    ur, rr, pr = -sol.u0, sol.rho0, 0.0
    def F(r, u, p):
        E = p / (g - 1) + 0.5 * r * u * u
        return np.array([r * u, r * u * u + p, u * (E + p)])
    def U(r, u, p):
        return np.array([r, r * u, p / (g - 1) + 0.5 * r * u * u])
    res = (F(rr, ur, pr) - F(rl, ul, pl)) - S * (U(rr, ur, pr) - U(rl, ul, pl))
    return float(np.max(np.abs(res)))
