"""Conservation-law definitions for the space-time solver.

States are numpy arrays whose last axis holds the conservative variables
(``m = 1`` for scalar laws, ``m = 3`` for 1D Euler: rho, rho*u, rho*e).
All functions broadcast over leading axes.  No positivity floors are
applied anywhere; negative density or pressure is a legal intermediate.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

ADVECTION = "advection"
BURGERS = "burgers"
EULER = "euler"


@dataclass(frozen=True)
class SystemDef:
    """Which conservation law is being solved.

    Parameters
    ----------
    kind : str
        One of ``"advection"``, ``"burgers"`` or ``"euler"``.
    a : float
        Advection speed (advection only).
    gamma : float
        Ratio of specific heats (euler only).
    """

    kind: str
    a: float = 1.0
    gamma: float = 1.4

    def __post_init__(self):
        if self.kind not in (ADVECTION, BURGERS, EULER):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind == EULER and not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1 for the Euler equations")

    @property
    def m(self) -> int:
        return 3 if self.kind == EULER else 1

    @property
    def code(self) -> int:
        """Integer tag used by the compiled kernels."""
        return {ADVECTION: 0, BURGERS: 1, EULER: 2}[self.kind]

    @property
    def param(self) -> float:
        return self.gamma if self.kind == EULER else self.a


def advection(a: float = 1.0) -> SystemDef:
    return SystemDef(ADVECTION, a=a)


def burgers() -> SystemDef:
    return SystemDef(BURGERS)


def euler(gamma: float = 1.4) -> SystemDef:
    return SystemDef(EULER, gamma=gamma)


def _check_density(rho):
    if np.any(np.asarray(rho) == 0.0):
        raise ZeroDivisionError("zero density in conservative state")


def pressure(sys: SystemDef, s) -> np.ndarray:
    """Perfect-gas pressure ``(gamma-1) * (rho*e - (rho*u)**2 / (2*rho))``."""
    if sys.kind != EULER:
        raise ValueError("pressure is only defined for the Euler system")
    s = np.asarray(s, dtype=float)
    rho, mom, ener = s[..., 0], s[..., 1], s[..., 2]
    _check_density(rho)
    return (sys.gamma - 1.0) * (ener - 0.5 * mom * mom / rho)


def physical_flux(sys: SystemDef, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if sys.kind == ADVECTION:
        return sys.a * s
    if sys.kind == BURGERS:
        return 0.5 * s * s
    p = pressure(sys, s)
    rho, mom, ener = s[..., 0], s[..., 1], s[..., 2]
    u = mom / rho
    return np.stack([mom, mom * u + p, u * (ener + p)], axis=-1)


def spacetime_flux_dot_n(sys: SystemDef, s, n) -> np.ndarray:
    """Space-time flux ``F = (f(U), U)`` contracted with ``n = (n_x, n_t)``.

    ``n`` may carry leading axes matching ``s`` (without the component
    axis); it need not be normalized.
    """
    s = np.asarray(s, dtype=float)
    n = np.asarray(n, dtype=float)
    nx = n[..., 0, None]
    nt = n[..., 1, None]
    return physical_flux(sys, s) * nx + s * nt


def jump_flux(sys: SystemDef, s_left, s_right, n) -> np.ndarray:
    return spacetime_flux_dot_n(sys, s_right, n) - spacetime_flux_dot_n(sys, s_left, n)


def average_flux(sys: SystemDef, s_left, s_right, n) -> np.ndarray:
    return 0.5 * (spacetime_flux_dot_n(sys, s_left, n) + spacetime_flux_dot_n(sys, s_right, n))


def primitive_to_conservative(sys: SystemDef, rho, v=None, p=None) -> np.ndarray:
    """Map primitives to conservative variables.

    For scalar systems the single argument is returned as a length-1 state.
    """
    if sys.kind != EULER:
        return np.asarray(rho, dtype=float)[..., None]
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    ener = p / (sys.gamma - 1.0) + 0.5 * rho * v * v
    return np.stack(np.broadcast_arrays(rho, rho * v, ener), axis=-1)


def conservative_to_primitive(sys: SystemDef, s):
    s = np.asarray(s, dtype=float)
    if sys.kind != EULER:
        return s[..., 0]
    rho = s[..., 0]
    _check_density(rho)
    return rho, s[..., 1] / rho, pressure(sys, s)


def internal_energy(sys: SystemDef, s) -> np.ndarray:
    """Specific internal energy ``p / ((gamma-1) rho)``."""
    rho, _, p = conservative_to_primitive(sys, s)
    return p / ((sys.gamma - 1.0) * rho)


def entropy_production(sys: SystemDef, s, s_ref):
    """Entropy change ``ln(p/rho^gamma) - ln(p_ref/rho_ref^gamma)``.

    Returns NaN (never raises) wherever either state has nonpositive
    density or pressure, so the diagnostic can be plotted for any iterate.
    """
    if sys.kind != EULER:
        raise ValueError("entropy production is only defined for the Euler system")
    s = np.asarray(s, dtype=float)
    s_ref = np.asarray(s_ref, dtype=float)
    g = sys.gamma
    with np.errstate(divide="ignore", invalid="ignore"):
        rho, rho_r = s[..., 0], s_ref[..., 0]
        p = np.where(rho != 0.0, (g - 1.0) * (s[..., 2] - 0.5 * s[..., 1] ** 2 / rho), np.nan)
        p_r = np.where(rho_r != 0.0,
                       (g - 1.0) * (s_ref[..., 2] - 0.5 * s_ref[..., 1] ** 2 / rho_r), np.nan)
        ok = (rho > 0) & (p > 0) & (rho_r > 0) & (p_r > 0)
        val = (np.log(np.where(ok, p, 1.0)) - g * np.log(np.where(ok, rho, 1.0))
               - np.log(np.where(ok, p_r, 1.0)) + g * np.log(np.where(ok, rho_r, 1.0)))
    out = np.where(ok, val, np.nan)
    return float(out) if out.ndim == 0 else out


def unit_normal(dx: float, dt: float):
    """Unit left-to-right normal of a face running ``(dx, dt)`` upward in time."""
    length = math.hypot(dx, dt)
    if length == 0.0:
        return np.array([0.0, 0.0]), 0.0
    return np.array([dt, -dx]) / length, length
