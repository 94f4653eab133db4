"""Polynomial bases and Gauss quadrature on the reference square.

Basis functions live in reference coordinates ``(xi, eta) in [-1, 1]^2``
and are carried to physical space through the bilinear element map.
On a fan element (collapsed bottom edge) ``xi`` is an affine function of
``x / t`` measured from the fan point, so a basis that is polynomial in
``xi`` represents self-similar states directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SUPPORTED_DEGREES = (0, 1, 2, 3)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq,) for 1D, (nq, 2) for the square
    weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=None)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_rule_1d(npts: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``npts`` points on [-1, 1] (exact to degree 2n-1)."""
    if npts < 1:
        raise ValueError("a Gauss rule needs at least one point")
    x, w = _leggauss(npts)
    return QuadratureRule(x.copy(), w.copy())


def gauss_rule_quad(npts: int) -> QuadratureRule:
    """Tensor-product Gauss rule on the reference square, ``npts**2`` points."""
    r = gauss_rule_1d(npts)
    xi, eta = np.meshgrid(r.points, r.points, indexing="ij")
    w = np.outer(r.weights, r.weights)
    return QuadratureRule(np.column_stack([xi.ravel(), eta.ravel()]), w.ravel())


def points_for_degree(degree: int) -> int:
    """Smallest Gauss point count integrating degree ``degree`` exactly."""
    return max(1, (degree + 2) // 2)


def monomial_exponents(p: int, kind: str = "P") -> list[tuple[int, int]]:
    """Exponent pairs ``(a, b)`` of xi^a eta^b, ordered by total degree."""
    if kind == "P":
        pairs = [(a, b) for a in range(p + 1) for b in range(p + 1) if a + b <= p]
    elif kind == "Q":
        pairs = [(a, b) for a in range(p + 1) for b in range(p + 1)]
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    return sorted(pairs, key=lambda ab: (ab[0] + ab[1], -ab[0]))


def _monomials(exps, xi, eta):
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.stack([xi ** a * eta ** b for a, b in exps], axis=-1)


def _monomial_grads(exps, xi, eta):
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    dxi = [a * xi ** max(a - 1, 0) * eta ** b if a else np.zeros_like(xi * eta) for a, b in exps]
    deta = [b * xi ** a * eta ** max(b - 1, 0) if b else np.zeros_like(xi * eta) for a, b in exps]
    return np.stack(dxi, axis=-1), np.stack(deta, axis=-1)


@dataclass(frozen=True)
class Basis:
    """Modal basis of degree ``p`` on the reference square.

    ``kind="P"`` spans monomials of total degree <= p, ``kind="Q"`` the
    tensor space of degree <= p in each variable.  With ``orthonormal``
    the monomials are Gram-Schmidt orthonormalized against the reference
    measure; the first function is then the constant 1/2.
    """

    p: int
    kind: str = "Q"
    orthonormal: bool = True
    exps: tuple = field(init=False, repr=False)
    coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.p not in SUPPORTED_DEGREES:
            raise ValueError(f"unsupported polynomial degree {self.p}")
        exps = tuple(monomial_exponents(self.p, self.kind))
        object.__setattr__(self, "exps", exps)
        n = len(exps)
        if self.orthonormal:
            rule = gauss_rule_quad(self.p + 1)
            V = _monomials(exps, rule.points[:, 0], rule.points[:, 1])
            mass = V.T @ (rule.weights[:, None] * V)
            # Cholesky is Gram-Schmidt in matrix form: B = L^{-1} m
            L = np.linalg.cholesky(mass)
            coef = np.linalg.solve(L, np.eye(n))
        else:
            coef = np.eye(n)
        object.__setattr__(self, "coef", coef)

    @property
    def N(self) -> int:
        return len(self.exps)

    def eval(self, xi, eta) -> np.ndarray:
        """Values of all basis functions, shape ``(..., N)``."""
        return _monomials(self.exps, xi, eta) @ self.coef.T

    def eval_grad(self, xi, eta) -> np.ndarray:
        """Reference gradients, shape ``(..., N, 2)``."""
        gx, ge = _monomial_grads(self.exps, xi, eta)
        return np.stack([gx @ self.coef.T, ge @ self.coef.T], axis=-1)

    def project(self, func, npts: int | None = None) -> np.ndarray:
        """L2 projection (reference measure) of ``func(xi, eta) -> (..., m)``."""
        rule = gauss_rule_quad(npts or self.p + 2)
        xi, eta = rule.points[:, 0], rule.points[:, 1]
        B = self.eval(xi, eta)
        vals = np.asarray(func(xi, eta), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        mass = B.T @ (rule.weights[:, None] * B)
        rhs = B.T @ (rule.weights[:, None] * vals)
        return np.linalg.solve(mass, rhs)

    def constant_coeffs(self, state) -> np.ndarray:
        """Coefficients (N, m) of the constant function equal to ``state``."""
        state = np.atleast_1d(np.asarray(state, dtype=float))
        c = np.zeros((self.N, state.size))
        # the first function is constant for every supported variant
        b0 = self.eval(0.0, 0.0)[0]
        c[0] = state / b0
        return c


def eval_basis(basis: Basis, xi, eta) -> np.ndarray:
    return basis.eval(xi, eta)


def eval_basis_grad(basis: Basis, xi, eta) -> np.ndarray:
    return basis.eval_grad(xi, eta)


def eval_solution(basis: Basis, coeffs, xi, eta) -> np.ndarray:
    """``U_h = sum_i U_i B_i`` for one element's ``(N, m)`` coefficients."""
    return basis.eval(xi, eta) @ np.asarray(coeffs)


def physical_gradient(basis: Basis, corners, xi, eta) -> np.ndarray:
    """Per-basis ``(d/dx, d/dt)`` at one reference point of a bilinear quad.

    ``corners`` is a ``(4, 2)`` array ordered bottom-left, bottom-right,
    top-right, top-left.
    """
    from .mesh import map_jacobian

    J = map_jacobian(corners, xi, eta)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    if det == 0.0:
        raise ZeroDivisionError("singular element map at the requested point")
    g = basis.eval_grad(xi, eta)  # (N, 2) reference gradients
    return g @ np.linalg.inv(J)


def mass_matrix(basis: Basis, corners, npts: int | None = None) -> np.ndarray:
    from .mesh import map_jacobian_det

    rule = gauss_rule_quad(npts or basis.p + 2)
    xi, eta = rule.points[:, 0], rule.points[:, 1]
    B = basis.eval(xi, eta)
    det = map_jacobian_det(corners, xi, eta)
    return B.T @ ((rule.weights * det)[:, None] * B)
