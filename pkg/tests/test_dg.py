import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdgice.dg import (Basis, eval_basis, eval_basis_grad, eval_solution, gauss_rule_1d,
                       gauss_rule_quad, mass_matrix, monomial_exponents, physical_gradient,
                       points_for_degree)
from mdgice.mesh import map_jacobian_det

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
FAN = np.array([[0.0, 0.0], [0.0, 0.0], [0.3, 0.2], [-0.1, 0.2]])


@pytest.mark.parametrize("p, kind, n", [(1, "P", 3), (2, "P", 6), (3, "P", 10),
                                        (1, "Q", 4), (2, "Q", 9), (3, "Q", 16)])
def test_basis_sizes(p, kind, n):
    assert Basis(p, kind).N == n


def test_raw_p1_basis_at_centroid():
    assert np.array_equal(eval_basis(Basis(1, "P", orthonormal=False), 0.0, 0.0), [1, 0, 0])


def test_raw_q1_gradient_of_xi_eta():
    b = Basis(1, "Q", orthonormal=False)
    k = list(b.exps).index((1, 1))
    assert np.allclose(eval_basis_grad(b, 1.0, 1.0)[k], [1.0, 1.0])


def test_unsupported_degree():
    with pytest.raises(ValueError):
        Basis(4)


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("kind", ["P", "Q"])
def test_gradients_match_central_differences(p, kind):
    b = Basis(p, kind)
    rng = np.random.default_rng(p)
    h = 1e-6
    for xi, eta in rng.uniform(-1, 1, (10, 2)):
        g = eval_basis_grad(b, xi, eta)
        gx = (eval_basis(b, xi + h, eta) - eval_basis(b, xi - h, eta)) / (2 * h)
        ge = (eval_basis(b, xi, eta + h) - eval_basis(b, xi, eta - h)) / (2 * h)
        assert np.max(np.abs(g[:, 0] - gx)) < 1e-8
        assert np.max(np.abs(g[:, 1] - ge)) < 1e-8


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("kind", ["P", "Q"])
def test_projection_reproduces_monomials(p, kind):
    b = Basis(p, kind)
    pts = np.random.default_rng(0).uniform(-1, 1, (7, 2))
    for a, c in monomial_exponents(p, kind):
        f = lambda xi, eta: xi ** a * eta ** c
        coeffs = b.project(f)
        assert np.allclose(b.eval(pts[:, 0], pts[:, 1]) @ coeffs[:, 0], f(pts[:, 0], pts[:, 1]),
                           atol=1e-12)


def test_orthonormal_on_reference_square():
    b = Basis(3, "Q")
    assert np.allclose(mass_matrix(b, np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float)),
                       np.eye(b.N), atol=1e-13)


def test_gauss_rules():
    assert gauss_rule_1d(1).integrate(gauss_rule_1d(1).points) == 0.0
    r2 = gauss_rule_1d(2)
    assert abs(r2.integrate(r2.points ** 2) - 2 / 3) < 1e-15


@pytest.mark.parametrize("n", range(1, 7))
def test_gauss_rule_exact_to_degree_2n_minus_1(n):
    r = gauss_rule_1d(n)
    for k in range(2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(r.integrate(r.points ** k) - exact) < 1e-13


def test_quad_rule_exact_for_volume_degree():
    for p in (1, 2, 3):
        n = points_for_degree(2 * p)
        r = gauss_rule_quad(n)
        x, y = r.points[:, 0], r.points[:, 1]
        for a in range(2 * p + 1):
            for c in range(2 * p + 1 - a):
                ex = (0.0 if a % 2 else 2 / (a + 1)) * (0.0 if c % 2 else 2 / (c + 1))
                assert abs(r.integrate(x ** a * y ** c) - ex) < 1e-13


def test_constant_solution_has_zero_gradient():
    b = Basis(2)
    coeffs = b.constant_coeffs([3.0])
    g = physical_gradient(b, SQUARE, 0.2, -0.4)
    assert np.allclose(g.T @ coeffs, 0.0, atol=1e-14)
    assert np.allclose(eval_solution(b, coeffs, 0.3, 0.9), [3.0])


def test_linear_in_x_gradient_scales_with_width():
    h = 0.25
    corners = np.array([[0, 0], [h, 0], [h, h], [0, h]], float)
    b = Basis(1, "P", orthonormal=False)
    k = list(b.exps).index((1, 0))
    g = physical_gradient(b, corners, 0.1, 0.2)
    assert np.allclose(g[k], [2 / h, 0.0])


def test_p2_reproduces_x_squared_on_a_quad():
    corners = np.array([[0.0, 0.0], [0.4, 0.0], [0.5, 0.3], [0.1, 0.3]])
    b = Basis(2, "P")

    def xsq(xi, eta):
        w = np.stack([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                      (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)], -1) / 4
        return (w @ corners[:, 0]) ** 2

    # x is affine in xi on a parallelogram, so x^2 lies in P2
    coeffs = b.project(xsq)
    pts = np.random.default_rng(1).uniform(-1, 1, (9, 2))
    assert np.allclose(b.eval(pts[:, 0], pts[:, 1]) @ coeffs[:, 0], xsq(pts[:, 0], pts[:, 1]),
                       atol=1e-12)


def test_singular_map_signalled():
    with pytest.raises(ZeroDivisionError):
        physical_gradient(Basis(1), FAN, 0.0, -1.0)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_mass_matrix_spd(p):
    corners = np.array([[0.0, 0.0], [0.3, 0.0], [0.5, 0.2], [-0.05, 0.2]])
    M = mass_matrix(Basis(p, "P"), corners)
    assert np.allclose(M, M.T)
    assert np.linalg.eigvalsh(M).min() > 0


@pytest.mark.parametrize("p", [1, 2, 3])
def test_fan_element_interior_gauss_points_have_positive_det(p):
    for n in (points_for_degree(2 * p + 2), points_for_degree(2 * p + 1)):
        r = gauss_rule_quad(n)
        assert np.all(map_jacobian_det(FAN, r.points[:, 0], r.points[:, 1]) > 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.sampled_from(["P", "Q"]),
       st.lists(st.floats(-2, 2), min_size=16, max_size=16))
def test_eval_solution_is_linear_combination(p, kind, vals):
    b = Basis(p, kind)
    c = np.array(vals[:b.N])[:, None]
    xi, eta = 0.37, -0.61
    mono = np.array([xi ** a * eta ** k for a, k in b.exps])
    direct = float(c[:, 0] @ (b.coef @ mono))
    assert eval_solution(b, c, xi, eta)[0] == pytest.approx(direct, abs=1e-13)
