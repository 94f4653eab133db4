import numpy as np
import pytest

from mdgice.lm import LAMBDA_MAX, LAMBDA_MIN, LmConfig, minimize
from mdgice.problems import builtin, initialize_unknowns
from mdgice.solver import dof_scaling, make_disc, run


def quad_residual(u):
    return np.array([u[0] - 3.0, 2.0 * (u[0] - 3.0)])


def quad_jacobian(u, r):
    return np.array([[1.0], [2.0]])


def rosenbrock(u):
    return np.array([10.0 * (u[1] - u[0] ** 2), 1.0 - u[0]])


def rosenbrock_jac(u, r):
    return np.array([[-20.0 * u[0], 10.0], [-1.0, 0.0]])


def test_quadratic_converges_quickly():
    u, rep = minimize(quad_residual, quad_jacobian, np.array([0.0]))
    assert rep.converged and rep.iterations <= 10
    assert abs(u[0] - 3.0) < 1e-10


def test_zero_residual_start_takes_no_steps():
    u, rep = minimize(quad_residual, quad_jacobian, np.array([3.0]))
    assert rep.iterations == 0 and rep.converged
    assert len(rep.history) == 1 and u[0] == 3.0


def test_rosenbrock_valley():
    u, rep = minimize(rosenbrock, rosenbrock_jac, np.array([-1.2, 1.0]))
    assert rep.converged
    assert np.allclose(u, [1.0, 1.0], atol=1e-9)


def test_norms_monotone_and_lambda_bounded():
    _, rep = minimize(rosenbrock, rosenbrock_jac, np.array([-1.2, 1.0]))
    norms = [h["norm"] for h in rep.history]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert all(LAMBDA_MIN <= h["lambda"] <= LAMBDA_MAX for h in rep.history)
    assert [h["iter"] for h in rep.history] == list(range(rep.iterations + 1))


def test_column_scaling_invariance():
    s = np.array([1e3, 1e-2])
    cfg = LmConfig(eps_d=0.0)
    ua, ra = minimize(rosenbrock, rosenbrock_jac, np.array([-1.2, 1.0]), cfg)
    scaled = lambda v: rosenbrock(s * v)
    scaled_jac = lambda v, r: rosenbrock_jac(s * v, r) * s[None, :]
    ub, rb = minimize(scaled, scaled_jac, np.array([-1.2, 1.0]) / s, cfg)
    assert ra.iterations == rb.iterations
    assert np.allclose([h["norm"] for h in ra.history], [h["norm"] for h in rb.history],
                       rtol=1e-8, atol=1e-14)
    assert np.allclose(ua, s * ub, atol=1e-10)


def test_nonfinite_trial_is_rejected_not_raised():
    # the undamped Newton step on atan overshoots into the region where R is NaN
    def res(u):
        if u[0] > 3.5:
            return np.array([np.nan])
        return np.arctan(u - 3.0)

    jac = lambda u, r: np.array([[1.0 / (1.0 + (u[0] - 3.0) ** 2)]])
    u, rep = minimize(res, jac, np.array([0.0]), LmConfig(lambda0=1e-14))
    assert rep.rejected > 0
    assert rep.converged and abs(u[0] - 3.0) < 1e-10


def test_nonfinite_start_reported():
    _, rep = minimize(lambda u: np.array([np.inf]), lambda u, r: np.eye(1), np.array([0.0]))
    assert not rep.converged and rep.reason == "nonfinite residual"


def test_inadmissible_steps_are_rejected():
    # steps may not push u past 2, so the iteration stalls below the root
    u, rep = minimize(quad_residual, quad_jacobian, np.array([0.0]),
                      LmConfig(max_iter=50), admissible=lambda new, old: new[0] <= 2.0)
    assert u[0] <= 2.0
    assert rep.norm > 1.0


def test_config_validation_and_update():
    with pytest.raises(ValueError):
        LmConfig(lambda_up=0.5)
    with pytest.raises(ValueError):
        LmConfig(tol_r=0.0)
    with pytest.raises(KeyError):
        LmConfig().updated(nope=1)
    assert LmConfig().updated(max_iter="7").max_iter == 7


def test_burgers_lemma_from_perturbed_node():
    spec = builtin("lemma2_burgers")
    res = run(spec, 1, mesh_management=False)
    xt = res.last.xt
    assert res.converged and res.last.report.norm < 1e-10
    assert abs(xt[2] - 0.2) < 1e-10


def test_solver_is_deterministic():
    spec = builtin("lemma1_advection")
    a = run(spec, 2, mesh_management=False)
    b = run(spec, 2, mesh_management=False)
    assert np.array_equal(a.last.u, b.last.u)
    assert a.history == b.history


def test_quadratic_root_to_machine_precision():
    u, _ = minimize(quad_residual, quad_jacobian, np.array([0.0]))
    assert abs(u[0] - 3.0) < 1e-12


def test_gauss_newton_limit_is_quadratic():
    # R = u^2 - 2 with vanishing damping: e_{k+1} ~ e_k^2 / (2 sqrt 2)
    res = lambda u: np.array([u[0] ** 2 - 2.0])
    jac = lambda u, r: np.array([[2.0 * u[0]]])
    iterates = []
    minimize(res, jac, np.array([3.0]), LmConfig(lambda0=LAMBDA_MIN, eps_d=0.0, tol_r=1e-15),
             monitor=lambda u: iterates.append(u[0]) or {})
    err = np.abs(np.array(iterates) - np.sqrt(2.0))
    err = err[err > 1e-12]
    ratios = err[1:] / err[:-1] ** 2
    assert np.allclose(ratios[-2:], 1 / (2 * np.sqrt(2.0)), rtol=0.1)


def lemma2_perturbed():
    spec = builtin("lemma2_burgers")
    disc = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    coeffs, xt = disc.unpack(u)
    xt = xt.copy()
    xt[2] = 0.2 + 0.1  # exact shock node off by 0.1
    return spec, disc, disc.pack(coeffs, xt)


def test_burgers_lemma_from_node_off_by_a_tenth():
    _, disc, u0 = lemma2_perturbed()
    u, rep = minimize(disc.residual, lambda u, r: disc.jacobian(u, r0=r), u0)
    assert rep.converged
    assert abs(disc.unpack(u)[1][2] - 0.2) < 1e-10


def test_scaling_does_not_change_lemma_solution():
    spec, disc, u0 = lemma2_perturbed()
    jac = lambda u, r: disc.jacobian(u, r0=r)
    ua, _ = minimize(disc.residual, jac, u0)
    ub, _ = minimize(disc.residual, jac, u0, scaling=dof_scaling(disc, spec, LmConfig()))
    # nodes 1 and 3 sit inside constant regions, where every placement is an
    # exact solution; the flow field and the shock node are determined
    determined = np.r_[np.arange(disc.n_flow), disc.n_flow + 1]
    assert np.max(np.abs(ua[determined] - ub[determined])) < 1e-9
    for v in (ua, ub):
        xt = disc.unpack(v)[1]
        assert xt[0] < xt[1] < xt[2] < xt[3] < xt[4]


def test_dof_scaling_unit_and_noh_clamp():
    spec = builtin("lemma1_advection").with_(left=(1.0,), right=(-1.0,))
    disc = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition)
    assert np.all(dof_scaling(disc, spec, LmConfig())[:disc.n_flow] == 1.0)
    noh = builtin("noh")
    disc = make_disc(noh, noh.build_mesh(), 1, noh.initial_condition)
    ref = dof_scaling(disc, noh, LmConfig())[:disc.N * disc.m].reshape(disc.N, disc.m)[0]
    # rho 1, momentum 1, energy 0.5 + 1.5e-6: nothing hits the 1e-2 floor
    assert np.allclose(ref, [1.0, 1.0, 0.5 + 1.5e-6])
    spec = noh.with_(left=(1.0, 0.0, 1e-6), right=(1.0, 0.0, 1e-6))
    ref = dof_scaling(disc, spec, LmConfig())[:3]
    assert np.allclose(ref, [1.0, 1e-2, 1e-2])
    assert np.all(dof_scaling(disc, noh, LmConfig())[disc.n_flow:] == noh.x_hi - noh.x_lo)


@pytest.mark.parametrize("name", ["lemma1_advection", "lemma2_burgers", "sod", "noh"])
def test_accepted_norms_nonincreasing_on_problems(name):
    res = run(builtin(name), 1, LmConfig(max_iter=30), mesh_management=False)
    norms = [h["norm"] for h in res.history]
    assert all(b <= a for a, b in zip(norms, norms[1:]))
