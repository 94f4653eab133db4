import numpy as np
import pytest

from mdgice.dg import Basis
from mdgice.mesh import build_slab
from mdgice.physics import advection, burgers, euler, primitive_to_conservative
from mdgice.problems import BUILTINS, builtin, initialize_unknowns
from mdgice.residual import ICE_TOP, Discretization
from mdgice.solver import make_disc


def riemann_config(name, p, x_top):
    """Exact two-state configuration of a lemma problem with interface top at ``x_top``."""
    spec = builtin(name)
    disc = make_disc(spec, spec.build_mesh(), p, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    coeffs, xt = disc.unpack(u)
    xt = xt.copy()
    xt[1], xt[2], xt[3] = -0.25, x_top, 0.45
    return disc, disc.pack(coeffs, xt)


def test_unknown_and_residual_counts():
    spec = builtin("sod")
    for p, N in ((1, 4), (2, 9), (3, 16)):
        disc = make_disc(spec, spec.build_mesh(), p, spec.initial_condition)
        assert disc.n_unknowns == N * 3 * 8 + 7
        assert disc.n_residuals > disc.n_unknowns


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_constant_state_is_exact(backend):
    sysdef = euler(1.4)
    s = primitive_to_conservative(sysdef, 0.8, 0.3, 1.2)
    mesh = build_slab(np.linspace(0, 1, 5), 0.0, 0.3)
    disc = Discretization(sysdef, Basis(2), mesh, lambda x: np.broadcast_to(s, x.shape + (3,)),
                          s, s, backend=backend)
    coeffs = np.stack([disc.basis.constant_coeffs(s)] * disc.E)
    assert np.max(np.abs(disc.residual(disc.pack(coeffs, mesh.xt)))) < 1e-14


@pytest.mark.parametrize("p", [1, 2, 3])
def test_lemma1_advection_exact(p):
    disc, u = riemann_config("lemma1_advection", p, 0.0 + 1.0 * 0.2)
    assert np.max(np.abs(disc.residual(u))) < 1e-12


@pytest.mark.parametrize("p", [1, 2, 3])
def test_lemma2_burgers_exact(p):
    disc, u = riemann_config("lemma2_burgers", p, 0.0 + 0.5 * (2.0 + 0.0) * 0.2)
    assert np.max(np.abs(disc.residual(u))) < 1e-12


def test_ice_residual_zero_for_continuous_state_and_linear_in_offset():
    disc, u = riemann_config("lemma2_burgers", 1, 0.2)
    assert np.max(np.abs(disc.ice_node_residual(u, 2))) < 1e-14
    k = disc.n_flow + 1  # top node 2
    vals = []
    for d in (1e-2, 1e-3, 1e-4):
        v = u.copy()
        v[k] += d
        vals.append(np.abs(disc.ice_node_residual(v, 2)).max())
    r1, r2 = vals[0] / vals[1], vals[1] / vals[2]
    assert abs(r1 - 10) < 0.2 and abs(r2 - 10) < 0.02
    # a smooth (continuous) configuration has zero ICE residual at every node
    sysdef = burgers()
    mesh = build_slab(np.linspace(0, 1, 4), 0, 0.1)
    disc2 = Discretization(sysdef, Basis(1), mesh, lambda x: np.full(x.shape + (1,), 0.7),
                           [0.7], [0.7])
    c = np.stack([disc2.basis.constant_coeffs([0.7])] * 3)
    r = disc2.residual(disc2.pack(c, np.array([0, 0.4, 0.6, 1.0])))
    assert np.max(np.abs(disc2.split(r)[1])) < 1e-15


def test_ice_top_only_variant_counts():
    spec = builtin("sod")
    d_all = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition)
    d_top = Discretization(spec.system, spec.make_basis(1), spec.build_mesh(),
                           spec.initial_condition, spec.left_state, spec.right_state,
                           ice_nodes=ICE_TOP)
    assert d_all.n_ice_rows == 2 * d_top.n_ice_rows == 2 * 7 * 3


def dense_structure(disc, u):
    J = disc.jacobian_dense_fd(u)
    return np.abs(J) > 0


@pytest.mark.parametrize("name", ["sod", "lemma2_burgers", "noh"])
def test_jacobian_sparsity_contains_dense_structure(name):
    spec = builtin(name)
    disc = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    u = u + 1e-3 * np.random.default_rng(0).standard_normal(u.size) * (np.abs(u) + 0.1)
    S = disc.sparsity().toarray()
    assert not np.any(dense_structure(disc, u) & ~S)


def test_flow_column_touches_only_neighbours():
    spec = builtin("sod")
    disc = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition)
    e, nb = 4, disc.N * disc.m
    rows = disc.column_rows(e * nb)
    dg_rows = rows[rows < disc.n_flow] // nb
    assert set(dg_rows) == {3, 4, 5}
    # ICE rows only for faces e and e+1
    per = 2 * disc.m
    ice = (rows[rows >= disc.n_flow] - disc.n_flow) // per + 1
    assert set(ice) == {4, 5}


def test_geometry_column_perturbs_sharing_elements_only():
    spec = builtin("sod")
    disc = make_disc(spec, spec.build_mesh(), 2, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    u[:disc.n_flow] *= 1 + 0.1 * np.random.default_rng(1).standard_normal(disc.n_flow)
    j = disc.n_flow + 2  # top node 3
    v = u.copy()
    v[j] += 1e-4
    R0, _ = disc.raw(u)
    R1, _ = disc.raw(v)
    changed = np.nonzero(np.abs(R1 - R0).reshape(disc.E, -1).max(axis=1) > 0)[0]
    assert set(changed) <= {2, 3} and len(changed) > 0


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_fd_jacobian_matches_directional_derivative(name):
    spec = builtin(name)
    disc = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(u.size)
    v /= np.linalg.norm(v)
    h = 1e-6
    J = disc.jacobian(u)
    dd = (disc.residual(u + h * v) - disc.residual(u)) / h
    assert np.linalg.norm(J @ v - dd) <= 1e-5 * max(np.linalg.norm(dd), 1.0)


def test_boundary_flux_balance_of_constant_state_is_zero():
    sysdef = advection(0.5)
    mesh = build_slab(np.linspace(0, 1, 4), 0.0, 0.2)
    disc = Discretization(sysdef, Basis(1), mesh, lambda x: np.full(x.shape + (1,), 2.0),
                          [2.0], [2.0])
    c = np.stack([disc.basis.constant_coeffs([2.0])] * 3)
    assert abs(disc.boundary_flux_balance(disc.pack(c, mesh.xt))[0]) < 1e-14


def test_boundary_flux_balance_equals_sum_of_mean_residuals():
    spec = builtin("sod")
    disc = make_disc(spec, spec.build_mesh(), 2, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    u[:disc.n_flow] *= 1 + 0.05 * np.random.default_rng(2).standard_normal(disc.n_flow)
    R, _ = disc.raw(u)
    b0 = disc.basis.eval(0.0, 0.0)[0]
    assert np.allclose(disc.boundary_flux_balance(u), b0 * R[:, 0].sum(axis=0))


def test_degenerate_geometry_gives_finite_residuals():
    spec = builtin("sod")
    disc = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    u[disc.n_flow:] = 0.0  # every interior top node on the fan point
    assert np.all(np.isfinite(disc.residual(u)))
