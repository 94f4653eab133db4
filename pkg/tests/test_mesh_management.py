import numpy as np
import pytest

from mdgice import mesh_management as mm
from mdgice.mesh import element_area
from mdgice.problems import builtin, initialize_unknowns
from mdgice.solver import make_disc


def sod_state(p=1):
    spec = builtin("sod")
    disc = make_disc(spec, spec.build_mesh(), p, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    rng = np.random.default_rng(0)
    u[:disc.n_flow] *= 1 + 0.01 * rng.standard_normal(disc.n_flow)
    return disc, u


def with_top(disc, u, xt):
    coeffs, _ = disc.unpack(u)
    return disc.pack(coeffs, xt)


def test_initial_mesh_is_healthy():
    disc, u = sod_state()
    rep = mm.detect_degenerate(disc, u)
    assert set(rep.flags) == {mm.HEALTHY}


def test_collapsed_fan_cell_is_flagged():
    disc, u = sod_state()
    xt = disc.mesh.xt.copy()
    xt[4] = xt[3]  # element 3 (a fan cell) loses its top edge
    rep = mm.detect_degenerate(disc, with_top(disc, u, xt))
    assert np.nonzero(rep.collapsed)[0].tolist() == [3]


def test_tangled_cell_is_flagged():
    disc, u = sod_state()
    xt = disc.mesh.xt.copy()
    xt[1] = xt[0] - 0.1  # element 0 inverted at the top
    rep = mm.detect_degenerate(disc, with_top(disc, u, xt))
    assert rep.collapsed[0] and rep.tangled[0]


def test_removal_of_one_fan_cell():
    disc, u = sod_state(2)
    xt = disc.mesh.xt.copy()
    xt[4] = xt[3]
    u = with_top(disc, u, xt)
    rep = mm.detect_degenerate(disc, u)
    new_disc, new_u, remap = mm.remove_collapsed(disc, u, rep)
    assert new_disc.E == disc.E - 1
    assert new_disc.n_geom == disc.n_geom - 1
    assert remap["element"].tolist() == [0, 1, 2, -1, 3, 4, 5, 6]
    assert remap["merged_nodes"] == [[3, 4]]
    assert remap["node"].tolist() == [0, 1, 2, 3, 3, 4, 5, 6, 7]
    old_c, _ = disc.unpack(u)
    new_c, new_xt = new_disc.unpack(new_u)
    assert np.array_equal(new_c, old_c[[0, 1, 2, 4, 5, 6, 7]])
    assert new_xt[3] == xt[3]
    assert not mm.detect_degenerate(new_disc, new_u).collapsed.any()


def test_removal_preserves_remaining_residuals():
    disc, u = sod_state(1)
    xt = disc.mesh.xt.copy()
    xt[4] = xt[3]
    u = with_top(disc, u, xt)
    R_old, _ = disc.raw(u)
    new_disc, new_u, _ = mm.remove_collapsed(disc, u, mm.detect_degenerate(disc, u))
    R_new, _ = new_disc.raw(new_u)
    # cells not touching the removed one see identical geometry and neighbours
    assert np.allclose(R_new[[0, 1, 4, 5, 6]], R_old[[0, 1, 5, 6, 7]], atol=1e-13)


def test_collapse_of_plain_cell_is_refused():
    disc, u = sod_state()
    xt = disc.mesh.xt.copy()
    xt[8 - 1] = xt[8]  # rightmost plain cell
    u = with_top(disc, u, xt)
    rep = mm.detect_degenerate(disc, u)
    assert rep.collapsed[7]
    with pytest.raises(mm.RemovalRefused):
        mm.remove_collapsed(disc, u, rep)


def test_two_adjacent_fan_cells_merge_into_one_node():
    disc, u = sod_state()
    xt = disc.mesh.xt.copy()
    xt[4] = xt[5] = xt[3]
    u = with_top(disc, u, xt)
    new_disc, _, remap = mm.remove_collapsed(disc, u, mm.detect_degenerate(disc, u))
    assert new_disc.E == 6
    assert remap["merged_nodes"] == [[3, 4, 5]]


def test_no_collapsed_cells_is_identity():
    disc, u = sod_state()
    new_disc, new_u, remap = mm.remove_collapsed(disc, u, mm.detect_degenerate(disc, u))
    assert new_disc is disc and np.array_equal(new_u, u)
    assert remap["element"].tolist() == list(range(8)) and remap["merged_nodes"] == []


def test_removal_preserves_signed_area():
    disc, u = sod_state()
    xt = disc.mesh.xt.copy()
    xt[4] = xt[3] + 1e-10  # nearly collapsed: area below the threshold
    u = with_top(disc, u, xt)
    rep = mm.detect_degenerate(disc, u)
    new_disc, new_u, _ = mm.remove_collapsed(disc, u, rep)
    area = lambda d, v: sum(element_area(d.mesh, e, d.unpack(v)[1]) for e in range(d.E))
    assert abs(area(new_disc, new_u) - area(disc, u)) <= rep.eps_c * disc.mesh.dt


def test_residual_change_bounded_by_removed_cells():
    disc, u = sod_state(2)
    xt = disc.mesh.xt.copy()
    xt[4] = xt[3]
    u = with_top(disc, u, xt)
    R_old, _ = disc.raw(u)
    new_disc, new_u, remap = mm.remove_collapsed(disc, u, mm.detect_degenerate(disc, u))
    R_new, _ = new_disc.raw(new_u)
    keep = remap["element"] >= 0
    removed = np.linalg.norm(R_old[~keep])
    change = abs(np.linalg.norm(R_new) - np.linalg.norm(R_old[keep]))
    assert change <= 10 * removed + 1e-14


def test_noh_mesh_removal_of_one_of_four():
    spec = builtin("noh")
    disc = make_disc(spec, spec.build_mesh(), 1, spec.initial_condition)
    u = initialize_unknowns(spec, disc)
    xt = disc.mesh.xt.copy()
    xt[1] = xt[2] = 0.0
    u = with_top(disc, u, xt)
    new_disc, new_u, remap = mm.remove_collapsed(disc, u, mm.detect_degenerate(disc, u))
    assert new_disc.E == 3
    assert new_disc.n_unknowns == disc.n_unknowns - disc.N * disc.m - 1
    kept = np.nonzero(remap["element"] >= 0)[0]
    assert remap["element"][kept].tolist() == list(range(3))
    # the remap sends every old node to a contiguous new index
    assert sorted(set(remap["node"].tolist())) == list(range(4))
