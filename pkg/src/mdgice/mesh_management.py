"""Detection and removal of collapsed space-time cells.

In a one-element-in-time slab a cell can only vanish if both its bottom
and top edges shrink to a point: removing it then amounts to deleting
the element and merging its two top nodes (and its two coincident bottom
nodes).  The remaining elements keep their coefficients unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dg import gauss_rule_quad
from .mesh import SlabMesh, element_area, map_jacobian_det

HEALTHY = "healthy"
COLLAPSED = "collapsed"
TANGLED = "tangled"


class RemovalRefused(RuntimeError):
    """Removing the flagged cells would disconnect or empty the mesh."""


@dataclass(frozen=True)
class DegeneracyReport:
    min_det: np.ndarray
    top_length: np.ndarray
    bottom_length: np.ndarray
    flags: tuple
    eps_c: float
    eps_j: float

    @property
    def collapsed(self) -> np.ndarray:
        return np.array([f == COLLAPSED for f in self.flags])

    @property
    def tangled(self) -> np.ndarray:
        return self.min_det < 0


def detect_degenerate(disc, u, eps_c_rel: float = 1e-8, eps_j_rel: float = 1e-10,
                      npts: int | None = None) -> DegeneracyReport:
    """Flag collapsed and tangled cells.

    ``collapsed``: top edge shorter than ``eps_c`` (signed, so inverted
    edges count) or minimum Jacobian determinant below ``eps_j``.
    ``tangled``: minimum determinant negative but not collapsed.
    Thresholds: ``eps_c = 1e-8 * width``, ``eps_j = 1e-10 * mean |area|``.
    """
    _, xt = disc.unpack(u)
    mesh = disc.mesh
    rule = gauss_rule_quad(npts or disc.vol_points)
    xi, eta = rule.points[:, 0], rule.points[:, 1]
    areas = np.array([abs(element_area(mesh, e, xt)) for e in range(mesh.n_elem)])
    eps_c = eps_c_rel * mesh.width
    eps_j = eps_j_rel * max(areas.mean(), np.finfo(float).tiny)
    min_det = np.array([map_jacobian_det(mesh.corners(e, xt), xi, eta).min()
                        for e in range(mesh.n_elem)])
    top = np.diff(xt)
    bottom = np.diff(mesh.xb)
    flags = []
    for e in range(mesh.n_elem):
        if top[e] < eps_c or min_det[e] < eps_j:
            flags.append(COLLAPSED)
        elif min_det[e] < 0:
            flags.append(TANGLED)
        else:
            flags.append(HEALTHY)
    return DegeneracyReport(min_det, top, bottom, tuple(flags), eps_c, eps_j)


def _runs(mask):
    runs, start = [], None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def remove_collapsed(disc, u, report: DegeneracyReport):
    """Delete collapsed cells and merge their nodes.

    Without collapsed cells this is the identity.  Only cells whose bottom
    edge is also degenerate (fan cells) can be deleted without opening a
    gap; other flagged cells are left in place and listed under
    ``"refused"`` in the returned remap.

    Returns
    -------
    disc : Discretization
        Rebuilt for the reduced mesh.
    u : array
        Reduced unknowns (surviving coefficients unchanged).
    remap : dict
        ``element``: old -> new element index (-1 if removed),
        ``node``: old -> new node index, ``merged_nodes``: list of old
        top-node groups merged into one, ``refused``: flagged but kept.
    """
    mesh: SlabMesh = disc.mesh
    coeffs, xt = disc.unpack(u)
    E = mesh.n_elem
    if not report.collapsed.any():
        ident = np.arange(E + 1)
        return disc, u, {"element": ident[:-1], "node": ident, "merged_nodes": [],
                         "refused": []}
    removable = report.collapsed & (np.abs(report.bottom_length) < report.eps_c)
    refused = [int(e) for e in np.nonzero(report.collapsed & ~removable)[0]]
    if not removable.any():
        raise RemovalRefused(f"no removable cells among flagged {refused}")
    if removable.sum() >= E - 1:
        raise RemovalRefused("removal would leave fewer than two elements")

    node_map = np.empty(E + 1, dtype=int)
    new_xb, new_xt, groups = [], [], []
    runs = {s: f for s, f in _runs(removable)}
    k = 0
    while k <= E:
        f = runs.get(k)
        if f is not None:
            nodes = list(range(k, f + 2))
            if nodes[0] == 0 or nodes[-1] == E:
                raise RemovalRefused("collapsed run touches a domain end")
            new_xb.append(float(np.mean(mesh.xb[nodes])))
            new_xt.append(float(np.mean(xt[nodes])))
            node_map[nodes] = len(new_xb) - 1
            groups.append(nodes)
            k = f + 2
        else:
            new_xb.append(float(mesh.xb[k]))
            new_xt.append(float(xt[k]))
            node_map[k] = len(new_xb) - 1
            k += 1

    keep = np.nonzero(~removable)[0]
    elem_map = -np.ones(E, dtype=int)
    elem_map[keep] = np.arange(len(keep))
    new_mesh = replace(mesh, xb=np.array(new_xb), xt=np.array(new_xt))
    past = disc.bottom_states[keep]
    new_disc = type(disc)(disc.system, disc.basis, new_mesh, past, disc.ext_left,
                          disc.ext_right, ice_nodes=disc.ice_nodes,
                          vol_points=disc.vol_points, face_points=disc.face_points,
                          backend=disc.backend)
    new_u = new_disc.pack(coeffs[keep], new_mesh.xt)
    remap = {"element": elem_map, "node": node_map, "merged_nodes": groups, "refused": refused}
    return new_disc, new_u, remap
