"""One space-time slab of quadrilaterals.

The slab ``[t0, t1]`` is a chain of elements: element ``e`` has bottom
nodes ``e, e+1`` at ``t0`` and top nodes ``e, e+1`` at ``t1``.  Bottom
abscissae are fixed; top abscissae (except the two domain ends) are
unknowns.  Bottom nodes may coincide (a fan at a singular point), which
gives elements with a collapsed bottom edge.

Node ids in dumps: bottom nodes ``0..n-1``, top nodes ``n..2n-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

SEED_SPREAD = "spread"
SEED_CLUSTERED = "clustered"


@dataclass(frozen=True)
class SlabMesh:
    xb: np.ndarray  # bottom abscissae, length n_elem + 1
    xt: np.ndarray  # top abscissae (initial / current), length n_elem + 1
    t0: float
    t1: float
    fan_x: float | None = None

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("slab must have positive height (t1 > t0)")
        if len(self.xb) != len(self.xt) or len(self.xb) < 2:
            raise ValueError("bottom and top node rows must match and hold >= 2 nodes")

    @property
    def n_elem(self) -> int:
        return len(self.xb) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.xb)

    @property
    def dt(self) -> float:
        return self.t1 - self.t0

    @property
    def x_lo(self) -> float:
        return float(self.xb[0])

    @property
    def x_hi(self) -> float:
        return float(self.xb[-1])

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def movable(self) -> np.ndarray:
        """Top-node indices whose abscissa is unknown (domain ends are fixed)."""
        return np.arange(1, self.n_nodes - 1)

    @property
    def fixed(self) -> np.ndarray:
        return np.array([0, self.n_nodes - 1])

    @property
    def elements(self) -> np.ndarray:
        """Counterclockwise node quadruples (bottom-left, bottom-right, top-right, top-left)."""
        n = self.n_nodes
        e = np.arange(self.n_elem)
        return np.column_stack([e, e + 1, n + e + 1, n + e])

    @property
    def interior_faces(self) -> np.ndarray:
        """Rows ``(left_elem, right_elem, bottom_node, top_node)``."""
        k = np.arange(1, self.n_elem)
        return np.column_stack([k - 1, k, k, self.n_nodes + k])

    def with_top(self, xt) -> "SlabMesh":
        return replace(self, xt=np.asarray(xt, dtype=float).copy())

    def corners(self, e: int, xt=None) -> np.ndarray:
        xt = self.xt if xt is None else xt
        return np.array([[self.xb[e], self.t0], [self.xb[e + 1], self.t0],
                         [xt[e + 1], self.t1], [xt[e], self.t1]])

    def face_boundary_kind(self, e: int) -> dict:
        """Classification of element ``e``'s four faces."""
        return {
            "bottom": "slab",
            "top": "slab",
            "left": "boundary" if e == 0 else "interior",
            "right": "boundary" if e == self.n_elem - 1 else "interior",
        }


def build_slab(x_nodes, t0: float, t1: float, fan=None, seed: str = SEED_SPREAD) -> SlabMesh:
    """Build a slab from sorted bottom abscissae, optionally with a fan.

    Parameters
    ----------
    x_nodes : sequence of float
        Strictly increasing bottom abscissae spanning the domain.
    t0, t1 : float
        Slab time levels, ``t1 > t0``.
    fan : (float, int), optional
        ``(x_f, count)``: insert ``count`` extra bottom nodes coincident
        with ``x_f`` (which must be one of ``x_nodes``), each adding an
        element with a zero-length bottom edge.
    seed : {"spread", "clustered"}
        Initial top positions.  ``"spread"`` places the top row at evenly
        spaced abscissae across the domain; ``"clustered"`` keeps plain
        columns vertical and seeds fan tops at ``x_f`` with tiny
        symmetric offsets of 1e-6 * width.
    """
    x = np.asarray(x_nodes, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("need at least two bottom abscissae")
    if np.any(np.diff(x) <= 0):
        raise ValueError("bottom abscissae must be strictly increasing")
    if not t1 > t0:
        raise ValueError("slab must have positive height (t1 > t0)")
    width = x[-1] - x[0]
    count = 0
    i_f = None
    if fan is not None:
        x_f, count = float(fan[0]), int(fan[1])
        if count < 0:
            raise ValueError("fan count must be nonnegative")
        if not x[0] < x_f < x[-1]:
            raise ValueError("fan point lies outside the domain interior")
        hits = np.nonzero(np.abs(x - x_f) <= 1e-12 * width)[0]
        if len(hits) == 0:
            raise ValueError("fan point must coincide with a bottom abscissa")
        i_f = int(hits[0])
        xb = np.concatenate([x[:i_f], np.full(count + 1, x[i_f]), x[i_f + 1:]])
    else:
        xb = x.copy()
    n = len(xb)
    if seed == SEED_SPREAD:
        xt = np.linspace(x[0], x[-1], n)
    elif seed == SEED_CLUSTERED:
        xt = xb.copy()
        if count:
            off = 1e-6 * width * (np.arange(count + 1) - count / 2.0)
            xt[i_f:i_f + count + 1] = x[i_f] + off
    else:
        raise ValueError(f"unknown seeding {seed!r}")
    xt[0], xt[-1] = x[0], x[-1]
    return SlabMesh(xb, xt, float(t0), float(t1), None if fan is None else float(fan[0]))


def sequential_slab(prev: SlabMesh, xt_prev, t_next: float) -> SlabMesh:
    """Next slab whose bottom row is the previous converged top row.

    Top nodes start on the straight continuation of each previous face.
    """
    if not t_next > prev.t1:
        raise ValueError("next slab must have positive height")
    xb = np.asarray(xt_prev, dtype=float).copy()
    ratio = (t_next - prev.t1) / prev.dt
    xt = xb + (xb - prev.xb) * ratio
    xt[0], xt[-1] = xb[0], xb[-1]
    return SlabMesh(xb, xt, prev.t1, float(t_next))


def bilinear_map(corners, xi, eta):
    """Physical ``(x, t)`` of reference points under the bilinear quad map."""
    c = np.asarray(corners, dtype=float)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    N = np.stack([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                  (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)], axis=-1) / 4.0
    return N @ c[:, 0], N @ c[:, 1]


def map_jacobian(corners, xi, eta) -> np.ndarray:
    """``[[x_xi, x_eta], [t_xi, t_eta]]`` at one reference point."""
    c = np.asarray(corners, dtype=float)
    dxi = np.array([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)]) / 4.0
    deta = np.array([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)]) / 4.0
    return np.array([[dxi @ c[:, 0], deta @ c[:, 0]], [dxi @ c[:, 1], deta @ c[:, 1]]])


def map_jacobian_det(corners, xi, eta):
    c = np.asarray(corners, dtype=float)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    x, t = c[:, 0], c[:, 1]
    x_xi = ((1 - eta) * (x[1] - x[0]) + (1 + eta) * (x[2] - x[3])) / 4.0
    x_eta = ((1 - xi) * (x[3] - x[0]) + (1 + xi) * (x[2] - x[1])) / 4.0
    t_xi = ((1 - eta) * (t[1] - t[0]) + (1 + eta) * (t[2] - t[3])) / 4.0
    t_eta = ((1 - xi) * (t[3] - t[0]) + (1 + xi) * (t[2] - t[1])) / 4.0
    return x_xi * t_eta - x_eta * t_xi


def jacobian_det(mesh: SlabMesh, e: int, xi, eta, xt=None):
    return map_jacobian_det(mesh.corners(e, xt), xi, eta)


def element_area(mesh: SlabMesh, e: int, xt=None) -> float:
    """Signed area (trapezoid formula, exact for the bilinear map)."""
    xt = mesh.xt if xt is None else xt
    return 0.5 * ((mesh.xb[e + 1] - mesh.xb[e]) + (xt[e + 1] - xt[e])) * mesh.dt


def face_geometry(mesh: SlabMesh, k: int, xt=None):
    """Geometry of the face from bottom node ``k`` to top node ``k``.

    Returns ``(normal, length, degenerate)`` where ``normal`` is the unit
    normal pointing from element ``k-1`` to element ``k`` (zeros for a
    zero-length face) and ``degenerate`` flags a zero-length face.
    """
    xt = mesh.xt if xt is None else xt
    dx = float(xt[k] - mesh.xb[k])
    dt = mesh.dt
    length = float(np.hypot(dx, dt))
    if length == 0.0:
        return np.zeros(2), 0.0, True
    return np.array([dt, -dx]) / length, length, False


def dump_mesh(mesh: SlabMesh, xt=None) -> str:
    """Plain-text node and element tables.

    Format::

        # nodes <n>
        <id> <x> <t>
        ...
        # elements <n_elem>
        <id> <bl> <br> <tr> <tl>
    """
    xt = mesh.xt if xt is None else xt
    n = mesh.n_nodes
    lines = [f"# nodes {2 * n}"]
    for i in range(n):
        lines.append(f"{i} {float(mesh.xb[i])!r} {float(mesh.t0)!r}")
    for i in range(n):
        lines.append(f"{n + i} {float(xt[i])!r} {float(mesh.t1)!r}")
    lines.append(f"# elements {mesh.n_elem}")
    for e, q in enumerate(mesh.elements):
        lines.append(f"{e} {q[0]} {q[1]} {q[2]} {q[3]}")
    return "\n".join(lines) + "\n"


def load_mesh(text: str) -> SlabMesh:
    """Inverse of :func:`dump_mesh` for chain meshes."""
    nodes = {}
    mode = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            mode = line.split()[1]
            continue
        parts = line.split()
        if mode == "nodes":
            nodes[int(parts[0])] = (float(parts[1]), float(parts[2]))
    n = len(nodes) // 2
    xb = np.array([nodes[i][0] for i in range(n)])
    xt = np.array([nodes[n + i][0] for i in range(n)])
    return SlabMesh(xb, xt, nodes[0][1], nodes[n][1])
