"""Residual assembly for the moving space-time DG method with interface conservation.

The unknown vector is laid out as::

    u = [ coeffs.ravel()  (n_elem * N * m, C order over (elem, basis, eqn)),
          xt[movable]     (top abscissae of the interior top nodes) ]

and the residual as::

    R = [ dg.ravel()      (n_elem * N * m),
          ice.ravel()     (n_ice_nodes * m) ]

The DG block is the space-time weak form on every element: own trace on
top edges, past trace on bottom edges, the arithmetic mean of the two
one-sided fluxes on interior faces and on the domain ends (against the
exterior state).  The ICE block tests the flux jump on every interior
face with the continuous piecewise-linear hat of each trace node.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .dg import Basis, gauss_rule_1d, gauss_rule_quad, points_for_degree
from .mesh import SlabMesh
from .physics import SystemDef

ICE_TOP = "top"
ICE_ALL = "all"


@dataclass
class Discretization:
    """Everything needed to evaluate ``R(u)`` on one slab.

    Parameters
    ----------
    system : SystemDef
    basis : Basis
    mesh : SlabMesh
        Bottom row and the fixed end nodes are taken from here; the top
        row of ``mesh`` only seeds :meth:`initial_geometry`.
    past_trace : (E, nf, m) array or callable
        States on each element's bottom edge at the edge quadrature
        points, or a vectorized ``x -> (..., m)`` initial condition.
    ext_left, ext_right : array of length m
        Exterior states at the two domain ends.
    ice_nodes : {"top", "all"}
        Which trace nodes carry interface-conservation tests.
    vol_points, face_points : int, optional
        Gauss points per direction for volume and edge integrals.
    backend : {"compiled", "python"}, optional
        Kernel choice; default is the compiled one when it is importable.
    dissipation : float
        Weight of a local Lax-Friedrichs jump term added to the side-face
        fluxes.  Zero (the default) is the plain average flux; only the
        P0 start-up solve uses a nonzero value.
    """

    system: SystemDef
    basis: Basis
    mesh: SlabMesh
    past_trace: object
    ext_left: np.ndarray
    ext_right: np.ndarray
    ice_nodes: str = ICE_ALL
    vol_points: int | None = None
    face_points: int | None = None
    backend: str | None = None
    dissipation: float = 0.0
    _tables: dict = field(init=False, repr=False)

    def __post_init__(self):
        p = self.basis.p
        nv = self.vol_points or points_for_degree(2 * p + 2)
        nf = self.face_points or points_for_degree(2 * p + 1)
        self.vol_points, self.face_points = nv, nf
        vol = gauss_rule_quad(nv)
        face = gauss_rule_1d(nf)
        xiq = np.ascontiguousarray(vol.points[:, 0])
        etaq = np.ascontiguousarray(vol.points[:, 1])
        g = self.basis.eval_grad(xiq, etaq)
        s = face.points
        one = np.ones_like(s)
        self._tables = dict(
            Bv=self.basis.eval(xiq, etaq), Bxi=np.ascontiguousarray(g[..., 0]),
            Beta=np.ascontiguousarray(g[..., 1]), wv=vol.weights, xiq=xiq, etaq=etaq,
            Btop=self.basis.eval(s, one), Bbot=self.basis.eval(s, -one),
            Bleft=self.basis.eval(-one, s), Bright=self.basis.eval(one, s),
            wf=face.weights, sf=s,
        )
        self.ext_left = np.ascontiguousarray(np.atleast_1d(self.ext_left), dtype=float)
        self.ext_right = np.ascontiguousarray(np.atleast_1d(self.ext_right), dtype=float)
        self.bottom_states = self._bottom_states(self.past_trace)
        self._bottom_rhs = self._make_bottom_rhs()
        self._kernel = kernels.get_kernel(self.backend)
        self._pattern = None
        self._colors = None

    # ------------------------------------------------------------------ layout
    @property
    def m(self) -> int:
        return self.system.m

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def E(self) -> int:
        return self.mesh.n_elem

    @property
    def n_flow(self) -> int:
        return self.E * self.N * self.m

    @property
    def n_geom(self) -> int:
        return len(self.mesh.movable)

    @property
    def n_unknowns(self) -> int:
        return self.n_flow + self.n_geom

    @property
    def ice_faces(self) -> np.ndarray:
        return np.arange(1, self.E)

    @property
    def n_ice_rows(self) -> int:
        per = 2 if self.ice_nodes == ICE_ALL else 1
        return per * len(self.ice_faces) * self.m

    @property
    def n_residuals(self) -> int:
        return self.n_flow + self.n_ice_rows

    def pack(self, coeffs, xt) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float).reshape(self.E, self.N, self.m)
        xt = np.asarray(xt, dtype=float)
        return np.concatenate([coeffs.ravel(), xt[self.mesh.movable]])

    def unpack(self, u):
        """Split ``u`` (or a batch ``(B, n)``) into coefficients and full top rows."""
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        U = u[None] if single else u
        coeffs = U[:, :self.n_flow].reshape(-1, self.E, self.N, self.m)
        xt = np.empty((U.shape[0], self.mesh.n_nodes))
        xt[:, 0] = self.mesh.x_lo
        xt[:, -1] = self.mesh.x_hi
        xt[:, 1:-1] = U[:, self.n_flow:]
        if single:
            return coeffs[0], xt[0]
        return coeffs, xt

    def initial_geometry(self) -> np.ndarray:
        return self.mesh.xt.copy()

    # ------------------------------------------------------------- bottom data
    def _bottom_states(self, past):
        t = self._tables
        m = self.m
        if callable(past):
            s = t["sf"]
            xb0, xb1 = self.mesh.xb[:-1, None], self.mesh.xb[1:, None]
            x = 0.5 * (1 - s) * xb0 + 0.5 * (1 + s) * xb1
            vals = np.asarray(past(x), dtype=float)
            if vals.ndim == 2:
                vals = vals[..., None]
            return vals.reshape(self.E, len(s), m)
        vals = np.asarray(past, dtype=float)
        return vals.reshape(self.E, len(t["sf"]), m)

    def _make_bottom_rhs(self):
        t = self._tables
        half = 0.5 * (self.mesh.xb[1:] - self.mesh.xb[:-1])
        return np.ascontiguousarray(
            -np.einsum("f,fn,e,efm->enm", t["wf"], t["Bbot"], half, self.bottom_states))

    # ---------------------------------------------------------------- residual
    def raw(self, u):
        """DG residual ``(…, E, N, m)`` and face moments ``(…, E+1, 2, m)``."""
        coeffs, xt = self.unpack(np.atleast_2d(u))
        t = self._tables
        R, J = self._kernel(
            np.ascontiguousarray(coeffs), np.ascontiguousarray(xt), self.mesh.xb,
            self.mesh.dt, t["Bv"], t["Bxi"], t["Beta"], t["wv"], t["xiq"], t["etaq"],
            t["Btop"], t["Bleft"], t["Bright"], t["wf"], t["sf"],
            self.system.code, self.system.param, self._bottom_rhs,
            self.ext_left, self.ext_right, self.dissipation)
        if np.ndim(u) == 1:
            return R[0], J[0]
        return R, J

    def _ice_block(self, J):
        faces = self.ice_faces
        if self.ice_nodes == ICE_ALL:
            return J[..., faces, :, :]
        return J[..., faces, 0:1, :]

    def residual_batch(self, U) -> np.ndarray:
        R, J = self.raw(np.atleast_2d(U))
        B = R.shape[0]
        return np.concatenate([R.reshape(B, -1), self._ice_block(J).reshape(B, -1)], axis=1)

    def residual(self, u) -> np.ndarray:
        return self.residual_batch(np.asarray(u)[None])[0]

    def split(self, r):
        """``(dg, ice)`` views of a residual vector."""
        return r[:self.n_flow], r[self.n_flow:]

    def dg_element_residual(self, u, e: int) -> np.ndarray:
        R, _ = self.raw(u)
        return R[e].ravel()

    def ice_node_residual(self, u, k: int, which: str = "top") -> np.ndarray:
        """Flux-jump moment against the hat of top (or bottom) node ``k``."""
        _, J = self.raw(u)
        return J[k, 0 if which == "top" else 1].copy()

    # ---------------------------------------------------------------- sparsity
    def column_rows(self, j: int) -> np.ndarray:
        """Structural row support of column ``j``."""
        N, m, E = self.N, self.m, self.E
        nb = N * m
        if j < self.n_flow:
            e = j // nb
            elems = [x for x in (e - 1, e, e + 1) if 0 <= x < E]
            faces = [k for k in (e, e + 1) if 1 <= k <= E - 1]
        else:
            k = int(self.mesh.movable[j - self.n_flow])
            elems = [k - 1, k]
            faces = [k]
        rows = [np.arange(x * nb, (x + 1) * nb) for x in elems]
        per = 2 if self.ice_nodes == ICE_ALL else 1
        for k in faces:
            start = self.n_flow + (k - 1) * per * m
            rows.append(np.arange(start, start + per * m))
        return np.concatenate(rows) if rows else np.zeros(0, dtype=int)

    def sparsity(self) -> sp.csc_matrix:
        if self._pattern is None:
            cols = [self.column_rows(j) for j in range(self.n_unknowns)]
            indptr = np.cumsum([0] + [len(c) for c in cols])
            data = np.ones(indptr[-1], dtype=bool)
            self._pattern = sp.csc_matrix((data, np.concatenate(cols), indptr),
                                          shape=(self.n_residuals, self.n_unknowns))
        return self._pattern

    def colors(self) -> list[np.ndarray]:
        """Greedy column grouping with pairwise disjoint row supports."""
        if self._colors is None:
            P = self.sparsity()
            groups: list[list[int]] = []
            used: list[np.ndarray] = []
            for j in range(self.n_unknowns):
                rows = P.indices[P.indptr[j]:P.indptr[j + 1]]
                for g, mask in enumerate(used):
                    if not mask[rows].any():
                        groups[g].append(j)
                        mask[rows] = True
                        break
                else:
                    mask = np.zeros(self.n_residuals, dtype=bool)
                    mask[rows] = True
                    used.append(mask)
                    groups.append([j])
            self._colors = [np.array(g) for g in groups]
        return self._colors

    # ---------------------------------------------------------------- Jacobian
    def fd_steps(self, u, eps: float = 1e-7) -> np.ndarray:
        return eps * np.maximum(1.0, np.abs(u))

    def jacobian(self, u, eps: float = 1e-7, r0=None, noise: float = 1e-6) -> sp.csr_matrix:
        """Forward-difference Jacobian exploiting the column grouping.

        Entries smaller than ``noise`` times the largest entry of their row
        are rounding noise of the difference quotient and are dropped, so
        directions the residual does not depend on get exactly zero columns.
        """
        u = np.asarray(u, dtype=float)
        r0 = self.residual(u) if r0 is None else r0
        h = self.fd_steps(u, eps)
        groups = self.colors()
        U = np.repeat(u[None], len(groups), axis=0)
        for g, cols in enumerate(groups):
            U[g, cols] += h[cols]
        Rb = self.residual_batch(U)
        P = self.sparsity()
        data = np.empty(P.nnz)
        for g, cols in enumerate(groups):
            diff = Rb[g] - r0
            for j in cols:
                lo, hi = P.indptr[j], P.indptr[j + 1]
                data[lo:hi] = diff[P.indices[lo:hi]] / h[j]
        J = sp.csc_matrix((data, P.indices.copy(), P.indptr.copy()), shape=P.shape)
        return _drop_noise(J.tocsr(), noise)

    def jacobian_dense_fd(self, u, eps: float = 1e-7, r0=None) -> np.ndarray:
        """Column-by-column forward differences without any sparsity use."""
        u = np.asarray(u, dtype=float)
        r0 = self.residual(u) if r0 is None else r0
        h = self.fd_steps(u, eps)
        U = np.repeat(u[None], self.n_unknowns, axis=0)
        U[np.arange(self.n_unknowns), np.arange(self.n_unknowns)] += h
        return ((self.residual_batch(U) - r0[None]) / h[:, None]).T

    # ------------------------------------------------------------ diagnostics
    def boundary_flux_balance(self, u) -> np.ndarray:
        """Net flux out of the slab per conserved field.

        Summing the constant-mode DG residual over all elements cancels
        every interior face exactly, leaving top + bottom + side fluxes.
        """
        R, _ = self.raw(u)
        b0 = self.basis.eval(0.0, 0.0)[0]
        return R[:, 0, :].sum(axis=0) * b0

    def top_trace(self, u) -> np.ndarray:
        """Own trace on every top edge at the edge quadrature points, ``(E, nf, m)``."""
        coeffs, _ = self.unpack(u)
        return np.einsum("fn,enm->efm", self._tables["Btop"], coeffs)


def _drop_noise(J: sp.csr_matrix, rel: float) -> sp.csr_matrix:
    if rel <= 0 or J.nnz == 0:
        return J
    rowmax = np.zeros(J.shape[0])
    np.maximum.at(rowmax, np.repeat(np.arange(J.shape[0]), np.diff(J.indptr)), np.abs(J.data))
    thresh = rel * np.repeat(rowmax, np.diff(J.indptr))
    J = J.copy()
    J.data[np.abs(J.data) < thresh] = 0.0
    J.eliminate_zeros()
    return J
