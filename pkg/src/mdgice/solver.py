"""Problem-level driver: build slabs, minimize, manage degenerate cells,
and evaluate the converged solution."""
from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from . import mesh_management as mm
from .dg import gauss_rule_quad
from .lm import LmConfig, SolveReport, minimize
from .mesh import SlabMesh, bilinear_map, map_jacobian_det, sequential_slab
from .physics import EULER, conservative_to_primitive
from .problems import ProblemSpec, initialize_unknowns
from .residual import Discretization

log = logging.getLogger(__name__)


@dataclass
class SlabResult:
    disc: Discretization
    u: np.ndarray
    report: SolveReport
    removals: list = field(default_factory=list)

    @property
    def mesh(self) -> SlabMesh:
        coeffs, xt = self.disc.unpack(self.u)
        return self.disc.mesh.with_top(xt)

    @property
    def coeffs(self) -> np.ndarray:
        return self.disc.unpack(self.u)[0]

    @property
    def xt(self) -> np.ndarray:
        return self.disc.unpack(self.u)[1]


@dataclass
class RunResult:
    spec: ProblemSpec
    p: int
    slabs: list
    initial_mesh: SlabMesh
    config: LmConfig

    @property
    def last(self) -> SlabResult:
        return self.slabs[-1]

    @property
    def converged(self) -> bool:
        return all(s.report.converged for s in self.slabs)

    @property
    def removals(self) -> list:
        return [ev for s in self.slabs for ev in s.removals]

    @property
    def history(self) -> list:
        return [row for s in self.slabs for row in s.report.history]

    @property
    def iterations(self) -> int:
        return sum(s.report.iterations for s in self.slabs)

    def flow_dofs(self) -> int:
        """Flow unknowns of the initial first-slab mesh."""
        d = self.slabs[0].disc
        return self.initial_mesh.n_elem * d.N * d.m

    def total_dofs(self) -> int:
        d = self.last.disc
        return d.n_unknowns


def dof_scaling(disc: Discretization, spec: ProblemSpec, cfg: LmConfig) -> np.ndarray:
    """Column scaling: per-field reference magnitudes for flow, domain width for geometry.

    Reference magnitudes are the largest absolute initial values of each
    conserved field, floored at 1e-2 of the largest field scale.
    """
    ref = np.maximum(np.abs(spec.left_state), np.abs(spec.right_state))
    top = ref.max() if ref.max() > 0 else 1.0
    ref = np.maximum(ref, 1e-2 * top)
    flow = np.broadcast_to(ref, (disc.E, disc.N, disc.m)).ravel()
    geom = np.full(disc.n_geom, cfg.geometry_scale * disc.mesh.width)
    return np.concatenate([flow, geom])


def sign_monitor(disc: Discretization):
    """Per-iterate flags for negative density/pressure and inverted cells."""
    pts = gauss_rule_quad(disc.vol_points).points
    B = disc.basis.eval(pts[:, 0], pts[:, 1])

    def monitor(u):
        coeffs, xt = disc.unpack(u)
        U = np.einsum("qn,enm->eqm", B, coeffs)
        out = {}
        if disc.system.kind == EULER:
            rho = U[..., 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                p = (disc.system.gamma - 1) * (U[..., 2] - 0.5 * U[..., 1] ** 2 / rho)
            out["neg_density"] = int(np.sum(rho < 0))
            out["neg_pressure"] = int(np.sum(p < 0))
        out["inverted_cells"] = int(np.sum(np.diff(xt) < 0))
        return out

    return monitor


def make_disc(spec: ProblemSpec, mesh: SlabMesh, p: int, past, backend=None,
              dissipation: float = 0.0) -> Discretization:
    return Discretization(spec.system, spec.make_basis(p), mesh, past,
                          spec.left_state, spec.right_state, ice_nodes=spec.ice_nodes,
                          backend=backend, dissipation=dissipation)


def dg0_start(spec: ProblemSpec, disc: Discretization, cfg: LmConfig, backend=None):
    """Initial unknowns from a dissipative P0 solve on the frozen initial mesh.

    Cell states solve the DG(P0) rows with local Lax-Friedrichs side fluxes;
    the geometry is held fixed.  Returns ``(u0, report)`` for ``disc``.
    """
    d0 = make_disc(spec, disc.mesh, 0, disc.past_trace, backend, dissipation=1.0)
    start = initialize_unknowns(spec, d0)
    nf = d0.n_flow
    geom = start[nf:]
    full = lambda v: np.concatenate([v, geom])
    res = lambda v: d0.residual(full(v))[:nf]
    jac = lambda v, r: d0.jacobian(full(v)).tocsc()[:nf, :nf]
    scale = dof_scaling(d0, spec, cfg)[:nf]
    v, rep = minimize(res, jac, start[:nf], cfg, scaling=scale)
    mid = d0.basis.eval(np.zeros(1), np.zeros(1))[0]
    states = np.einsum("n,enm->em", mid, v.reshape(d0.E, d0.N, d0.m))
    coeffs = np.stack([disc.basis.constant_coeffs(s) for s in states])
    return np.concatenate([coeffs.ravel(), geom]), rep


def fold_depth(xt) -> float:
    """Total length by which top edges are inverted."""
    return float(np.sum(np.maximum(0.0, -np.diff(xt))))


def no_new_folds(disc: Discretization, tol_rel: float = 1e-8):
    """Admissibility test: a step may not deepen folds of the top edge.

    Folded meshes with a constant state in the folded cells are exact
    zeros of the residual, so once a top node passes a neighbour the
    iteration can settle on such a spurious solution.  Steps that reduce
    existing folds are always allowed, and folds shallower than
    ``tol_rel * width`` are ignored so that collapsing cells can close.
    """
    tol = tol_rel * disc.mesh.width

    def admissible(u_new, u_old):
        depth = fold_depth(disc.unpack(u_new)[1])
        return depth <= max(fold_depth(disc.unpack(u_old)[1]), tol)

    return admissible


def geometry_stiffness(disc: Discretization) -> np.ndarray:
    """Second-difference matrix on the movable top nodes (zero flow block).

    Used as part of the LM damping, it makes neighbouring nodes move
    together, so nodes in flat regions drift with the fitted fronts
    instead of wandering.
    """
    n, nf, ng = disc.n_unknowns, disc.n_flow, disc.n_geom
    K = np.zeros((n, n))
    K[nf:, nf:] = 2 * np.eye(ng) - np.eye(ng, k=1) - np.eye(ng, k=-1)
    return K


def _solve_slab(disc, spec, u0, cfg, offset):
    jac = lambda u, r: disc.jacobian(u, eps=cfg.fd_eps, r0=r)
    return minimize(disc.residual, jac, u0, cfg, scaling=dof_scaling(disc, spec, cfg),
                    split=disc.split, monitor=sign_monitor(disc), iter_offset=offset,
                    admissible=no_new_folds(disc), stiffness=geometry_stiffness(disc))


def _continue_from(spec, p, cfg, disc, backend):
    lower = run(spec, p - 1, cfg, mesh_management=False, backend=backend).last
    log.info("degree %d start from degree %d: %d iterations, %s",
             p, p - 1, lower.report.iterations, lower.report.reason)
    coeffs = np.stack([
        disc.basis.project(lambda xi, eta, c=c: lower.disc.basis.eval(xi, eta) @ c)
        for c in lower.coeffs])
    return np.concatenate([coeffs.ravel(), lower.u[lower.disc.n_flow:]])


def run(spec: ProblemSpec, p: int | None = None, cfg: LmConfig | None = None,
        mesh_management: bool = True, slabs: int = 1, backend=None,
        max_removal_rounds: int = 4, continuation: bool = True) -> RunResult:
    """Solve ``spec`` on ``slabs`` equal consecutive slabs.

    With ``continuation`` a first-slab solve at degree ``p >= 3`` starts
    from the converged degree ``p - 1`` solution on the same initial mesh
    (projected onto the richer basis) instead of the piecewise-constant
    start.  Degree 1 is never used as a stepping stone: its solutions are
    staircases of expansion shocks that remain exact zeros at every degree.
    """
    p = spec.p if p is None else p
    cfg = (cfg or LmConfig()).updated(**spec.lm) if spec.lm else (cfg or LmConfig())
    if slabs < 1:
        raise ValueError("need at least one slab")
    times = np.linspace(spec.t_lo, spec.t_hi, slabs + 1)
    mesh = spec.build_mesh(times[0], times[1])
    initial_mesh = mesh
    past = spec.initial_condition
    results = []
    u0 = None
    offset = 0
    for n in range(slabs):
        disc = make_disc(spec, mesh, p, past, backend)
        if u0 is None:
            if continuation and p >= 3 and spec.init == "constant":
                u0 = _continue_from(spec, p, cfg, disc, backend)
            elif spec.init == "dg0":
                u0, rep0 = dg0_start(spec, disc, cfg, backend)
                log.info("dg0 start: %d iterations, %s", rep0.iterations, rep0.reason)
            else:
                u0 = initialize_unknowns(spec, disc)
        u, rep = _solve_slab(disc, spec, u0, cfg, offset)
        offset += rep.iterations
        res = SlabResult(disc, u, rep)
        rounds = 0
        while mesh_management and rep.converged and rounds < max_removal_rounds:
            report = mm.detect_degenerate(disc, u)
            if not report.collapsed.any():
                break
            try:
                disc2, u2, remap = mm.remove_collapsed(disc, u, report)
            except mm.RemovalRefused as exc:
                log.warning("cell removal refused: %s", exc)
                break
            event = {"iteration": offset, "slab": n,
                     "elements": [int(e) for e in np.nonzero(report.collapsed)[0]],
                     "merged_nodes": remap["merged_nodes"]}
            log.info("removed collapsed cells %s", event["elements"])
            disc, u = disc2, u2
            u, rep = _solve_slab(disc, spec, u, cfg, offset)
            offset += rep.iterations
            res = SlabResult(disc, u, rep, res.removals + [event])
            rounds += 1
        results.append(res)
        if n + 1 < slabs:
            coeffs, xt = disc.unpack(u)
            trace = disc.top_trace(u)
            mesh = sequential_slab(disc.mesh, xt, times[n + 2])
            past = trace
            # flat start from the mean of the handed-over trace
            wf = disc._tables["wf"]
            means = np.einsum("f,efm->em", wf, trace) / wf.sum()
            coeffs0 = np.stack([disc.basis.constant_coeffs(s) for s in means])
            disc_next = make_disc(spec, mesh, p, past, backend)
            u0 = disc_next.pack(coeffs0, mesh.xt)
    return RunResult(spec, p, results, initial_mesh, cfg)


# ------------------------------------------------------------------ evaluation
def element_states(disc: Discretization, u, xi, eta) -> np.ndarray:
    """States ``(E, npts, m)`` at reference points of every element."""
    coeffs, _ = disc.unpack(u)
    return np.einsum("qn,enm->eqm", disc.basis.eval(xi, eta), coeffs)


def element_points(disc: Discretization, u, xi, eta):
    """Physical ``(x, t)`` arrays ``(E, npts)`` of reference points."""
    _, xt = disc.unpack(u)
    xs, ts = [], []
    for e in range(disc.E):
        x, t = bilinear_map(disc.mesh.corners(e, xt), xi, eta)
        xs.append(x)
        ts.append(t)
    return np.array(xs), np.array(ts)


def field_values(system, U, name: str) -> np.ndarray:
    if system.kind != EULER:
        return U[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        rho, v, p = conservative_to_primitive(system, U)
    if name == "density":
        return rho
    if name == "velocity":
        return v
    if name == "pressure":
        return p
    if name == "internal_energy":
        return p / ((system.gamma - 1) * rho)
    raise ValueError(f"unknown field {name!r}")


def l2_spacetime_error(disc: Discretization, u, exact, field: str = "density",
                       npts: int | None = None) -> float:
    """``sqrt(int (u_c - u_e)^2 dOmega)`` over the slab.

    ``exact(x, t)`` returns the exact value of ``field``.  The rule has
    ``max(p + 3, 12)`` points per direction (exact to degree >= 2p + 5)
    because the error integrand is not polynomial.
    """
    n = npts or max(disc.basis.p + 3, 12)
    rule = gauss_rule_quad(n)
    xi, eta = rule.points[:, 0], rule.points[:, 1]
    U = element_states(disc, u, xi, eta)
    vals = field_values(disc.system, U, field)
    x, t = element_points(disc, u, xi, eta)
    _, xt = disc.unpack(u)
    total = 0.0
    for e in range(disc.E):
        det = map_jacobian_det(disc.mesh.corners(e, xt), xi, eta)
        ex = exact(x[e], t[e])
        total += np.sum(rule.weights * np.abs(det) * (vals[e] - ex) ** 2)
    return float(np.sqrt(total))


def top_profiles(disc: Discretization, u, npts: int | None = None):
    """Per-element samples along the top edge: list of ``(e, x, U)``.

    ``p + 1`` evenly spaced points per element (two for P1, three for P2).
    """
    n = npts or disc.basis.p + 1
    xi = np.linspace(-1.0, 1.0, max(n, 2))
    eta = np.ones_like(xi)
    U = element_states(disc, u, xi, eta)
    x, _ = element_points(disc, u, xi, eta)
    return [(e, x[e], U[e]) for e in range(disc.E)]


def sample_top(disc: Discretization, u, x) -> np.ndarray:
    """State at abscissae ``x`` on the slab top (first element whose top edge holds x)."""
    _, xt = disc.unpack(u)
    coeffs, _ = disc.unpack(u)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.full((len(x), disc.m), np.nan)
    for i, xv in enumerate(x):
        for e in range(disc.E):
            a, b = xt[e], xt[e + 1]
            if b > a and a <= xv <= b:
                xi = 2 * (xv - a) / (b - a) - 1
                out[i] = disc.basis.eval(xi, 1.0) @ coeffs[e]
                break
    return out
