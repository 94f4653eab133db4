"""Plot-ready run artifacts: mesh dumps, top-edge profiles, residual
history, and a JSON summary.

Every file is written into a temporary sibling directory that is renamed
into place only once the whole set is complete, so a run directory is
either absent or full.  Floats are written with ``repr`` (full double
precision) and no timestamps are recorded, so files are byte-stable for
fixed inputs.

Column orders::

    profiles.csv   element, x, <fields>          (euler: density, velocity,
                                                  pressure, entropy_production;
                                                  scalar laws: u)
    history.csv    iter, norm, norm_dg, norm_ice, lambda, neg_density,
                   neg_pressure, inverted_cells
"""
from __future__ import annotations

import csv
import json
import math
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from . import oracle
from .mesh import dump_mesh
from .physics import EULER, entropy_production
from .problems import ProblemSpec
from .solver import RunResult, field_values, l2_spacetime_error, top_profiles

OUTPUT_ENV = "MDGICE_OUTPUT_ROOT"
HISTORY_COLUMNS = ("iter", "norm", "norm_dg", "norm_ice", "lambda",
                   "neg_density", "neg_pressure", "inverted_cells")
EULER_FIELDS = ("density", "velocity", "pressure")


def output_root(default: str = "runs") -> Path:
    return Path(os.environ.get(OUTPUT_ENV, default))


def reference_solution(spec: ProblemSpec):
    """``(x, t) -> tuple of exact fields`` or ``None`` if no closed form applies.

    Euler problems give ``(rho, u, p)``; scalar laws give ``(u,)``.  The
    problem named ``noh`` uses the infinite-strength closed form.
    """
    sysdef = spec.system
    if sysdef.kind == EULER:
        if spec.name == "noh":
            sol = oracle.NohSolution(sysdef.gamma, spec.left[0], spec.left[1], spec.left[2])
            return lambda x, t: sol.sample(x, t, spec.x_i)
        try:
            sol = oracle.solve_euler_riemann(spec.left, spec.right, sysdef.gamma)
        except oracle.VacuumError:
            return None
        return lambda x, t: sol.sample(x, t, spec.x_i)
    return lambda x, t: (oracle.scalar_exact(sysdef.kind, spec.left[0], spec.right[0], x, t,
                                             a=sysdef.a, x0=spec.x_i),)


def field_errors(result: RunResult) -> dict:
    """log10 of the space-time L2 error per field on the last slab."""
    exact = reference_solution(result.spec)
    if exact is None:
        return {}
    s = result.last
    if result.spec.system.kind == EULER:
        names = EULER_FIELDS
    else:
        names = ("u",)
    out = {}
    for i, name in enumerate(names):
        fld = name if result.spec.system.kind == EULER else "density"
        err = l2_spacetime_error(s.disc, s.u, lambda x, t, i=i: exact(x, t)[i], field=fld)
        out[name] = math.log10(err) if err > 0 else float("-inf")
    return out


def profile_rows(result: RunResult):
    s = result.last
    spec = result.spec
    rows = []
    for e, x, U in top_profiles(s.disc, s.u):
        if spec.system.kind == EULER:
            ref = spec.initial_condition(x)
            cols = [field_values(spec.system, U, f) for f in EULER_FIELDS]
            cols.append(entropy_production(spec.system, U, ref))
        else:
            cols = [U[:, 0]]
        for j in range(len(x)):
            rows.append([e, float(x[j])] + [float(c[j]) for c in cols])
    return rows


def profile_header(spec: ProblemSpec):
    if spec.system.kind == EULER:
        return ["element", "x", *EULER_FIELDS, "entropy_production"]
    return ["element", "x", "u"]


def summary(result: RunResult) -> dict:
    s = result.last
    rep = s.report
    return {
        "problem": result.spec.name,
        "p": result.p,
        "converged": bool(result.converged),
        "reason": rep.reason,
        "iterations": result.iterations,
        "norm": rep.norm,
        "norm_dg": rep.norm_dg,
        "norm_ice": rep.norm_ice,
        "log10_l2_error": field_errors(result),
        "dofs": s.disc.n_unknowns,
        "flow_dofs_initial": result.flow_dofs(),
        "elements": s.disc.E,
        "removals": result.removals,
        "top_nodes": [float(v) for v in s.xt],
        "slabs": len(result.slabs),
    }


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_run(result: RunResult, out_dir) -> Path:
    """Write the full artifact set for ``result`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir.parent))
    try:
        (tmp / "mesh_initial.txt").write_text(dump_mesh(result.initial_mesh))
        s = result.last
        (tmp / "mesh_final.txt").write_text(dump_mesh(s.disc.mesh, s.xt))
        _write_csv(tmp / "profiles.csv", profile_header(result.spec), profile_rows(result))
        hist = [[row.get(c, 0) for c in HISTORY_COLUMNS] for row in result.history]
        _write_csv(tmp / "history.csv", HISTORY_COLUMNS, hist)
        with open(tmp / "summary.json", "w") as fh:
            json.dump(summary(result), fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        if out_dir.exists():
            shutil.rmtree(out_dir)
        tmp.rename(out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out_dir


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def study_table(rows) -> list[dict]:
    """Add pairwise slopes ``dlog(err) / dlog(1/sqrt(DOF))`` to study rows.

    Each row needs ``log_inv_sqrt_dof`` and ``log10_error`` (either may be
    None for a failed run); the first row and rows next to a failure get
    ``slope = None``.
    """
    out = []
    prev = None
    for r in rows:
        r = dict(r)
        r["slope"] = None
        if prev is not None and None not in (prev["log10_error"], r["log10_error"]):
            r["slope"] = ((r["log10_error"] - prev["log10_error"])
                          / (r["log_inv_sqrt_dof"] - prev["log_inv_sqrt_dof"]))
        out.append(r)
        prev = r
    return out


def format_study(rows) -> str:
    lines = ["p,dofs,log_inv_sqrt_dof,log10_error,slope,converged"]
    for r in rows:
        err = "" if r["log10_error"] is None else repr(r["log10_error"])
        slope = "" if r["slope"] is None else repr(r["slope"])
        lines.append(f"{r['p']},{r['dofs']},{r['log_inv_sqrt_dof']!r},{err},{slope},"
                     f"{int(bool(r['converged']))}")
    return "\n".join(lines) + "\n"
