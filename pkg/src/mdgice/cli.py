"""Command-line front end.

``mdgice run`` solves one problem and writes its artifact directory;
``mdgice study`` runs several degrees and prints the p-convergence table.
Exit status: 0 converged, 2 not converged (files are still written),
1 usage error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import output
from .lm import LmConfig
from .problems import apply_overrides, load_problem
from .solver import run as solve

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2
DEGREES = (1, 2, 3)

log = logging.getLogger("mdgice")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p):
    p.add_argument("--problem", required=True, help="builtin name or config file path")
    p.add_argument("--config", help="file of key = value overrides")
    p.add_argument("--out", help="output directory (default: $%s/<problem>_p<p>)"
                   % output.OUTPUT_ENV)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float, help="residual norm tolerance")
    p.add_argument("--no-mesh-management", action="store_true")
    p.add_argument("--multi-slab", type=int, default=1, metavar="K")
    p.add_argument("--backend", choices=("compiled", "python"))
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdgice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="solve one problem")
    _common(r)
    r.add_argument("--p", type=int, help="polynomial degree (default: the problem's)")
    s = sub.add_parser("study", help="p-convergence table")
    _common(s)
    s.add_argument("--p", type=int, nargs="+", default=list(DEGREES))
    return parser


def _setup(args):
    try:
        spec = load_problem(args.problem)
        if args.config:
            spec = apply_overrides(spec, Path(args.config).read_text())
    except (KeyError, ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None
    lm = {}
    if args.max_iter is not None:
        lm["max_iter"] = args.max_iter
    if args.tol is not None:
        lm["tol_r"] = args.tol
    try:
        cfg = LmConfig().updated(**{**spec.lm, **lm})
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if args.multi_slab < 1:
        raise UsageError("--multi-slab must be at least 1")
    return spec.with_(lm={}), cfg


def _check_degree(p):
    if p not in DEGREES:
        raise UsageError(f"degree must be one of {DEGREES}, got {p}")


def _solve(spec, p, cfg, args):
    return solve(spec, p, cfg, mesh_management=not args.no_mesh_management,
                 slabs=args.multi_slab, backend=args.backend)


def cmd_run(args) -> int:
    spec, cfg = _setup(args)
    p = spec.p if args.p is None else args.p
    _check_degree(p)
    result = _solve(spec, p, cfg, args)
    out = Path(args.out) if args.out else output.output_root() / f"{spec.name}_p{p}"
    output.write_run(result, out)
    summ = output.summary(result)
    for ev in result.removals:
        log.info("removal event: slab %d, elements %s", ev["slab"], ev["elements"])
    print(f"{spec.name} p={p}: {summ['reason']} after {summ['iterations']} iterations, "
          f"|R|={summ['norm']:.3e} (dg {summ['norm_dg']:.3e}, ice {summ['norm_ice']:.3e})")
    for name, err in summ["log10_l2_error"].items():
        print(f"  log10 L2 error {name}: {err:.4f}")
    print(f"  removed cells: {sum(len(ev['elements']) for ev in result.removals)}")
    print(f"  written to {out}")
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_study(args) -> int:
    spec, cfg = _setup(args)
    if len(args.p) < 2:
        log.warning("a single degree gives no slope")
    rows = []
    for p in args.p:
        _check_degree(p)
    for p in args.p:
        try:
            result = _solve(spec, p, cfg, args)
        except Exception as exc:  # a failed row is reported, the table goes on
            log.error("degree %d failed: %s", p, exc)
            rows.append({"p": p, "dofs": None, "log_inv_sqrt_dof": None,
                         "log10_error": None, "converged": False})
            continue
        dofs = result.flow_dofs()
        errs = output.field_errors(result)
        err = errs.get("density", errs.get("u"))
        rows.append({"p": p, "dofs": dofs, "log_inv_sqrt_dof": math.log10(1 / math.sqrt(dofs)),
                     "log10_error": err, "converged": result.converged})
    table = output.study_table(rows)
    text = output.format_study(table)
    out = Path(args.out) if args.out else output.output_root() / f"{spec.name}_study"
    out.mkdir(parents=True, exist_ok=True)
    (out / "study.csv").write_text(text)
    sys.stdout.write(text)
    if not all(r["converged"] for r in table):
        print("# partial table: some rows did not converge")
        return EXIT_NONCONVERGED
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
        return cmd_run(args) if args.command == "run" else cmd_study(args)
    except UsageError as exc:
        print(f"mdgice: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
