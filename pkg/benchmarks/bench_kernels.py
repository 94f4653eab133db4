"""Compiled vs numpy residual kernel timings.

Times one residual evaluation and one colored finite-difference Jacobian
for each built-in Euler problem and degree, then prints a table and the
speed-up of the compiled kernel.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from mdgice import kernels
from mdgice.problems import builtin, initialize_unknowns
from mdgice.solver import make_disc

CASES = [("sod", 1), ("sod", 2), ("sod", 3), ("receding123", 2), ("noh", 1)]


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(name, p, backend, repeat):
    spec = builtin(name)
    disc = make_disc(spec, spec.build_mesh(), p, spec.initial_condition, backend)
    u = initialize_unknowns(spec, disc)
    u[:disc.n_flow] *= 1 + 0.01 * np.random.default_rng(0).standard_normal(disc.n_flow)
    disc.jacobian(u)  # builds the sparsity pattern and coloring once
    return (best_time(lambda: disc.residual(u), repeat),
            best_time(lambda: disc.jacobian(u), repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not kernels.HAVE_COMPILED:
        print("compiled kernel not built; nothing to compare")
        return 1
    print(f"{'case':<16}{'what':<10}{'python [ms]':>13}{'compiled [ms]':>15}{'speed-up':>10}")
    for name, p in CASES:
        tp = bench(name, p, "python", args.repeat)
        tc = bench(name, p, "compiled", args.repeat)
        for what, a, b in zip(("residual", "jacobian"), tp, tc):
            print(f"{name + ' P' + str(p):<16}{what:<10}{1e3 * a:>13.3f}{1e3 * b:>15.3f}"
                  f"{a / b:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
