#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Workloads mirror the hot paths of a real proof session: nested-DFS
emptiness on a pattern product, reachability, SCC decomposition, and
Monte-Carlo run sampling.

    python3 bench/bench_kernels.py [--walk-size 400] [--samples 20000]
"""
import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from coinpattern.checker import build_product, word_automaton  # noqa: E402
from coinpattern.kernels import _pure  # noqa: E402
from coinpattern.lang import lower, parse  # noqa: E402
from coinpattern.semantics import build  # noqa: E402

try:
    from coinpattern.kernels import _core
except ImportError:
    _core = None


def walk_program(size):
    return lower(parse(f"""
program bench;
var k : 0..{size + 1} = 1;
var c : 0..1 = 0;
begin
  while (0 < k && k <= {size}) {{
    c := coin(1/2);
    if (c == 1) {{ k := k + 1; }} else {{ k := k - 1; }}
  }}
end
"""))


def timeit(fn, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--walk-size", type=int, default=400)
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--cap", type=int, default=200_000)
    args = ap.parse_args()

    space = build(walk_program(args.walk_size))
    product = build_product(space, word_automaton("0" * 12))
    n = space.n_nodes
    print(f"walk of size {args.walk_size}: {n} nodes, "
          f"{space.n_transitions} transitions, product "
          f"{len(product.indptr) - 1} states / {len(product.dst)} edges")

    backends = [("pure", _pure)]
    if _core is not None:
        backends.append(("compiled", _core))
    else:
        print("compiled backend unavailable; showing pure only")

    term_mask = (space.non_top_mask == 0).astype(np.uint8)
    choice = np.full(n, -1, dtype=np.int64)
    active = np.ones(len(product.indptr) - 1, dtype=np.uint8)

    rows = []
    for name, impl in backends:
        t_dfs, r1 = timeit(lambda: impl.cvwy_lasso(
            product.indptr, product.dst, product.starts,
            product.accepting, product.active))
        t_reach, r2 = timeit(lambda: impl.forward_reachable(
            product.indptr, product.dst, product.starts, active))
        t_scc, r3 = timeit(lambda: impl.tarjan_scc(
            product.indptr, product.dst, active))
        t_mc, r4 = timeit(lambda: impl.sample_runs(
            space.indptr, space.dst, space.label, space.pnum, space.pden,
            choice, int(space.init[0]), term_mask, args.samples, args.cap,
            n + 1, 7), repeat=1)
        rows.append((name, t_dfs, t_reach, t_scc, t_mc, r4))
        print(f"{name:9s} nested-dfs {t_dfs * 1e3:9.2f} ms   "
              f"reach {t_reach * 1e3:8.2f} ms   scc {t_scc * 1e3:8.2f} ms   "
              f"sampling {t_mc * 1e3:9.2f} ms   (terminated {r4[0]})")

    if len(rows) == 2:
        _, *pure_times, pr = rows[0]
        _, *core_times, cr = rows[1]
        assert pr == cr, "backends disagreed on the sampled counts"
        speedups = [p / c if c > 0 else float('inf')
                    for p, c in zip(pure_times, core_times)]
        print("speedup   nested-dfs {:6.1f}x   reach {:6.1f}x   "
              "scc {:6.1f}x   sampling {:6.1f}x".format(*speedups))


if __name__ == "__main__":
    main()
