"""Compare the compiled and pure-Python batch ray tracers.

    python benchmarks/bench_trace.py [--rays N] [--repeat K] [--threads T]

Bodies: the flat plate, a Newton optimum (polyline, h = 2), a zigzag body
(h = 2, m = 8, delta = 0.025) and a parabolic chain (h = 0.2).  Reports
rays per second for each backend and checks that both agree bit for bit on
status and bounce count and to 1e-12 on the exit velocity.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from minresist import solve
from minresist.billiard import flat_top_body, profile_body, trace_many
from minresist.billiard.trace import BACKEND
from minresist.zigzag import approximate_profile, assemble_zigzag, chain_body


def bodies():
    yield "flat", flat_top_body(1.0)
    yield "newton h=2", profile_body(solve("newton", 2.0), n=1000)
    pp = approximate_profile(solve("nonconvex", 2.0), 8)
    yield "zigzag d=0.025", assemble_zigzag(pp, 0.025)
    yield "chain h=0.2", chain_body(0.2)


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    if BACKEND != "compiled":
        print("compiled extension not built; only the Python backend is available",
              file=sys.stderr)
    xs = (np.arange(args.rays) + 0.5) / args.rays
    print(f"{'body':<16}{'elements':>9}{'python r/s':>14}{'compiled r/s':>14}{'speedup':>9}")
    for name, body in bodies():
        n_py = min(args.rays, 2000)
        t_py, ref = best_of(lambda: trace_many(body, xs[:: max(1, args.rays // n_py)],
                                               backend="python"), 1)
        rate_py = len(ref[0]) / t_py
        if BACKEND == "compiled":
            t_c, got = best_of(lambda: trace_many(body, xs, threads=args.threads,
                                                  backend="compiled"), args.repeat)
            rate_c = args.rays / t_c
            sub = slice(None, None, max(1, args.rays // n_py))
            same = (np.array_equal(ref[3], got[3][sub]) and np.array_equal(ref[2], got[2][sub])
                    and np.allclose(ref[1], got[1][sub], atol=1e-12, rtol=0))
            flag = "" if same else "  MISMATCH"
            print(f"{name:<16}{body.n_elements:>9}{rate_py:>14.0f}{rate_c:>14.0f}"
                  f"{rate_c / rate_py:>8.0f}x{flag}")
        else:
            print(f"{name:<16}{body.n_elements:>9}{rate_py:>14.0f}{'-':>14}{'-':>9}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
