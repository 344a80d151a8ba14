"""Command-line front end (``minresist``).

Exit codes: 0 success, 2 input error, 3 regime or precondition error,
4 regularity violation.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import billiard, solver, zigzag
from .billiard.trace import DEFAULT_CAP, STATUS_NAMES
from .errors import InputError, MinResistError, RegimeError, RegularityError
from .kernels import Kernel, convexify


def fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.17g" % float(v)


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def load_case(case: str):
    if case.startswith("custom:"):
        return Kernel.from_json(case.split(":", 1)[1])
    return Kernel.by_name(case)


def _quad(args):
    return billiard.QuadratureSpec(panels=args.panels, cap=args.bounce_cap)


# -- commands ---------------------------------------------------------------

def cmd_solve(args):
    kernel = load_case(args.case)
    sol = solver.solve(kernel, args.height)
    summary = sol.summary()
    x, f, slope = sol.sample(args.samples)
    if args.out:
        if args.format == "json":
            emit(dump_json({"summary": summary, "x": x, "f": f, "slope": slope}), args.out)
        else:
            emit(write_csv(["x", "f", "slope"], zip(x, f, slope)), args.out)
    sys.stdout.write(dump_json(summary))
    return 0


def cmd_kernel(args):
    kernel = load_case(args.case)
    env = convexify(kernel, numeric=args.numeric or None)
    info = {"kernel": kernel.name, "p0": kernel.p0, "u0": env.u0, "xi0": env.xi0,
            "tail_c": kernel.tail_c, "tail_alpha": kernel.tail_alpha}
    if args.out:
        u = np.linspace(0.0, args.u_max, args.samples)
        emit(write_csv(["u", "p", "pbar"], zip(u, kernel(u), env.value(u))), args.out)
    sys.stdout.write(dump_json(info))
    return 0


def cmd_trace(args):
    body = billiard.Body2D.from_json(args.body)
    if args.x:
        xs = np.asarray(args.x, dtype=float)
    else:
        xs = (np.arange(args.samples) + 0.5) / args.samples
    vx, vz, b, st = billiard.trace_many(body, xs, cap=args.bounce_cap)
    names = STATUS_NAMES
    rows = [(x, a, c, int(k), names[int(s)]) for x, a, c, k, s in zip(xs, vx, vz, b, st)]
    emit(write_csv(["x", "vx", "vz", "bounces", "status"], rows), args.out)
    return 0


def cmd_resist(args):
    body = billiard.Body2D.from_json(args.body)
    quad = _quad(args)
    res = billiard.resistance(body, quad)
    out = {"resistance": res.value, "error": res.error, "resistance_3d": 2 * math.pi * res.value,
           "rays": res.rays, "panels": res.panels, "singular": res.singular,
           "cap_exceeded": len(res.cap_exceeded)}
    if args.hull:
        out["modified_hull"] = billiard.modified_resistance(billiard.convex_hull(body))
    if body.meta.get("kind") == "chain":
        parts = zigzag.chain_resistance(body, quad)
        out["chain"] = {k: parts[k] for k in ("center", "parabolic", "closure", "closed_form")}
    emit(dump_json(out), args.out)
    return 0


def cmd_zigzag(args):
    kernel = load_case(args.case)
    sol = solver.solve(kernel, args.height)
    pp = zigzag.approximate_profile(sol, args.segments, nodes=args.nodes)
    zigzag.check_delta(pp, args.delta)
    body = zigzag.assemble_zigzag(pp, args.delta)
    body.validate()
    emit(body.dumps() + "\n", args.out)
    if args.debug:
        cells = [c.debug() for c in zigzag.zigzag_cells(pp, args.delta)]
        with open(args.debug, "w") as fh:
            fh.write(dump_json({"delta": args.delta, "cells": cells}))
    return 0


def cmd_chain(args):
    body = zigzag.chain_body(args.height)
    body.validate()
    emit(body.dumps() + "\n", args.out)
    return 0


COMPARE_COLUMNS = ["h", "R_nc", "R_si", "R_N", "x0_nc", "x0_si", "x0_N",
                   "ratio_R_nc_N", "ratio_x0_si_N"]


def compare_rows(heights):
    rows = []
    for h in heights:
        nc = solver.solve("nonconvex", h)
        nt = solver.solve("newton", h)
        si = solver.solve("single_impact", h) if h > solver.M_STAR else None
        rows.append([h, nc.resistance, si.resistance if si else None, nt.resistance,
                     nc.x0, si.x0 if si else None, nt.x0, nc.resistance / nt.resistance,
                     si.x0 / nt.x0 if si else None])
    return rows


def cmd_compare(args):
    heights = args.heights or [0.001, 0.1, 0.5, 1, 2, 5, 10, 100, 1000]
    emit(write_csv(COMPARE_COLUMNS, compare_rows(heights)), args.out)
    return 0


# -- parser -----------------------------------------------------------------

def _height(text):
    v = float(text)
    if not v >= 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("height must be a finite number >= 0")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="minresist",
                                description="Minimal-resistance profiles and billiard bodies.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimal profile of given height")
    s.add_argument("--case", default="nonconvex",
                   help="nonconvex | newton | single-impact | custom:<kernel.json>")
    s.add_argument("--height", type=_height, required=True)
    s.add_argument("--samples", type=_positive_int, default=201)
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_solve)

    k = sub.add_parser("kernel", help="convexification data of a kernel")
    k.add_argument("--case", default="nonconvex")
    k.add_argument("--numeric", action="store_true", help="force the sampled hull")
    k.add_argument("--samples", type=_positive_int, default=1001)
    k.add_argument("--u-max", type=float, default=10.0)
    k.add_argument("--out")
    k.set_defaults(func=cmd_kernel)

    t = sub.add_parser("trace", help="trace vertical rays through a body")
    t.add_argument("--body", required=True)
    t.add_argument("--samples", type=_positive_int, default=100)
    t.add_argument("--x", type=float, nargs="+")
    t.add_argument("--bounce-cap", type=_positive_int, default=DEFAULT_CAP)
    t.add_argument("--out")
    t.set_defaults(func=cmd_trace)

    r = sub.add_parser("resist", help="billiard resistance of a body")
    r.add_argument("--body", required=True)
    r.add_argument("--panels", type=_positive_int, default=256)
    r.add_argument("--bounce-cap", type=_positive_int, default=DEFAULT_CAP)
    r.add_argument("--hull", action="store_true", help="also report the hull's modified resistance")
    r.add_argument("--out")
    r.set_defaults(func=cmd_resist)

    z = sub.add_parser("zigzag", help="zigzag body approximating an optimal hull")
    z.add_argument("--case", default="nonconvex")
    z.add_argument("--height", type=_height, required=True)
    z.add_argument("--segments", type=_positive_int, default=8)
    z.add_argument("--delta", type=float, required=True)
    z.add_argument("--nodes", choices=("uniform", "equislope"), default="uniform")
    z.add_argument("--debug", help="write the construction points of every cell here")
    z.add_argument("--out")
    z.set_defaults(func=cmd_zigzag)

    c = sub.add_parser("chain", help="single-impact parabolic chain body")
    c.add_argument("--height", type=_height, required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_chain)

    m = sub.add_parser("compare", help="table of the three kernels over heights")
    m.add_argument("--heights", type=float, nargs="+")
    m.add_argument("--out")
    m.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RegularityError as exc:
        xs = ", ".join("%.17g" % x for x in exc.xs[:20])
        sys.stderr.write(f"minresist: regularity violation: {exc}\n  x: {xs}\n")
        return exc.exit_code
    except RegimeError as exc:
        sys.stderr.write(f"minresist: {exc}\n")
        return exc.exit_code
    except MinResistError as exc:
        extra = f" [{exc.constraint}]" if getattr(exc, "constraint", None) else ""
        sys.stderr.write(f"minresist: {exc}{extra}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"minresist: {exc}\n")
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
