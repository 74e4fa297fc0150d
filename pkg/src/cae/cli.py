"""Command-line front end.

Subcommands: expand, validate, special, gevrey, canard, resonance.
Exit codes: 0 success, 2 validation/feasibility failure, 1 usage or I/O
error.  Output is deterministic: '.' decimal CSV, floats at 17 significant
digits, no timestamps (a version field appears only under --stamp).
File formats are documented in docs/formats.md.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from ._scalar import fmt17
from .errors import CaeError, CompatibilityError, InfeasibleError
from .series import CombinedSeries, TaylorPoly, evaluate_partial_sum
from .special import eval_u, u_tail
from .turning import ODESpec, combined_from_matching
from .validate import bounded_solution_quadrature, error_scaling, ode_solve
from .gevrey import gevrey_fit
from .canard import (
    angular_canard_value,
    canard_control_series,
    union_jack_anchor_residual,
    union_jack_c0,
)
from .resonance import ResonanceCase, condition_check, riccati_leading_check, z0_polynomial

USAGE_ERROR, OK, CHECK_FAILED = 1, 0, 2


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CAE_THREADS", "1")))
    except ValueError:
        return 1


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_dump(doc, stamp: bool) -> str:
    if stamp:
        doc = dict(doc)
        doc["stamp"] = {"version": __version__}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _float_list(text: str):
    return [float(v) for v in text.split(",") if v != ""]


def _int_list(text: str):
    return [int(v) for v in text.split(",") if v != ""]


def _grid(text: str):
    lo, hi, n = text.split(":")
    return np.linspace(float(lo), float(hi), int(n))


def _load_spec(path: str) -> ODESpec:
    with open(path) as fh:
        doc = json.load(fh)
    return ODESpec.from_json(doc)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_expand(args) -> int:
    spec = _load_spec(args.spec)
    sigma = -1 if args.side == "minus" else 1
    series = combined_from_matching(spec, args.order, sigma, tol=args.tol)
    doc = series.to_json()
    _emit(_json_dump(doc, args.stamp), args.out)
    return OK


def _cmd_validate(args) -> int:
    spec = _load_spec(args.spec)
    sigma = -1 if args.side == "minus" else 1
    orders = _int_list(args.orders)
    eps_list = _float_list(args.eps)
    x_grid = _grid(args.xgrid)
    series = combined_from_matching(spec, max(orders) + 1, sigma)
    truth = _truth_for(spec, series, sigma, x_grid)

    def table_for(N):
        return error_scaling(series, truth, eps_list, x_grid, N)

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tables = list(pool.map(table_for, orders))
    else:
        tables = [table_for(N) for N in orders]

    lines = ["N,eps,sup_error,slope"]
    for N, tab in zip(orders, tables):
        for i, (eps, err) in enumerate(tab.rows):
            last = i == len(tab.rows) - 1
            slope = ""
            if last:
                slope = "degenerate" if tab.degenerate else fmt17(tab.slope)
            lines.append(f"{N},{fmt17(eps)},{fmt17(err)},{slope}")
    _emit("\n".join(lines) + "\n", args.out)
    return OK


def _truth_for(spec: ODESpec, series: CombinedSeries, sigma: int, x_grid):
    """Quadrature ground truth for y-linear specs; trajectory fallback
    launched from the series value beyond the grid edge otherwise."""
    F = TaylorPoly([0] * spec.p + [1])
    if spec.linear_in_y:
        def g_eps(eps):
            polys = {}
            for (j, l), c in spec.h.items():
                polys[j] = polys.get(j, 0) + float(c) * eps ** l
            deg = max(polys, default=-1)
            return TaylorPoly([polys.get(j, 0.0) for j in range(deg + 1)])

        def truth(x, eps):
            g = g_eps(eps)
            return bounded_solution_quadrature(F, lambda t: g(t), eps, x, sigma)

        return truth

    edge = min(x_grid) - 0.25 if sigma < 0 else max(x_grid) + 0.25

    def truth(x, eps):
        eta = eps ** (1.0 / spec.p)
        x0 = edge
        y0 = evaluate_partial_sum(series, x0, eta)

        def rhs(t, y):
            val = spec.p * t ** (spec.p - 1) * y
            for (j, l), c in spec.h.items():
                val += eps * float(c) * t ** j * eps ** l
            for (j, k, l), c in spec.P.items():
                val += float(c) * t ** j * y ** (k + 1) * eps ** l
            return val / eps

        tr = ode_solve(rhs, (x0, x), y0, tol=1e-11)
        return tr.final

    return truth


def _cmd_special(args) -> int:
    if args.fn != "U":
        raise CaeError(f"unknown special function {args.fn!r}")
    sigma = -1 if args.sigma == "minus" else 1
    val = eval_u(args.p, args.k, sigma, args.x)
    tail = u_tail(args.p, args.k, depth=args.depth)
    lines = [f"# U_{args.k}^{args.sigma}({fmt17(args.x)}) = {fmt17(val)}",
             "M,partial,abs_diff"]
    terms = sorted(tail.coeffs.items())
    partial = 0.0
    for i, (m, c) in enumerate(terms, start=1):
        partial += float(c) * args.x ** (-m)
        lines.append(f"{i},{fmt17(partial)},{fmt17(abs(partial - val))}")
    _emit("\n".join(lines) + "\n", args.out)
    return OK


def _cmd_gevrey(args) -> int:
    if args.action != "fit":
        raise CaeError(f"unknown gevrey action {args.action!r}")
    with open(args.coeffs) as fh:
        norms = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            norms.append(abs(float(line.split(",")[0])))
    fit = gevrey_fit(norms, args.p)
    doc = {
        "inv_order": fit.inv_order,
        "C": fit.C,
        "L1": fit.L1,
        "residual": fit.residual,
        "degenerate": fit.degenerate,
        "sub_gevrey": fit.sub_gevrey,
    }
    _emit(_json_dump(doc, args.stamp), args.out)
    return OK


def _cmd_canard(args) -> int:
    if args.problem == "unionjack":
        c0 = union_jack_c0(tol=args.tol, mirror=args.mirror)
        doc = {
            "value": c0,
            "iterations": int(math.ceil(math.log2(1.0 / args.tol))),
            "residuals": {
                "bracket": args.tol,
                "anchor": union_jack_anchor_residual(c0),
            },
        }
    elif args.problem == "angular":
        eps_list = _float_list(args.eps)
        doc = {
            "values": [
                {"eps": e, "value": angular_canard_value(e, tol=args.tol)}
                for e in eps_list
            ],
            "residuals": {"root_tol": args.tol},
        }
    elif args.problem == "criterion":
        spec = _load_spec(args.spec)
        alphas = canard_control_series(spec, args.order)
        doc = {"alphas": alphas, "grading": "eta", "p": spec.p}
    else:
        raise CaeError(f"unknown canard problem {args.problem!r}")
    _emit(_json_dump(doc, args.stamp), args.out)
    return OK


def _cmd_resonance(args) -> int:
    case = ResonanceCase(args.alpha, args.beta, args.p)
    ok = condition_check(case)
    doc = {"condition": ok, "D": float(case.D), "Z0": None,
           "riccati_residual": None}
    if ok:
        z = z0_polynomial(case)
        doc["Z0"] = [float(c) for c in z.coeffs]
        doc["riccati_residual"] = riccati_leading_check(
            case, [3.0, -3.0, 5.0, -5.0, 10.0, -10.0]
        )
    _emit(_json_dump(doc, args.stamp), args.out)
    return OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cae",
        description="combined slow/fast expansions at turning points",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--stamp", action="store_true",
                       help="add a version field to JSON output")

    p = sub.add_parser("expand", help="combined series of a turning-point spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--side", choices=["minus", "plus"], default="minus")
    p.add_argument("--tol", type=float, default=1e-9)
    common(p)
    p.set_defaults(run=_cmd_expand)

    p = sub.add_parser("validate", help="error-scaling table against ground truth")
    p.add_argument("--spec", required=True)
    p.add_argument("--orders", required=True, help="comma list, e.g. 1,2,3")
    p.add_argument("--eps", required=True, help="comma list, decreasing")
    p.add_argument("--xgrid", required=True, help="lo:hi:n")
    p.add_argument("--side", choices=["minus", "plus"], default="minus")
    common(p)
    p.set_defaults(run=_cmd_validate)

    p = sub.add_parser("special", help="special-function values and tails")
    p.add_argument("fn", choices=["U"])
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--sigma", choices=["minus", "plus"], default="minus")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--depth", type=int, default=12)
    common(p)
    p.set_defaults(run=_cmd_special)

    p = sub.add_parser("gevrey", help="Gevrey constant fitting")
    p.add_argument("action", choices=["fit"])
    p.add_argument("--coeffs", required=True, help="CSV file, one norm per line")
    p.add_argument("--p", type=int, required=True)
    common(p)
    p.set_defaults(run=_cmd_gevrey)

    p = sub.add_parser("canard", help="canard values")
    p.add_argument("problem", choices=["unionjack", "angular", "criterion"])
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--mirror", action="store_true")
    p.add_argument("--eps", default="0.01,0.02,0.04")
    p.add_argument("--spec", default=None)
    p.add_argument("--order", type=int, default=4)
    common(p)
    p.set_defaults(run=_cmd_canard)

    p = sub.add_parser("resonance", help="resonance condition and Z0")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    common(p)
    p.set_defaults(run=_cmd_resonance)

    return ap


_VALUE_FLAGS = {"--xgrid", "--x", "--eps", "--alpha", "--beta", "--tol"}


def _merge_negative_values(argv):
    """Join '--flag -value' into '--flag=-value' so argparse does not read
    leading-dash values (negative numbers, lo:hi:n grids) as options."""
    out = []
    it = iter(argv)
    for a in it:
        if a in _VALUE_FLAGS:
            try:
                v = next(it)
            except StopIteration:
                out.append(a)
                break
            out.append(f"{a}={v}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    ap = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = _merge_negative_values(list(argv))
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else OK
    try:
        return args.run(args)
    except (InfeasibleError, CompatibilityError) as exc:
        sys.stderr.write(f"check failed: {exc}\n")
        return CHECK_FAILED
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return USAGE_ERROR
    except CaeError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
