"""Command-line front end.

Every command writes one JSON document (or CSV with a fixed header) and exits
0 when all certified checks pass, 1 when a check failed or was inconclusive,
2 on invalid arguments or domain violations. Errors go to stderr as a single
line ``ERROR <code>: message``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import re
import sys
from fractions import Fraction

from . import __version__
from .derivatives import taylor_coefficient, time_derivative
from .numerics import Ball, Undecidable
from .numerics.precision import DEFAULT_PREC, DomainError, NumericsError, PrecisionError, SignIndeterminate, check_prec
from .solutions import Kind, SolutionId, evaluate

SCHEMA_VERSION = 1

CSV_COLUMNS = {
    "eval": ["x", "t", "mid", "rad", "terms_used", "tail_bound"],
    "derivative": ["n", "x0", "t0", "mid", "rad", "sign", "log10_abs", "terms_used"],
    "taylor": ["n", "N", "log10_root", "log10_floor", "below_floor"],
    "proof-replay": ["x0", "t0", "N", "m_N", "dominance", "lower_bound_ok", "chain_ok", "log10_root"],
    "envelope": ["x", "t", "log10_ratio", "ok", "regime_ok"],
    "residual": ["x", "t", "residual_mid", "residual_rad"],
    "walczak": ["t", "n_argmax", "sup_mid", "sup_rad"],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- argument values --------------------------------------------------------------

_SQRT = re.compile(r"^(-)?sqrt\((.+)\)$")


class Surd:
    """sqrt(q) for rational q >= 0, evaluated at whatever precision is asked."""

    def __init__(self, q: Fraction, negative: bool = False):
        if q < 0:
            raise UsageError(f"sqrt of a negative number: {q}")
        self.q = q
        self.negative = negative

    def __call__(self, prec: int) -> Ball:
        b = Ball.coerce(self.q, prec).sqrt()
        return -b if self.negative else b

    def __str__(self):
        return f"{'-' if self.negative else ''}sqrt({self.q})"


def parse_value(s: str):
    """Exact rational from '3', '-0.25', '1/3', '1e-3'; or a Surd from 'sqrt(2)'."""
    s = s.strip()
    m = _SQRT.match(s)
    if m:
        return Surd(parse_value(m.group(2)), bool(m.group(1)))
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse number {s!r}") from None


def as_ball(v, prec: int) -> Ball:
    return v(prec) if isinstance(v, Surd) else Ball.coerce(v, prec)


def parse_range(s: str):
    """'a:b' -> range(a, b + 1); 'a' -> [a]."""
    parts = s.split(":")
    try:
        if len(parts) == 1:
            return [int(parts[0])]
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"bad integer range {s!r}") from None
    if b < a:
        raise UsageError(f"empty range {s!r}")
    return list(range(a, b + 1))


def parse_axis(s: str):
    """'lo:hi:n' -> (lo, hi, n)."""
    parts = s.split(":")
    if len(parts) != 3:
        raise UsageError(f"axis must be lo:hi:n, got {s!r}")
    lo, hi = parse_value(parts[0]), parse_value(parts[1])
    if isinstance(lo, Surd) or isinstance(hi, Surd):
        raise UsageError("grid ends must be rational")
    try:
        n = int(parts[2])
    except ValueError:
        raise UsageError(f"bad point count in {s!r}") from None
    if n < 1 or hi < lo:
        raise UsageError(f"bad axis {s!r}")
    return lo, hi, n


def nodes(lo, hi, n):
    if n == 1:
        return [lo]
    return [lo + (hi - lo) * Fraction(i, n - 1) for i in range(n)]


def solution_from(args) -> SolutionId:
    kind = args.solution
    if kind == "weps":
        if args.eps is None:
            raise UsageError("--eps is required for --solution weps")
        eps = parse_value(args.eps)
        if isinstance(eps, Surd):
            raise UsageError("--eps must be rational")
        return SolutionId.weps(eps)
    if args.eps is not None:
        raise UsageError(f"--eps only applies to weps, not {kind}")
    return SolutionId(Kind(kind))


def check_half_plane(sol: SolutionId, x, prec: int):
    sol.check_x(as_ball(x, prec))


def _fmt(v) -> str:
    return str(v)


def _log10(sl):
    if sl is None:
        return None
    if sl.is_zero:
        return "-inf"
    return round(sl.log10(), 6)


# -- commands -----------------------------------------------------------------------


def cmd_eval(args):
    sol = solution_from(args)
    prec = args.prec
    target = None if args.target_rad is None else parse_value(args.target_rad)
    if args.grid:
        xa, ta = args.grid.split(",")
        pts = [(x, t) for x in nodes(*parse_axis(xa)) for t in nodes(*parse_axis(ta))]
    else:
        if args.x is None or args.t is None:
            raise UsageError("eval needs --x and --t (or --grid)")
        pts = [(parse_value(args.x), parse_value(args.t))]
    results, rows = [], []
    for x, t in pts:
        check_half_plane(sol, x, prec)
        xv = as_ball(x, prec + 32) if isinstance(x, Surd) else x
        tv = as_ball(t, prec + 32) if isinstance(t, Surd) else t
        r = evaluate(sol, xv, tv, target, prec, args.terms)
        d = r.to_json()
        d.update({"x": _fmt(x), "t": _fmt(t)})
        results.append(d)
        rows.append([_fmt(x), _fmt(t), d["value"]["mid"], d["value"]["rad"], r.terms_used, d["tail_bound"]["rad"] if r.tail_bound.is_exact_zero() else d["tail_bound"]["mid"]])
    certified = all(not r.get("flagged") for r in results)
    return results, rows, certified


def cmd_derivative(args):
    sol = solution_from(args)
    x0, t0 = parse_value(args.x0), parse_value(args.t0)
    check_half_plane(sol, x0, args.prec)
    results, rows = [], []
    ok = True
    for n in parse_range(args.n):
        d = time_derivative(sol, n, x0, t0, args.prec)
        j = d.to_json()
        j.update({"x0": _fmt(x0), "t0": _fmt(t0)})
        results.append(j)
        rows.append([n, _fmt(x0), _fmt(t0), j["value"]["mid"], j["value"]["rad"], j["sign"], j["log10_abs"], d.terms_used])
        ok = ok and d.sign_determined
    return results, rows, ok


def cmd_taylor(args):
    sol = solution_from(args)
    x0, t0 = parse_value(args.x0), parse_value(args.t0)
    check_half_plane(sol, x0, args.prec)
    results, rows = [], []
    ok = True
    if args.N_range:
        if sol.kind is Kind.U2:
            raise UsageError("the growth scan applies to u1 and weps")
        from .diagnostics import taylor_growth_scan

        x0b = x0 if not isinstance(x0, Surd) else as_ball(x0, args.prec)
        for row in taylor_growth_scan(sol, x0b, t0, parse_range(args.N_range), args.prec):
            results.append(row.to_json())
            rows.append([row.n, row.N, _log10(row.root), _log10(row.floor), row.below_floor])
            ok = ok and not row.below_floor and row.combined_ok is not False
    else:
        for n in parse_range(args.n):
            if n < 1:
                raise UsageError("Taylor roots need n >= 1")
            root = taylor_coefficient(sol, n, x0, t0, args.prec)
            results.append({"n": n, "root": None if root is None else root.to_json(), "log10_root": _log10(root)})
            rows.append([n, "", _log10(root), "", ""])
            ok = ok and root is not None
    return results, rows, ok


def cmd_proof_replay(args):
    from .diagnostics import find_N0, replay_level

    sol = solution_from(args)
    if sol.kind is Kind.U2:
        raise UsageError("proof-replay applies to u1 and weps")
    x0 = parse_value(args.x0)
    if isinstance(x0, Surd):
        raise UsageError("--x0 must be rational for proof replay")
    check_half_plane(sol, x0, args.prec)
    t0s = [parse_value(t) for t in (args.t0 or ["0", "1", "sqrt(2)"])]
    nmax = min(args.nmax, 30)
    N0 = find_N0(sol, x0, nmax, args.prec)
    results, rows = [], []
    if N0 is None:
        results.append({"N0": None, "Nmax": nmax})
        return results, rows, False
    ok = True
    top = min(N0 + args.levels, nmax if sol.kind is Kind.U1 else min(nmax, 25), 30)
    for t0 in t0s:
        for N in range(N0, top + 1):
            rec = replay_level(sol, x0, t0, N, args.prec)
            j = rec.to_json()
            j["N0"] = N0
            results.append(j)
            rows.append([_fmt(x0), _fmt(t0), N, rec.m_N, rec.dominance, rec.lower_bound_ok, j["chain_ok"], j["coefficient_root_log10"]])
            ok = ok and rec.dominance is True and rec.lower_bound_ok is True
    return results, rows, ok


def cmd_envelope(args):
    from .diagnostics import choose_K_checked, envelope_check, envelope_constants

    eps = parse_value(args.eps)
    if isinstance(eps, Surd) or not (0 < eps < 1):
        raise UsageError("--eps must be a rational in (0, 1)")
    cert = envelope_constants(eps, args.prec)
    results = [{"certificate": cert.to_json()}]
    rows = []
    ok = True
    if args.x_for_K is not None:
        kc = choose_K_checked(eps, parse_value(args.x_for_K), args.prec)
        results.append({"choose_K": {"x": args.x_for_K, "K": kc.K, "window_ok": kc.form1_ok and kc.form2_ok, "K_ge_4_over_eps": kc.k_ge_4_over_eps}})
        ok = ok and kc.form2_ok
    if args.check:
        xs = nodes(*parse_axis(args.x_axis))
        ts = nodes(*parse_axis(args.t_axis))
        chk = envelope_check(eps, cert, [(x, t) for x in xs for t in ts], args.prec)
        for r in chk.rows:
            j = r.to_json()
            rows.append([j["x"], j["t"], j["log10_ratio_upper"], j["ok"], j["regime_ok"]])
        results.append({"check": {"passed": chk.passed, "points": len(chk.rows), "max_ratio": chk.max_ratio.to_json(digits=12)}})
        ok = ok and chk.passed
    return results, rows, ok


def cmd_residual(args):
    from .diagnostics import cell_grid, residual_check

    sol = solution_from(args)
    xa, ta = args.grid.split(",")
    (xl, xh, nx), (tl, th, nt) = parse_axis(xa), parse_axis(ta)
    grid = cell_grid(xl, xh, nx, tl, th, nt)
    h = parse_value(args.h)
    if isinstance(h, Surd) or h <= 0:
        raise UsageError("--h must be a positive rational")
    if sol.half_plane and grid and min(x for x, _ in grid) - h < 0:
        raise DomainError("stencil leaves the half-plane x >= 0")
    rep = residual_check(sol, grid, h, args.prec)
    j = rep.to_json()
    rows = [[p["x"], p["t"], p["residual"]["mid"], p["residual"]["rad"]] for p in j["points"]]
    out = {"h": j["h"], "max_residual": j["max_residual"], "budget": j["budget"], "within_budget": rep.within_budget}
    ok = rep.within_budget
    if args.halve:
        rep2 = residual_check(sol, grid, h / 2, args.prec)
        ratio = float(rep.max_residual) / float(rep2.max_residual) if float(rep2.max_residual) else math.inf
        out["halved"] = {"max_residual": rep2.max_residual.to_json(digits=10), "ratio": round(ratio, 6)}
    return [out], rows, ok


def cmd_walczak(args):
    from .diagnostics import walczak_hypothesis_check

    x0, d0, A = parse_value(args.x0), parse_value(args.delta0), parse_value(args.A)
    lo, hi, n = parse_axis(args.t_grid)
    if args.random:
        rng = random.Random(args.seed)
        ts = sorted(lo + (hi - lo) * Fraction(rng.randint(1, 10**6), 10**6) for _ in range(n))
    else:
        # open at the left end so that every point has |t| > A when lo = A
        ts = [lo + (hi - lo) * Fraction(i, n) for i in range(1, n + 1)]
    L = None if args.L is None else float(parse_value(args.L))
    w = walczak_hypothesis_check(x0, d0, A, args.nmax, ts, args.prec, L)
    j = w.to_json()
    rows = [[j["argmax"]["t"] if j["argmax"] else "", j["argmax"]["n"] if j["argmax"] else "", j["sup_observed"]["mid"], j["sup_observed"]["rad"]]]
    return [j], rows, w.passed


def cmd_plot(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(args.input, newline="") as fh:
        data = list(csv.DictReader(fh))
    if not data:
        raise UsageError(f"{args.input} has no rows")
    cols = set(data[0])
    matplotlib.rcParams["svg.hashsalt"] = "nwheat"
    fig, ax = plt.subplots(figsize=(6, 4))
    if {"n", "log10_root"} <= cols:
        pts = [(int(r["n"]), float(r["log10_root"])) for r in data if r["log10_root"] not in ("", "-inf", "None")]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3)
        ax.set_xscale("log", base=2)
        ax.set_xlabel("order n")
        ax.set_ylabel("log10 (|h^(n)|/n!)^(1/n)")
    elif {"x", "log10_ratio"} <= cols:
        best = {}
        for r in data:
            if r["log10_ratio"] in ("", "None"):
                continue
            x = float(Fraction(r["x"]))
            best[x] = max(best.get(x, -math.inf), float(r["log10_ratio"]))
        xs = sorted(best)
        ax.plot(xs, [best[x] for x in xs], "-", lw=1)
        ax.set_xlabel("x")
        ax.set_ylabel("log10 max_t ratio")
    else:
        raise UsageError("CSV is neither a taylor nor an envelope table")
    fig.tight_layout()
    fig.savefig(args.output, format="svg", metadata={"Date": None})
    plt.close(fig)
    return [{"input": args.input, "output": args.output, "rows": len(data)}], [], True


COMMANDS = {
    "eval": cmd_eval,
    "derivative": cmd_derivative,
    "taylor": cmd_taylor,
    "proof-replay": cmd_proof_replay,
    "envelope": cmd_envelope,
    "residual": cmd_residual,
    "walczak": cmd_walczak,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nwheat", description="Certified evaluation of nowhere time-analytic heat solutions.")
    p.add_argument("--version", action="version", version=f"nwheat {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--prec", type=int, default=DEFAULT_PREC, help="working precision in bits")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--output", "-o", help="write here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized grids")
    sub = p.add_subparsers(dest="command", required=True)

    def solution_args(sp, default="u1"):
        sp.add_argument("--solution", choices=["u1", "u2", "weps"], default=default)
        sp.add_argument("--eps", help="exponent for weps, e.g. 1/2")

    sp = sub.add_parser("eval", parents=[common], help="evaluate a solution")
    solution_args(sp)
    sp.add_argument("--x")
    sp.add_argument("--t")
    sp.add_argument("--grid", help="x_lo:x_hi:nx,t_lo:t_hi:nt (nodes include the ends)")
    sp.add_argument("--target-rad")
    sp.add_argument("--terms", type=int)

    sp = sub.add_parser("derivative", parents=[common], help="time derivatives at a point")
    solution_args(sp)
    sp.add_argument("--n", required=True, help="order or range a:b")
    sp.add_argument("--x0", required=True)
    sp.add_argument("--t0", required=True)

    sp = sub.add_parser("taylor", parents=[common], help="Taylor coefficient roots")
    solution_args(sp)
    sp.add_argument("--x0", required=True)
    sp.add_argument("--t0", required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", help="orders a:b")
    g.add_argument("--N-range", dest="N_range", help="levels a:b, orders 2m_N and 2m_N+1 with floor")

    sp = sub.add_parser("proof-replay", parents=[common], help="replay the derivative lower bounds")
    solution_args(sp)
    sp.add_argument("--x0", required=True)
    sp.add_argument("--t0", action="append", help="repeatable; default 0, 1, sqrt(2)")
    sp.add_argument("--nmax", type=int, default=25, help="largest level searched for N0")
    sp.add_argument("--levels", type=int, default=5, help="replay N0..N0+levels")

    sp = sub.add_parser("envelope", parents=[common], help="growth-envelope constants")
    sp.add_argument("--eps", required=True)
    sp.add_argument("--check", action="store_true", help="sweep the grid against the envelope")
    sp.add_argument("--x-axis", default="-200:200:41")
    sp.add_argument("--t-axis", default="-10:10:21")
    sp.add_argument("--x-for-K", dest="x_for_K", help="also report choose_K at this x > 100")

    sp = sub.add_parser("residual", parents=[common], help="finite-difference heat residual")
    solution_args(sp)
    sp.add_argument("--grid", default="0:2:5,-1:1:5", help="cell-centred x_lo:x_hi:nx,t_lo:t_hi:nt")
    sp.add_argument("--h", default="1/1000")
    sp.add_argument("--halve", action="store_true", help="also run at h/2 and report the ratio")

    sp = sub.add_parser("walczak", parents=[common], help="uniform Taylor bound of the shifted kernel")
    sp.add_argument("--x0", default="0")
    sp.add_argument("--delta0", default="1/2")
    sp.add_argument("--A", default="1")
    sp.add_argument("--nmax", type=int, default=40)
    sp.add_argument("--t-grid", default="1:100:99", help="lo:hi:n, points in (lo, hi]")
    sp.add_argument("--random", action="store_true", help="random points (see --seed)")
    sp.add_argument("--L")

    sp = sub.add_parser("plot", parents=[common], help="SVG from a taylor or envelope CSV")
    sp.add_argument("--input", "-i", required=True)
    return p


def _emit(args, results, rows, certified, out):
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("output", "format", "command")}
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS[args.command])
        w.writerows(rows)
    else:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": args.command,
            "params": params,
            "results": results,
            "certified": certified,
        }
        out.write(json.dumps(doc, indent=2, default=str))
        out.write("\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "plot":
            if not args.output:
                raise UsageError("plot needs --output FILE.svg")
            if args.format == "csv":
                raise UsageError("plot writes SVG only")
        else:
            check_prec(args.prec)
        results, rows, certified = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"ERROR usage: {e}", file=sys.stderr)
        return 2
    except (DomainError, PrecisionError) as e:
        print(f"ERROR domain: {e}", file=sys.stderr)
        return 2
    except (Undecidable, SignIndeterminate) as e:
        print(f"ERROR inconclusive: {e}", file=sys.stderr)
        return 1
    except NumericsError as e:
        print(f"ERROR numerics: {e}", file=sys.stderr)
        return 1
    except (ValueError, ZeroDivisionError) as e:
        print(f"ERROR domain: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"ERROR io: {e}", file=sys.stderr)
        return 2
    if args.command != "plot":
        buf = io.StringIO()
        _emit(args, results, rows, certified, buf)
        if args.output:
            with open(args.output, "w", newline="") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
    else:
        print(json.dumps({"schema_version": SCHEMA_VERSION, "command": "plot", "results": results, "certified": True}))
    return 0 if certified else 1


if __name__ == "__main__":
    sys.exit(main())
