"""Time the pure-Python and compiled MPFR kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--prec 256]

Both backends are also checked for overlapping results before timing.
"""

from __future__ import annotations

import argparse
import timeit
from fractions import Fraction

from nwheat.numerics import kernels
from nwheat.numerics.ball import Ball


def workloads(prec: int):
    x = Ball.coerce(Fraction(3, 7), prec)
    t = Ball.coerce(Fraction(5, 11), prec)
    eps = Ball.coerce(Fraction(1, 2), prec)
    y = Ball.coerce(Fraction(13, 10), prec)
    s = Ball.coerce(Fraction(7, 3), prec)
    s_list = [Ball.coerce(Fraction(k + 1, 3), prec) for k in range(40)]
    w_list = [Fraction(1, 2 ** (k + 1)) for k in range(40)]
    return {
        "lacunary_sum(n=5, k<=24, u1)": lambda b: b.lacunary_sum(5, x, t, None, 1, 24, prec),
        "lacunary_sum(n=5, k<=24, eps=1/2)": lambda b: b.lacunary_sum(5, x, t, eps, 1, 24, prec),
        "heat_dx_orders(nmax=200)": lambda b: b.heat_dx_orders(200, y, s, prec),
        "heat_dx_sum(n=8, 40 shifts)": lambda b: b.heat_dx_sum(8, y, s_list, w_list, prec),
    }


def _first(r):
    return r[-1] if isinstance(r, list) else r


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    ap.add_argument("--prec", type=int, default=256)
    args = ap.parse_args(argv)

    backends = kernels.available()
    if "mpfr" not in backends:
        print("compiled backend not built; timing the pure-Python kernels only")
    print(f"precision {args.prec} bits, best of {args.repeat} x {args.number} calls")
    print(f"{'workload':38s} " + " ".join(f"{n:>12s}" for n in backends) + "   speedup")
    for name, fn in workloads(args.prec).items():
        results = {n: _first(fn(b)) for n, b in backends.items()}
        if len(results) == 2 and not results["python"].overlaps(results["mpfr"]):
            raise SystemExit(f"backends disagree on {name}")
        times = {}
        for n, b in backends.items():
            best = min(timeit.repeat(lambda: fn(b), number=args.number, repeat=args.repeat))
            times[n] = best / args.number
        cols = " ".join(f"{times[n] * 1e6:10.1f}us" for n in backends)
        speed = f"{times['python'] / times['mpfr']:8.1f}x" if "mpfr" in times else ""
        print(f"{name:38s} {cols} {speed}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
