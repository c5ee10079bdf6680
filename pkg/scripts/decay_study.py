#!/usr/bin/env python3
"""Compare fitted decay rates of the two-sided reach on the line with the exact-value fit.

The exact reach on the line is 2 P(0 ~ n) - P(-n ~ n). Its log-slope carries a
polynomial prefactor, so short shell windows overshoot the asymptotic rate.
Writes one JSON document.
"""
import argparse
import json
import math

import numpy as np

from dvperc import mc
from dvperc.exact import t2_connection
from dvperc.graph import build_window
from dvperc.prob import make_prob_vector, pair_edge_constants


def exact_rate(pv, shells) -> float:
    reach = [2 * t2_connection(pv, n) - t2_connection(pv, 2 * n) for n in shells]
    return -float(np.polyfit(shells, np.log(reach), 1)[0])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--p", default="0,1,0", help="comma-separated (p0, p1, p2)")
    ap.add_argument("--first", type=int, default=8)
    ap.add_argument("--last", type=int, default=24)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--windows", type=int, nargs="*", default=[8, 16, 32, 64],
                    help="widths of later shell windows for the exact fit")
    args = ap.parse_args()

    pv = make_prob_vector([float(x) for x in args.p.split(",")])
    shells = list(range(args.first, args.last + 1))
    fit = mc.estimate_decay(build_window("line", args.last), pv, "weak", shells, args.trials, args.seed,
                            args.threads)
    alpha = pair_edge_constants(pv).alpha
    doc = {
        "p": list(pv.entries),
        "asymptotic_rate": -math.log(alpha) if alpha > 0 else None,
        "mc_rate": fit.rate,
        "exact_rate": exact_rate(pv, shells),
        "later_windows": {
            f"{a}..{a + 16}": exact_rate(pv, list(range(a, a + 17))) for a in args.windows
        },
        "per_shell": fit.per_shell,
    }
    print(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
