"""Scan W^{1,p} verdicts of |x|^gamma and locate the integrability flip.

For each dimension and cone parameter the script samples ``|x|^gamma`` on a
cube grid, runs the nested-excision trend for ``|grad W|^p`` over a p grid and
compares the flip bracket with ``p_delta``. Results go to stdout as CSV.

    python3 scripts/w1p_threshold.py --nodes 64 --cases 3:1/3 4:1/8
"""

import argparse
import csv
import sys
from fractions import Fraction

import numpy as np

from deltaconvex.analysis import w1p_threshold_scan
from deltaconvex.cones import exponents
from deltaconvex.fields import GridDomain, PowerField, ScalarField


def parse_case(text):
    n, d = text.split(":")
    return int(n), Fraction(d)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=64)
    ap.add_argument("--cases", nargs="+", type=parse_case,
                    default=[(3, Fraction(1, 3)), (3, Fraction(1, 5))])
    ap.add_argument("--width", type=float, default=1.0, help="half-width of the p window")
    ap.add_argument("--dp", type=float, default=0.05)
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout)
    w.writerow(["n", "delta", "gamma", "p_delta", "flip_lo", "flip_hi", "inside_quarter"])
    for n, delta in args.cases:
        ex = exponents(n, delta)
        gamma, p_delta = float(ex.gamma), float(ex.p_delta)
        dom = GridDomain.with_nodes(n, args.nodes, 1.0)
        W = ScalarField.from_generator(dom, PowerField(gamma))
        ps = np.round(np.arange(p_delta - args.width, p_delta + args.width + 1e-9, args.dp), 10)
        _, flip = w1p_threshold_scan(W, ps)
        inside = flip is not None and flip[0] >= p_delta - 0.25 and flip[1] <= p_delta + 0.25
        w.writerow([n, str(delta), f"{gamma:.6g}", f"{p_delta:.6g}",
                    flip[0] if flip else "", flip[1] if flip else "", inside])


if __name__ == "__main__":
    main()
