"""Run the acceptance suite and write one JSON report per criterion.

    python3 scripts/run_suite.py --profile full --seed 0 --out-dir reports
"""

import argparse
import sys

from deltaconvex.acceptance import CRITERIA, Profile, run_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--profile", choices=("fast", "full"), default="full")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="reports")
    ap.add_argument("--only", type=int, nargs="*", choices=sorted(CRITERIA))
    args = ap.parse_args(argv)
    res = run_suite(Profile.named(args.profile), args.seed, args.out_dir,
                    numbers=args.only, echo=print)
    passed = sum(r.passed for r in res.values())
    print(f"{passed}/{len(res)} criteria passed; reports in {args.out_dir}/")
    return 0 if passed == len(res) else 1


if __name__ == "__main__":
    sys.exit(main())
