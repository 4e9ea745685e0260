"""Command-line entry point.

Exit codes: 0 pass, 1 quantitative failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import analysis as an
from . import fields as fl
from .acceptance import Profile, format_line, run_suite, verify_fundamental
from .cones import (
    ConeSpec,
    Verdict,
    as_rational,
    delta_of_k,
    exponents,
    gamma_tau,
)
from .errors import DeltaConvexError, FieldFormatError
from .report import AnalysisReport, write_diagnostics_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

OPERATIONS = ("holder", "w1p", "classify", "scale-check", "volume", "p-laplacian", "barrier")


class UsageError(Exception):
    pass


def _fmt(x):
    if isinstance(x, Fraction):
        return f"{x}  ({float(x):.10g})" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{x:.10g}" if isinstance(x, float) else str(x)


# -- exponents -------------------------------------------------------------------

def cmd_exponents(args, out):
    if (args.delta is None) == (args.k is None):
        raise UsageError("give exactly one of --delta or --k")
    if args.tau is not None and args.k is None:
        raise UsageError("--tau needs --k")
    delta = delta_of_k(args.n, args.k) if args.k is not None else as_rational(args.delta)
    table = exponents(args.n, delta)
    rows = [("n", table.n)]
    if args.k is not None:
        rows.append(("k", args.k))
    rows += [(name, getattr(table, name))
             for name in ("delta", "gamma", "beta", "alpha", "p0", "p_delta", "delta0")]
    if args.tau is not None:
        rows.append(("tau", as_rational(args.tau)))
        rows.append(("gamma_tau", gamma_tau(args.n, args.k, args.tau)))
    for name, val in rows:
        print(f"{name:10s} {_fmt(val)}", file=out)
    return EXIT_OK


# -- cone-check -------------------------------------------------------------------

def _parse_tuple(text):
    try:
        vals = [float(x) for x in text.strip().split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse eigenvalue tuple {text.strip()!r}") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"eigenvalue tuple {text.strip()!r} must be finite and non-empty")
    return vals


def cmd_cone_check(args, out):
    if (args.delta is None) == (args.sigma_k is None):
        raise UsageError("give exactly one of --delta or --sigma-k")
    tuples = [_parse_tuple(t) for t in args.tuples]
    if args.csv:
        with open(args.csv) as fh:
            tuples += [_parse_tuple(line) for line in fh if line.strip()]
    if not tuples:
        raise UsageError("no eigenvalue tuples given")
    code = EXIT_OK
    for lam in tuples:
        n = len(lam)
        cone = (ConeSpec.gamma_delta(n, as_rational(args.delta)) if args.delta is not None
                else ConeSpec.gamma_sigma_k(n, args.sigma_k))
        cm = cone.margin(np.array(lam), tol=args.tol)
        print(f"{','.join(repr(v) for v in lam)}\t{cm.verdict.value}\tmargin={cm.margin:.6e}",
              file=out)
        if cm.verdict is Verdict.EXTERIOR:
            code = EXIT_FAIL
    return code


# -- verify-fundamental ---------------------------------------------------------------

def cmd_verify_fundamental(args, out):
    rep = verify_fundamental(args.n, as_rational(args.delta), args.count, args.seed)
    g = rep["gamma"]
    print(f"gamma={_fmt(g)}  nonzero eigenvalue = {_fmt(g * (2 - g))} * |x|^(gamma-2)", file=out)
    print(f"max spectrum rel error {rep['max_spectrum_rel_error']:.3e}, "
          f"max |F| {rep['max_abs_F']:.3e}, FD rel error {rep['max_fd_rel_error']:.3e}", file=out)
    if args.out:
        rep.write(args.out)
    if not rep.passed:
        print(f"FAIL: worst point {rep['worst_point']}", file=out)
        return EXIT_FAIL
    print("PASS", file=out)
    return EXIT_OK


# -- field-analyze ----------------------------------------------------------------------

@dataclass
class RunConfig:
    n: int
    field: dict
    grid: dict
    operations: list
    delta: object = None
    mu: float = 0.0
    p: float | None = None
    growing_balls: list | None = None
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    diagnostics: str | None = None

    @classmethod
    def from_dict(cls, d):
        """Validate everything before any computation; messages name the field."""
        known = {"n", "field", "grid", "operations", "delta", "mu", "p", "growing_balls",
                 "tolerances", "seed", "output", "diagnostics"}
        extra = set(d) - known
        if extra:
            raise UsageError(f"config: unknown keys {sorted(extra)}")
        for key in ("n", "field", "operations"):
            if key not in d:
                raise UsageError(f"config.{key}: required")
        n = d["n"]
        if not isinstance(n, int) or not 2 <= n <= 8:
            raise UsageError("config.n: integer in 2..8 required")
        fld = d["field"]
        if not isinstance(fld, dict) or (("name" in fld) == ("csv" in fld)):
            raise UsageError("config.field: give exactly one of 'name' or 'csv'")
        if "name" in fld and fld["name"] not in fl.CATALOG:
            raise UsageError(f"config.field.name: unknown {fld['name']!r}; "
                             f"choose from {sorted(fl.CATALOG)}")
        grid = d.get("grid", {})
        if "csv" not in fld:
            if not isinstance(grid, dict) or ("nodes" in grid) == ("h" in grid):
                raise UsageError("config.grid: give exactly one of 'nodes' or 'h'")
            if not float(grid.get("r0", 1.0)) > float(grid.get("r_exc", 0.0)) >= 0:
                raise UsageError("config.grid: need 0 <= r_exc < r0")
        ops = d["operations"]
        if not isinstance(ops, list) or not ops or any(o not in OPERATIONS for o in ops):
            raise UsageError(f"config.operations: non-empty list from {list(OPERATIONS)}")
        delta = d.get("delta")
        if any(o in ("barrier", "p-laplacian") for o in ops):
            if delta is None:
                raise UsageError("config.delta: required by barrier / p-laplacian")
            try:
                exponents(n, as_rational(delta))
            except DeltaConvexError as exc:
                raise UsageError(f"config.delta: {exc}") from exc
        if "p-laplacian" in ops and float(as_rational(delta)) == 0:
            raise UsageError("config.delta: p-laplacian needs delta > 0")
        p = d.get("p")
        if "w1p" in ops and (p is None or float(p) < 1):
            raise UsageError("config.p: w1p needs p >= 1")
        return cls(n=n, field=fld, grid=grid, operations=ops, delta=delta,
                   mu=float(d.get("mu", 0.0)), p=None if p is None else float(p),
                   growing_balls=d.get("growing_balls"), tolerances=d.get("tolerances", {}),
                   seed=int(d.get("seed", 0)), output=d.get("output"),
                   diagnostics=d.get("diagnostics"))

    def build_field(self):
        if "csv" in self.field:
            f = fl.read_field_csv(self.field["csv"])
            if f.domain.n != self.n:
                raise UsageError(f"config.n={self.n} but the CSV grid has n={f.domain.n}")
            return f
        g = self.grid
        r0 = float(g.get("r0", 1.0))
        r_exc = float(g.get("r_exc", 0.0))
        center = g.get("center")
        if "nodes" in g:
            dom = fl.GridDomain.with_nodes(self.n, int(g["nodes"]), r0, r_exc, center)
        else:
            dom = fl.GridDomain(self.n, float(g["h"]), r0, r_exc, center)
        gen = fl.make_generator(self.field["name"], **self.field.get("params", {}))
        return fl.ScalarField.from_generator(dom, gen)


def _diag_rows(op, payload):
    rows = []
    if isinstance(payload, dict):
        if "shells" in payload:
            for s in payload["shells"]:
                rows.append({"operation": op, "radius": s["r_outer"], "quantity": "u_min",
                             "value": s["u_min"]})
                rows.append({"operation": op, "radius": s["r_outer"], "quantity": "u_max",
                             "value": s["u_max"]})
        trend = payload.get("trend")
        if isinstance(trend, dict):
            for r, v in zip(trend["radii"], trend["partial_integrals"]):
                rows.append({"operation": op, "radius": r, "quantity": "partial_integral",
                             "value": v})
        for r, v in zip(payload.get("radii", []), payload.get("oscillations", [])):
            rows.append({"operation": op, "radius": r, "quantity": "oscillation", "value": v})
        for r, v in payload.get("shell_sup", []):
            rows.append({"operation": op, "radius": r, "quantity": "shell_sup", "value": v})
    return rows


def run_field_analyze(cfg: RunConfig):
    f = cfg.build_field()
    tol = cfg.tolerances
    outputs, verdicts, rows = {}, {}, []
    for op in cfg.operations:
        if op == "holder":
            res = an.holder_exponent(f).as_dict()
            ok = None
        elif op == "w1p":
            rep = an.w1p_norm(f, cfg.p)
            res, ok = rep.outputs, None
        elif op == "classify":
            v = an.singularity_classify(f, tol.get("slope_tol", an.SLOPE_TOL),
                                        tol.get("window", an.SUP_WINDOW))
            res, ok = v.as_dict(), None
        elif op == "scale-check":
            rep = an.scale_invariant_check(f, int(tol.get("order", 1)))
            res, ok = rep.outputs, rep.passed
        elif op == "volume":
            if cfg.growing_balls:
                if "name" not in cfg.field:
                    raise UsageError("config.growing_balls needs a catalog field")
                gen = fl.make_generator(cfg.field["name"], **cfg.field.get("params", {}))
                nodes = f.domain.nodes_per_axis
                rep = an.volume_growing_balls(gen, cfg.n, cfg.growing_balls, nodes)
            else:
                rep = an.volume_integral(f)
            res, ok = rep.outputs, None
        elif op == "p-laplacian":
            rep = an.p_laplacian_defect(f, as_rational(cfg.delta), cfg.mu)
            res, ok = rep.outputs, rep.passed
        else:
            rep = an.barrier_oscillation_check(f, as_rational(cfg.delta))
            res, ok = rep.outputs, rep.passed
        outputs[op] = res
        verdicts[op] = ok
        rows += _diag_rows(op, res)
    checked = [v for v in verdicts.values() if v is not None]
    passed = all(checked) if checked else True
    rep = AnalysisReport("field_analyze",
                         {"n": cfg.n, "field": cfg.field, "grid": f.domain,
                          "operations": cfg.operations, "delta": cfg.delta, "mu": cfg.mu,
                          "p": cfg.p},
                         {"results": outputs, "op_passed": verdicts},
                         {"slope_tol": tol.get("slope_tol", an.SLOPE_TOL),
                          "window": tol.get("window", an.SUP_WINDOW),
                          "divergence_tol": an.DIVERGENCE_TOL,
                          "growth_tol": an.GROWTH_TOL, "fd_tol_factor": fl.FD_TOL_FACTOR},
                         passed=passed, seed=cfg.seed)
    return rep, rows


def cmd_field_analyze(args, out):
    cfg_dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg_dict = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    # explicit flags fill in what the config leaves out; the config wins
    flags = {"n": args.n, "delta": args.delta, "output": args.out,
             "diagnostics": args.diagnostics}
    if args.field:
        flags["field"] = {"csv": args.field} if args.field.endswith(".csv") \
            else {"name": args.field, "params": dict(_kv(p) for p in args.param)}
    if args.nodes is not None or args.r_exc is not None:
        flags["grid"] = {"nodes": args.nodes or 64, "r0": args.r0,
                         "r_exc": args.r_exc or 0.0}
    if args.ops:
        flags["operations"] = args.ops.split(",")
    for k, v in flags.items():
        if v is not None and k not in cfg_dict:
            cfg_dict[k] = v
    cfg = RunConfig.from_dict(cfg_dict)
    rep, rows = run_field_analyze(cfg)
    text = rep.to_json()
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    if cfg.diagnostics:
        write_diagnostics_csv(cfg.diagnostics, rows, ["operation", "radius", "quantity", "value"])
    for op, res in rep.outputs["results"].items():
        if op == "classify":
            print(f"classify: {res['class'].value} slope={res['slope']:.4f}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _kv(text):
    if "=" not in text:
        raise UsageError(f"--param expects key=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k, json.loads(v)
    except json.JSONDecodeError:
        return k, v


# -- suite -----------------------------------------------------------------------------

def cmd_suite(args, out):
    prof = Profile.named(args.profile)
    results = run_suite(prof, args.seed, args.out_dir,
                        echo=lambda line: print(line, file=out))
    ok = all(r.passed for r in results.values())
    print(f"{sum(r.passed for r in results.values())}/{len(results)} criteria passed",
          file=out)
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="deltaconvex",
                                description="Cone geometry and singular-solution checks.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("exponents", help="exponent table for (n, delta) or (n, k[, tau])")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--delta")
    e.add_argument("--k", type=int)
    e.add_argument("--tau")
    e.set_defaults(func=cmd_exponents)

    c = sub.add_parser("cone-check", help="classify eigenvalue tuples")
    c.add_argument("tuples", nargs="*", help="comma-separated eigenvalues")
    c.add_argument("--delta")
    c.add_argument("--sigma-k", type=int, dest="sigma_k")
    c.add_argument("--csv", help="file with one tuple per line")
    c.add_argument("--tol", type=float, default=1e-9)
    c.set_defaults(func=cmd_cone_check)

    v = sub.add_parser("verify-fundamental", help="check the fundamental solution")
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--delta", required=True)
    v.add_argument("--count", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify_fundamental)

    f = sub.add_parser("field-analyze", help="run estimators on a field")
    f.add_argument("--config")
    f.add_argument("--n", type=int)
    f.add_argument("--field", help="catalog name or path to a CSV field")
    f.add_argument("--param", action="append", default=[], help="generator key=value")
    f.add_argument("--nodes", type=int)
    f.add_argument("--r0", type=float, default=1.0)
    f.add_argument("--r-exc", type=float, dest="r_exc")
    f.add_argument("--delta")
    f.add_argument("--ops", help=f"comma-separated subset of {','.join(OPERATIONS)}")
    f.add_argument("--out")
    f.add_argument("--diagnostics")
    f.set_defaults(func=cmd_field_analyze)

    s = sub.add_parser("suite", help="run the acceptance suite")
    s.add_argument("--profile", choices=("fast", "full"), default="fast")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", dest="out_dir")
    s.set_defaults(func=cmd_suite)
    return p


_NEG_TUPLE = re.compile(r"^-[\d.]")


def _protect_negative_tuples(argv):
    # "-0.4,1,1" would otherwise be read as an option
    return [(" " + a) if _NEG_TUPLE.match(a) and "," in a else a for a in argv]


def main(argv=None, out=None):
    out = out or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_protect_negative_tuples(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except FieldFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for node in exc.missing[:50]:
            print(f"  missing node {node}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, DeltaConvexError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
