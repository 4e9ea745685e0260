"""The acceptance suite: thirteen quantitative checks with fixed tolerances.

Every criterion returns an :class:`AnalysisReport` whose ``passed`` flag is
the verdict. ``Profile.fast`` shrinks sample counts and grid sizes for smoke
runs; ``Profile.full`` uses the stated sizes.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import analysis as an
from . import fields as fl
from . import radial as rd
from .cones import (
    delta_margins,
    delta_of_k,
    exponents,
    gamma_delta_margin,
    inclusion_sample_test,
    ricci_from_schouten,
    sample_delta_cone,
)
from .conformal import (
    CurvatureOperator,
    conformal_change_matrix,
    evaluate_F,
    hessian_v_cone_form,
    ricci_from_schouten_tensor,
    v_jet_from_u,
)
from .report import AnalysisReport
from .symmat import jacobi_eigh, random_orthogonal


@dataclass(frozen=True)
class Profile:
    name: str
    fundamental_points: int = 100
    inclusion_samples: int = 100_000
    transform_samples: int = 10_000
    holder_nodes: int = 64
    w1p_nodes: int = 64
    mollify_nodes: int = 65
    plap_nodes: tuple = (33, 65, 129)
    volume_nodes: int = 128
    pullback_points: int = 100
    radial_profiles: int = 1000
    ricci_samples: int = 100_000

    @classmethod
    def full(cls):
        return cls("full")

    @classmethod
    def fast(cls):
        return cls("fast", inclusion_samples=20_000, transform_samples=2_000,
                   mollify_nodes=41, plap_nodes=(25, 49, 97), volume_nodes=96,
                   radial_profiles=200, ricci_samples=20_000)

    @classmethod
    def named(cls, name):
        if name not in ("fast", "full"):
            raise ValueError(f"unknown profile {name!r}")
        return cls.full() if name == "full" else cls.fast()


def _report(name, inputs, outputs, tols, passed, seed=None):
    return AnalysisReport(name, inputs, outputs, tols, passed=bool(passed), seed=seed)


def _random_points(n, count, rng, r_lo=0.1, r_hi=2.0):
    x = rng.standard_normal((count, n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * rng.uniform(r_lo, r_hi, size=(count, 1))


# -- 1 ----------------------------------------------------------------------------------

def verify_fundamental(n, delta, count=100, seed=0, tol=1e-10, fd_tol=1e-5):
    """Spectrum of ``D^2 |x|^gamma + delta Lap I`` and ``F_delta`` at random points."""
    ex = exponents(n, delta)
    g = float(ex.gamma)
    d = float(ex.delta)
    rng = np.random.default_rng(seed)
    x = _random_points(n, count, rng)
    r = np.linalg.norm(x, axis=1)
    G = fl.PowerField(g)
    H = G.hessian(x)
    lap = np.trace(H, axis1=1, axis2=2)
    M = H + d * lap[:, None, None] * np.eye(n)
    w, _ = jacobi_eigh(M)
    scale = g * (2 - g) * r ** (g - 2)
    expect = np.concatenate([np.zeros((count, 1)), np.repeat(scale[:, None], n - 1, 1)], 1)
    spec_err = np.max(np.abs(w - expect), axis=1) / scale
    op = CurvatureOperator.det_delta(n, ex.delta)
    lam, _ = jacobi_eigh(H)
    F = np.array([evaluate_F(op, row) for row in lam])
    shifted = lam + d * lam.sum(axis=1, keepdims=True)
    # the vanishing factor itself; an n-th root of the product would amplify rounding
    raw = np.abs(np.min(shifted, axis=1)) / np.linalg.norm(lam, axis=1)
    # central-difference cross-check on the Hessian
    eps = 1e-4 * r
    Hfd = np.empty_like(H)
    for a in range(n):
        e = np.zeros(n)
        e[a] = 1.0
        xp = x + eps[:, None] * e
        xm = x - eps[:, None] * e
        Hfd[:, :, a] = (G.gradient(xp) - G.gradient(xm)) / (2 * eps[:, None])
    fd_err = np.max(np.abs(Hfd - H), axis=(1, 2)) / scale
    worst = int(np.argmax(spec_err))
    passed = spec_err.max() <= tol and np.max(np.abs(F)) <= tol and raw.max() <= tol \
        and fd_err.max() <= fd_tol
    return _report(
        "verify_fundamental", {"n": n, "delta": ex.delta, "count": count},
        {"gamma": ex.gamma, "nonzero_eigenvalue_coefficient": ex.gamma * (2 - ex.gamma),
         "max_spectrum_rel_error": float(spec_err.max()),
         "max_abs_F": float(np.max(np.abs(F))), "max_vanishing_factor": float(raw.max()),
         "max_fd_rel_error": float(fd_err.max()), "worst_point": x[worst].tolist()},
        {"spectrum_rel": tol, "F": tol, "fd_rel": fd_tol}, passed, seed)


def criterion_01(profile: Profile, seed=0):
    rows = []
    for n in (3, 4, 5):
        deltas = [Fraction(0), Fraction(1, 8)]
        if n == 3:
            deltas.append(Fraction(1, 3))
        deltas.append(1.0 / (n - 2) - 0.01)
        for d in deltas:
            rep = verify_fundamental(n, d, profile.fundamental_points, seed)
            rows.append({"n": n, "delta": d, "passed": rep.passed,
                         "max_spectrum_rel_error": rep["max_spectrum_rel_error"],
                         "max_abs_F": rep["max_abs_F"]})
    return _report("c01_fundamental_solution", {"points": profile.fundamental_points},
                   {"cases": rows}, {"rel": 1e-10, "F": 1e-10},
                   all(r["passed"] for r in rows), seed)


# -- 2 ----------------------------------------------------------------------------------

def criterion_02(profile: Profile, seed=0):
    rows = []
    for n in (3, 4, 5):
        for k in range(n // 2 + 1, n + 1):
            rep = inclusion_sample_test(n, k, profile.inclusion_samples, seed + 100 * n + k)
            rows.append({"n": n, "k": k, "delta": rep["delta"],
                         "min_margin": rep["min_margin"], "passed": rep.passed})
    ext = gamma_delta_margin((2, 2, -1), delta_of_k(3, 2)).margin
    ok = all(r["passed"] for r in rows) and abs(ext) <= 1e-12
    return _report("c02_cone_inclusion", {"samples": profile.inclusion_samples},
                   {"cases": rows, "extremal_margin": ext},
                   {"margin": -1e-9, "extremal": 1e-12}, ok, seed)


# -- 3 ----------------------------------------------------------------------------------

def criterion_03(profile: Profile, seed=0):
    rows = []
    ok = True
    for n in range(3, 9):
        for k in range(n // 2 + 1, n + 1):
            ex = exponents(n, delta_of_k(n, k))
            pd_k = math.inf if k == n else Fraction(n * k, n - k)
            pd_p0 = math.inf if ex.p0 == math.inf else n * (ex.p0 - 1) / Fraction(n - 1)
            checks = {
                "gamma": ex.gamma == 2 - Fraction(n, k),
                "p_delta_nk": ex.p_delta == pd_k,
                "p_delta_p0": ex.p_delta == pd_p0,
                "beta": ex.beta == ex.gamma / 2,
                "delta0": 2 * ex.delta0 == 1 + (2 - n) * ex.delta,
            }
            exact = all(isinstance(getattr(ex, f), Fraction) or getattr(ex, f) == math.inf
                        for f in ("gamma", "beta", "p0", "p_delta", "delta0"))
            rows.append({"n": n, "k": k, **checks, "exact": exact})
            ok = ok and exact and all(checks.values())
    return _report("c03_exponent_identities", {"n_range": [3, 8]}, {"cases": rows},
                   {"tolerance": 0}, ok, seed)


# -- 4 ----------------------------------------------------------------------------------

def transform_samples(count, seed=0, boundary_fraction=0.25):
    """Random admissible 2-jets of u and the margins of ``hess v + beta v A``.

    The target ``A_u`` is drawn in the closed delta-cone and ``hess u`` is
    back-solved from the conformal change formula with a random background
    ``A`` and gradient.
    """
    rng = np.random.default_rng(seed)
    groups = [(n, k) for n in (3, 4, 5) for k in range(n // 2 + 1, n + 1)]
    sizes = [count // len(groups)] * len(groups)
    sizes[-1] += count - sum(sizes)
    out = []
    for (n, k), m in zip(groups, sizes):
        ex = exponents(n, delta_of_k(n, k))
        delta, beta = float(ex.delta), float(ex.beta)
        nb = int(m * boundary_fraction)
        lam = np.concatenate([sample_delta_cone(n, delta, nb, rng, boundary=True),
                              sample_delta_cone(n, delta, m - nb, rng)])
        Q = random_orthogonal(n, rng, size=m)
        Au = np.einsum("mij,mj,mkj->mik", Q, lam, Q)
        B = rng.standard_normal((m, n, n))
        A = 0.5 * (B + np.swapaxes(B, 1, 2))
        du = rng.standard_normal((m, n))
        du[: nb // 2] = 0.0  # boundary A_u with no gradient term: margin exactly 0
        u = rng.uniform(-1, 1, size=m)
        hess_u = Au - conformal_change_matrix(A, du, np.zeros((m, n, n)))
        v, _, hv = v_jet_from_u(u, du, hess_u, beta)
        w, _ = jacobi_eigh(hessian_v_cone_form(A, beta, v, hv))
        out.append(delta_margins(w, delta))
    return np.concatenate(out)


def criterion_04(profile: Profile, seed=0):
    m = transform_samples(profile.transform_samples, seed)
    rng = np.random.default_rng(seed + 1)
    model = []
    for n in (3, 4, 5):
        for k in range(n // 2 + 1, n + 1):
            ex = exponents(n, delta_of_k(n, k))
            beta, d = float(ex.beta), float(ex.delta)
            x = _random_points(n, 50, rng)
            U = fl.LogSingular(2.0)
            v, gv, hv = v_jet_from_u(U.value(x), U.gradient(x), U.hessian(x), beta)
            w, _ = jacobi_eigh(hv)
            exact_v = fl.PowerField(float(ex.gamma)).hessian(x)
            model.append({"n": n, "k": k,
                          "max_abs_margin": float(np.max(np.abs(delta_margins(w, d)))),
                          "max_hessian_mismatch": float(np.max(np.abs(hv - exact_v)
                                                               / np.abs(exact_v).max()))})
    ok = m.min() >= -1e-9 and all(r["max_abs_margin"] <= 1e-9 for r in model)
    return _report("c04_transform", {"samples": profile.transform_samples},
                   {"min_margin": float(m.min()), "model_cases": model},
                   {"margin": -1e-9, "boundary": 1e-9}, ok, seed)


# -- 5, 6 ---------------------------------------------------------------------------------

def criterion_05(profile: Profile, seed=0):
    N = profile.holder_nodes
    dom = fl.GridDomain.with_nodes(3, N, 1.0, r_exc=0.05)
    W = fl.ScalarField.from_generator(dom, fl.PowerField(0.5))
    est = an.holder_exponent(W)
    bar = an.barrier_oscillation_check(W, Fraction(1, 3))
    ok = abs(est.exponent - 0.5) <= 0.02 and bar.passed
    return _report("c05_holder", {"nodes": N, "r_exc": 0.05, "delta": Fraction(1, 3)},
                   {"holder": est.as_dict(), "barrier": bar.outputs,
                    "barrier_passed": bar.passed},
                   {"exponent": 0.02, "barrier": bar.tolerances}, ok, seed)


def criterion_06(profile: Profile, seed=0):
    N = profile.w1p_nodes
    dom = fl.GridDomain.with_nodes(3, N, 1.0)
    W = fl.ScalarField.from_generator(dom, fl.PowerField(0.5))
    ps = np.round(np.arange(5.0, 7.0001, 0.05), 10)
    rows, flip = an.w1p_threshold_scan(W, ps)
    changes = sum(a["verdict"] != b["verdict"] for a, b in zip(rows, rows[1:]))
    p_delta = float(exponents(3, Fraction(1, 3)).p_delta)
    ok = flip is not None and changes == 1 and flip[0] >= p_delta - 0.25 \
        and flip[1] <= p_delta + 0.25
    return _report("c06_w1p_threshold", {"nodes": N, "p_grid": [5.0, 7.0, 0.05]},
                   {"p_delta": p_delta, "flip": flip, "verdict_changes": changes,
                    "scan": rows},
                   {"bracket": 0.25}, ok, seed)


# -- 7 ------------------------------------------------------------------------------------

def criterion_07(profile: Profile, seed=0):
    N = profile.mollify_nodes
    dom = fl.GridDomain.with_nodes(3, N, 1.0, r_exc=0.2)
    h = dom.h
    errs = {}
    for label, gen in (("constant", fl.Quadratic.constant(1.7)),
                       ("linear", fl.Quadratic.linear([0.3, -1.1, 2.0], 0.4))):
        f = fl.ScalarField.from_generator(dom, gen)
        out = fl.mollify(f, 3 * h)
        m = np.isfinite(out.values)
        errs[label] = float(np.max(np.abs(out.values[m] - f.values[m])))
    v = fl.ScalarField.from_generator(dom, fl.PowerField(0.5))
    W, lam = fl.lambda_lift(v)
    scales = []
    for hm in (2 * h, 3 * h):
        rep = fl.mollified_hessian_cone_check(W, Fraction(1, 3), hm)
        scales.append({"h_m": hm, "passed": rep.passed, **rep.outputs})
    ok = max(errs.values()) <= 1e-12 and all(
        s["precondition"] == "ok" and s["min_output_margin"] >= -1e-10 for s in scales)
    return _report("c07_mollification", {"nodes": N, "r_exc": 0.2, "Lambda": lam},
                   {"reproduction_errors": errs, "scales": scales},
                   {"reproduction": 1e-12, "margin": -1e-10}, ok, seed)


# -- 8 ------------------------------------------------------------------------------------

def criterion_08(profile: Profile, seed=0):
    p0 = float(exponents(3, Fraction(1, 3)).p0)
    errs, rel, pos = [], [], []
    for N in profile.plap_nodes:
        dom = fl.GridDomain.with_nodes(3, N, 1.0, r_exc=0.2)
        d = dom.distance
        region = (d >= 0.4) & (d <= 0.8)
        L = an.p_laplacian(fl.ScalarField.from_generator(dom, fl.PowerField(0.5)), p0)
        errs.append(float(np.max(np.abs(L[region]))))
        L2 = an.p_laplacian(fl.ScalarField.from_generator(dom, fl.Quadratic.radial(1.0, 3)), p0)
        exact = 2 ** (p0 - 1) * (p0 + 3 - 2) * d ** (p0 - 2)
        rel.append(float(np.max(np.abs(L2[region] / exact[region] - 1))))
        pos.append(bool(np.all(L2[region] > 0)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    ok = min(orders) >= 1.0 and errs[-1] < errs[0] and max(rel) <= 0.02 and all(pos)
    return _report("c08_p_laplacian", {"nodes": list(profile.plap_nodes), "p0": p0},
                   {"max_defect": errs, "observed_orders": orders,
                    "quadratic_rel_error": rel, "quadratic_positive": pos},
                   {"order": 1.0, "quadratic_rel": 0.02}, ok, seed)


# -- 9 ------------------------------------------------------------------------------------

def criterion_09(profile: Profile, seed=0):
    dom = fl.GridDomain.with_nodes(3, 64, 1.0, r_exc=0.05)
    u = fl.ScalarField.from_generator(dom, fl.LogSingular(2.0))
    v1 = an.singularity_classify(u)
    v2 = an.singularity_classify(fl.ScalarField.from_generator(dom, fl.Stereographic()))
    sc = an.scale_invariant_check(u, 1, exact=True)
    ok = (v1.cls is an.SingularityClass.GREENS and abs(v1.slope - 2) <= 0.05
          and v2.cls is an.SingularityClass.BOUNDED
          and abs(sc["sup"] - 2) <= 1e-12 and abs(sc["min"] - 2) <= 1e-12)
    return _report("c09_singularity", {"nodes": 64, "r_exc": 0.05},
                   {"log_singular": {"class": v1.cls, "slope": v1.slope,
                                     "sup_deviation": v1.sup_deviation},
                    "stereographic": {"class": v2.cls, "inf_estimate": v2.inf_estimate},
                    "scale_invariant_sup": sc["sup"], "scale_invariant_min": sc["min"]},
                   {"slope": 0.05, "scale_invariant": 1e-12}, ok, seed)


# -- 10 -----------------------------------------------------------------------------------

def criterion_10(profile: Profile, seed=0):
    N = profile.volume_nodes
    ball = fl.GridDomain.with_nodes(3, N, 1.0)
    flat = an.volume_integral(fl.ScalarField.from_generator(ball, fl.Quadratic.constant(0.0)))
    v_flat = flat["value"]
    punct = fl.GridDomain.with_nodes(3, 64, 1.0, r_exc=0.02)
    sing = an.volume_integral(fl.ScalarField.from_generator(punct, fl.LogSingular(2.0)))
    sph = an.volume_growing_balls(fl.Stereographic(), 3, (4.0, 8.0, 16.0), N)
    e_flat = abs(v_flat / (4 * math.pi / 3) - 1)
    e_sph = abs(sph["extrapolated"] / (2 * math.pi ** 2) - 1)
    ok = e_flat <= 0.01 and sing["verdict"] == "diverging" and abs(sing["rate"] - 3) <= 0.3 \
        and e_sph <= 0.01
    return _report("c10_volume", {"nodes": N},
                   {"unit_ball": v_flat, "unit_ball_rel_error": e_flat,
                    "log_singular_verdict": sing["verdict"], "log_singular_rate": sing["rate"],
                    "sphere": sph["extrapolated"], "sphere_rel_error": e_sph,
                    "sphere_ball_volumes": sph["ball_volumes"]},
                   {"rel": 0.01, "rate": 0.3}, ok, seed)


# -- 11 -----------------------------------------------------------------------------------

def criterion_11(profile: Profile, seed=0):
    reps = {n: fl.pullback_flat_check(n, 1.0, profile.pullback_points, seed + n)
            for n in (3, 4)}
    return _report("c11_inversion", {"points": profile.pullback_points},
                   {f"n{n}": r["max_deviation"] for n, r in reps.items()},
                   {"deviation": 1e-9}, all(r.passed for r in reps.values()), seed)


# -- 12 -----------------------------------------------------------------------------------

def radial_cross_check(count, seed=0):
    """Max scaled gap between the radial eigenvalues and the Cartesian transform."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(3, 6))
        c = rng.uniform(-2, 2, size=3)
        a = rng.uniform(-1, 3)
        gen = fl.SumGenerator((fl.LogSingular(c[0]), fl.PowerField(a, c[1]),
                               fl.Scaled(fl.Stereographic(), c[2])))
        r = rng.uniform(0.2, 2.0)
        x = np.zeros((1, n))
        x[0, 0] = r
        M = conformal_change_matrix(np.zeros((n, n)), gen.gradient(x)[0], gen.hessian(x)[0])
        w = np.sort(np.linalg.eigvalsh(M))
        du = c[0] / r + c[1] * a * r ** (a - 1) + c[2] * 2 * r / (1 + r * r)
        d2u = (-c[0] / r ** 2 + c[1] * a * (a - 1) * r ** (a - 2)
               + c[2] * 2 * (1 - r * r) / (1 + r * r) ** 2)
        lr, lt = rd.radial_schouten(0.0, du, d2u, r)
        ref = np.sort(rd.full_spectrum(lr, lt, n))
        worst = max(worst, float(np.max(np.abs(w - ref)) / max(1.0, np.max(np.abs(ref)))))
    return worst


def criterion_12(profile: Profile, seed=0):
    n = 3
    flat = rd.radial_ode_solve(CurvatureOperator.sigma_k(n, 1), 0.0, n,
                               (0.1, 2 * math.log(0.1), 20.0), 1.0)
    e_flat = float(np.max(np.abs(flat.u - 2 * np.log(flat.r))))
    k = 2
    f = 0.5 * comb(n, k) ** (1 / k)
    sph = rd.radial_ode_solve(CurvatureOperator.sigma_k(n, k), f, n,
                              (0.5, math.log(1.25 / 2), 0.8), 2.0)
    e_sph = float(np.max(np.abs(sph.u - np.log((1 + sph.r ** 2) / 2))))
    e_cross = radial_cross_check(profile.radial_profiles, seed)
    ok = e_flat <= 1e-8 and e_sph <= 1e-6 and e_cross <= 1e-10
    return _report("c12_radial_ode", {"n": n, "k_sphere": k, "f_sphere": f,
                                      "profiles": profile.radial_profiles},
                   {"flat_max_error": e_flat, "sphere_max_error": e_sph,
                    "cross_check_max_error": e_cross},
                   {"flat": 1e-8, "sphere": 1e-6, "cross": 1e-10}, ok, seed)


# -- 13 -----------------------------------------------------------------------------------

def criterion_13(profile: Profile, seed=0):
    rng = np.random.default_rng(seed)
    count = profile.ricci_samples
    rows = []
    ok = True
    for n in (3, 4, 5):
        for delta in (0.0, 0.5 / (n - 2), 0.99 / (n - 2)):
            per = count // 9
            lam = sample_delta_cone(n, delta, per, rng)
            _, m = ricci_from_schouten(lam, delta)
            scale = np.linalg.norm(lam, axis=1)
            lam_b = sample_delta_cone(n, delta, per // 10 + 1, rng, boundary=True)
            _, mb = ricci_from_schouten(lam_b, delta)
            # tensor path on a subset, through a random frame
            sub = lam[:50]
            gap = 0.0
            for row in sub:
                Q = random_orthogonal(n, rng)
                ric, _ = ricci_from_schouten_tensor((Q * row) @ Q.T)
                wr = np.linalg.eigvalsh(ric.matrix)
                bound = (1 + (2 - n) * delta) * row.sum()
                gap = min(gap, float(wr.min() - bound))
            row_ok = (np.min(m / scale) >= -1e-9 and np.max(np.abs(mb)) <= 1e-9
                      and gap >= -1e-9)
            rows.append({"n": n, "delta": delta, "min_margin": float(np.min(m / scale)),
                         "boundary_max_abs": float(np.max(np.abs(mb))), "tensor_gap": gap,
                         "passed": row_ok})
            ok = ok and row_ok
    return _report("c13_ricci_bound", {"samples": count}, {"cases": rows},
                   {"margin": -1e-9, "equality": 1e-9}, ok, seed)


CRITERIA = {
    1: ("fundamental solution", criterion_01),
    2: ("cone inclusion", criterion_02),
    3: ("exponent identities", criterion_03),
    4: ("u-v transform", criterion_04),
    5: ("Hoelder estimator", criterion_05),
    6: ("W1p threshold", criterion_06),
    7: ("mollification", criterion_07),
    8: ("p0-harmonicity", criterion_08),
    9: ("singularity dichotomy", criterion_09),
    10: ("volume criterion", criterion_10),
    11: ("inversion identity", criterion_11),
    12: ("radial ODE", criterion_12),
    13: ("Ricci lower bound", criterion_13),
}


def run_criterion(number, profile: Profile, seed=0):
    name, fn = CRITERIA[number]
    t0 = time.perf_counter()
    rep = fn(profile, seed + number)
    rep.runtime = time.perf_counter() - t0
    return rep


def run_suite(profile: Profile, seed=0, out_dir=None, numbers=None, echo=None):
    """Run criteria in order; write ``criterion_XX.json`` into ``out_dir`` if given."""
    results = {}
    for num in numbers or sorted(CRITERIA):
        rep = run_criterion(num, profile, seed)
        results[num] = rep
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            rep.write(os.path.join(out_dir, f"criterion_{num:02d}.json"))
        if echo is not None:
            echo(format_line(num, rep))
    return results


def format_line(num, rep):
    status = "PASS" if rep.passed else "FAIL"
    return f"[{status}] criterion {num:2d} ({CRITERIA[num][0]}) {rep.runtime:.2f}s"
