"""Estimators and inequality checkers on sampled fields.

Divergence detection throughout uses nested smooth excisions: the integral is
taken with a cutoff ``chi(d / r)`` that vanishes for ``d < r/2`` and equals one
for ``d > r``, over radii ``r_j = r_start 2^{-j/2}``. The increments
``D_j = I(r_{j+1}) - I(r_j)`` behave like ``r_j^{-rate}``; an integrable
singularity has ``rate < 0`` and a logarithmic or power divergence has
``rate >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import curve_fit

from .cones import as_rational, exponents
from .errors import DomainError, EmptyDomainError, InvalidInputError, ResolutionError
from .fields import (
    GridDomain,
    ScalarField,
    _smoothstep5,
    cone_margins_with_tolerance,
    gradient_grid,
    hessian_grid,
    shifted,
)
from .report import AnalysisReport
from .symmat import jacobi_eigh

SLOPE_TOL = 0.05
SUP_WINDOW = 1.0
DIVERGENCE_TOL = 0.05
GROWTH_TOL = 0.1
BOUNDED_RATIO = 0.9


# -- nested excision trend ---------------------------------------------------------

@dataclass
class Trend:
    radii: list
    partial: list
    increments: list
    rate: float
    diverging: bool
    value: float

    @property
    def verdict(self):
        return "diverging" if self.diverging else "converging"

    def as_dict(self):
        return {"radii": self.radii, "partial_integrals": self.partial,
                "increments": self.increments, "rate": self.rate,
                "verdict": self.verdict, "value": self.value}


def excision_radii(domain: GridDomain, r_start=None, clearance=2.0, min_count=3):
    """Radii ``r_start 2^{-j/2}`` whose cutoff band stays clear of the puncture.

    The inner edge ``r/2`` must sit at least ``clearance * h`` outside ``r_exc``.
    """
    r = domain.r0 / 2.0 if r_start is None else float(r_start)
    floor = domain.r_exc + clearance * domain.h
    out = []
    while r / 2.0 >= floor:
        out.append(r)
        r /= math.sqrt(2.0)
    if len(out) < min_count:
        raise ResolutionError(
            f"only {len(out)} excision radii fit between r_exc={domain.r_exc} and "
            f"r0={domain.r0} at h={domain.h:.4g}; need {min_count}")
    return out


def cutoff(d, r):
    """0 for ``d <= r/2``, 1 for ``d >= r``, quintic in ``log2(d/r)`` between."""
    with np.errstate(divide="ignore"):
        s = np.log2(np.maximum(d, 1e-300) / r) + 1.0
    return _smoothstep5(s)


def nested_trend(integrand, domain: GridDomain, radii, div_tol=DIVERGENCE_TOL):
    """Integrate ``integrand`` (NaN = excluded) at nested excisions and classify."""
    d = domain.distance
    vals = np.where(np.isfinite(integrand), integrand, 0.0)
    cell = domain.h ** domain.n
    partial = [cell * float(np.sum(vals * cutoff(d, r))) for r in radii]
    return trend_from_partials(radii, partial, div_tol)


def trend_from_partials(radii, partial, div_tol=DIVERGENCE_TOL):
    """Classify partial integrals taken at decreasing excision radii."""
    partial = np.asarray(partial, dtype=float)
    inc = np.diff(partial)
    x = np.log(1.0 / np.asarray(radii[1:], dtype=float))
    if np.all(inc == 0.0):
        return Trend(list(radii), partial.tolist(), inc.tolist(), -math.inf, False,
                     float(partial[-1]))
    # magnitudes, in case the integrand changes sign near the puncture
    mag = np.abs(inc) + 1e-300
    rate = float(np.polyfit(x, np.log(mag), 1)[0])
    diverging = rate > -div_tol
    if diverging:
        value = math.inf
    else:
        q = math.exp(rate * (x[1] - x[0])) if len(x) > 1 else 0.0
        value = float(partial[-1] + inc[-1] * q / (1.0 - q))
    return Trend(list(radii), partial.tolist(), inc.tolist(), rate, diverging, value)


def _grad_norm(f: ScalarField):
    g4 = gradient_grid(f, order=4)
    g2 = gradient_grid(f, order=2)
    g = np.where(np.isfinite(g4), g4, g2)
    return np.sqrt(np.sum(g * g, axis=-1))


# -- Hoelder exponent ------------------------------------------------------------------

@dataclass
class HolderEstimate:
    exponent: float
    coefficient: float
    offset: float
    residual: float
    radius_range: tuple
    radii: list = field(default_factory=list)
    oscillations: list = field(default_factory=list)
    constant: bool = False

    def as_dict(self):
        return {"exponent": self.exponent, "coefficient": self.coefficient,
                "offset": self.offset, "residual": self.residual,
                "radius_range": list(self.radius_range), "radii": self.radii,
                "oscillations": self.oscillations, "constant_field": self.constant}


def _center(domain, y):
    if y is None:
        return np.array(domain.center)
    y = tuple(y)
    if all(isinstance(i, (int, np.integer)) for i in y):
        return domain.position(y)
    return np.asarray(y, dtype=float)


def _distance_from(domain, p):
    sq = 0.0
    for a in range(domain.n):
        sq = sq + (domain.coordinate(a) - p[a]) ** 2
    return np.sqrt(np.broadcast_to(sq, domain.shape))


def holder_exponent(W: ScalarField, y=None, r_start=None, min_radii=4):
    """Fit ``osc_{B_rho(y)} W = c rho^a - b`` over dyadic radii.

    Each radius is snapped down to the largest node distance it contains so
    the ball is exactly what the lattice samples. The offset ``b`` absorbs the
    unresolved value at ``y``; the fit is weighted relative to ``osc``.
    """
    dom = W.domain
    p = _center(dom, y)
    dy = _distance_from(dom, p)
    ok = np.isfinite(W.values)
    reach = dom.r0 - float(np.linalg.norm(p - np.array(dom.center)))
    r = reach if r_start is None else min(float(r_start), reach)
    node_d = np.unique(dy[ok])
    rho, osc = [], []
    while True:
        inside = node_d[node_d <= r * (1 + 1e-12)]
        if inside.size == 0 or inside[-1] < 2 * dom.h:
            break
        rr = float(inside[-1])
        vals = W.values[ok & (dy <= rr * (1 + 1e-12))]
        rho.append(rr)
        osc.append(float(vals.max() - vals.min()))
        r /= 2.0
    if len(rho) < min_radii:
        raise ResolutionError(f"only {len(rho)} dyadic radii resolved around y; need {min_radii}")
    rho = np.array(rho)
    osc = np.array(osc)
    rng = (float(rho.min()), float(rho.max()))
    if np.all(osc == 0.0):
        return HolderEstimate(math.inf, 0.0, 0.0, 0.0, rng, rho.tolist(), osc.tolist(), True)
    if np.any(osc <= 0.0):
        raise ResolutionError("oscillation vanishes at some radii but not all")
    a0 = float(np.polyfit(np.log(rho), np.log(osc), 1)[0])
    try:
        par, _ = curve_fit(lambda t, a, c, b: c * t ** a - b, rho, osc,
                           p0=[a0, osc[0] / rho[0] ** a0, 0.0], sigma=osc, maxfev=20000)
        a, c, b = (float(v) for v in par)
    except RuntimeError:
        a, c, b = a0, float(osc[0] / rho[0] ** a0), 0.0
    model = c * rho ** a - b
    resid = float(np.sqrt(np.mean(((model - osc) / osc) ** 2)))
    return HolderEstimate(a, c, b, resid, rng, rho.tolist(), osc.tolist())


# -- barrier comparison ---------------------------------------------------------------

def barrier_oscillation_check(W: ScalarField, delta, y=None, R=None, center_value=None,
                              factor=10.0, max_listed=20):
    """Compare ``W`` with the fundamental-solution barrier on ``B_R(y)``.

    Asserts ``W(x) - W(y) <= osc * (|x-y|/R)^gamma + factor h^2 R^2``. ``R`` is
    snapped to the largest active node distance it contains. ``W(y)`` is the
    node value, else the generator value, else ``center_value``, else the
    minimum over the innermost resolved shell.
    """
    dom = W.domain
    gamma = float(exponents(dom.n, delta).gamma)
    p = _center(dom, y)
    dy = _distance_from(dom, p)
    ok = np.isfinite(W.values)
    reach = dom.r0 - float(np.linalg.norm(p - np.array(dom.center)))
    R = reach if R is None else min(float(R), reach)
    ball = ok & (dy <= R * (1 + 1e-12))
    if not np.any(ball):
        raise EmptyDomainError("no active node in B_R(y)")
    R_eff = float(dy[ball].max())
    inputs = {"domain": dom, "delta": delta, "y": p.tolist(), "R": R}
    tols = {"barrier_tol": factor * dom.h ** 2 * R_eff ** 2, "tau_factor": factor}

    margins, tau = cone_margins_with_tolerance(W, delta, factor)
    checked = ball & np.isfinite(margins) & np.isfinite(tau)
    bad = checked & (margins < -tau)
    if np.any(bad):
        nodes = [tuple(int(i) for i in x) for x in np.argwhere(bad)[:max_listed]]
        return AnalysisReport("barrier_oscillation_check", inputs,
                              {"precondition": "failed", "failing_nodes": nodes,
                               "failing_count": int(bad.sum())}, tols, passed=False)

    source = "node"
    y_idx = dom.nearest_index(p)
    if np.allclose(dom.position(y_idx), p, atol=1e-12 * dom.r0) and ok[y_idx]:
        wy = float(W.values[y_idx])
    elif W.generator is not None and np.isfinite(W.generator.value(p[None])[0]):
        wy, source = float(W.generator.value(p[None])[0]), "generator"
    elif center_value is not None:
        wy, source = float(center_value), "supplied"
    else:
        dmin = dy[ball].min()
        wy = float(W.values[ball & (dy <= dmin * (1 + 1e-9))].min())
        source = "innermost-shell"
    vals = W.values[ball]
    osc = float(max(vals.max(), wy) - min(vals.min(), wy))
    lhs = vals - wy
    rhs = osc * (dy[ball] / R_eff) ** gamma + tols["barrier_tol"]
    slack = rhs - lhs
    return AnalysisReport(
        "barrier_oscillation_check", inputs,
        {"precondition": "ok", "gamma": gamma, "R_effective": R_eff, "osc": osc,
         "W_y": wy, "W_y_source": source, "min_slack": float(slack.min()),
         "nodes": int(ball.sum()),
         "unchecked_cone_nodes": int((ball & ~(np.isfinite(margins) & np.isfinite(tau))).sum())},
        tols, passed=bool(slack.min() >= 0.0))


# -- W^{1,p} ---------------------------------------------------------------------------

def w1p_norm(W: ScalarField, p, radii=None, div_tol=DIVERGENCE_TOL):
    """``int |grad W|^p`` by midpoint quadrature, with the nested-excision trend."""
    if not p >= 1:
        raise InvalidInputError(f"p={p} must be at least 1")
    g = _grad_norm(W)
    integrand = g ** p
    total = W.h ** W.domain.n * float(np.nansum(integrand))
    out = {"p": p, "integral": total}
    try:
        radii = excision_radii(W.domain) if radii is None else radii
        tr = nested_trend(integrand, W.domain, radii, div_tol)
        out.update(trend=tr.as_dict(), verdict=tr.verdict, rate=tr.rate)
    except ResolutionError as exc:
        out.update(verdict="unresolved", note=str(exc))
    return AnalysisReport("w1p_norm", {"domain": W.domain, "p": p}, out,
                          {"divergence_tol": div_tol})


def w1p_threshold_scan(W: ScalarField, ps, radii=None, div_tol=DIVERGENCE_TOL):
    """Verdicts over a list of exponents and the bracket where they flip."""
    radii = excision_radii(W.domain) if radii is None else radii
    g = _grad_norm(W)
    rows = []
    for p in ps:
        tr = nested_trend(g ** p, W.domain, radii, div_tol)
        rows.append({"p": float(p), "rate": tr.rate, "verdict": tr.verdict})
    flip = None
    for a, b in zip(rows, rows[1:]):
        if a["verdict"] == "converging" and b["verdict"] == "diverging":
            flip = (a["p"], b["p"])
            break
    return rows, flip


def grad_v_ln_norm(v: ScalarField, radii=None, div_tol=DIVERGENCE_TOL):
    """``int |grad v|^n`` at nested excisions."""
    n = v.domain.n
    g = _grad_norm(v)
    radii = excision_radii(v.domain) if radii is None else radii
    tr = nested_trend(g ** n, v.domain, radii, div_tol)
    return AnalysisReport("grad_v_ln_norm", {"domain": v.domain},
                          {"value": tr.value, "verdict": tr.verdict, "rate": tr.rate,
                           "trend": tr.as_dict()}, {"divergence_tol": div_tol})


# -- singularity classification ------------------------------------------------------

class SingularityClass(str, Enum):
    BOUNDED = "bounded-extendable"
    GREENS = "greens-rate"
    INDETERMINATE = "indeterminate"


@dataclass
class SingularityVerdict:
    cls: SingularityClass
    slope: float
    sup_deviation: float
    psi_median: float
    inf_estimate: float
    shells: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {"class": self.cls, "slope": self.slope, "sup_deviation": self.sup_deviation,
                "psi_median": self.psi_median, "inf_estimate": self.inf_estimate,
                "shells": self.shells, "notes": self.notes}


def classify_samples(d, u, r0, r_min=0.0, slope_tol=SLOPE_TOL, window=SUP_WINDOW,
                     min_shells=4):
    """Shell-based dichotomy on scattered samples ``(d_i, u_i)``.

    Shells are ``(r0 2^{-j-1}, r0 2^{-j}]`` with inner edge at least ``r_min``.
    """
    d = np.asarray(d, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    keep = np.isfinite(u) & (d > 0)
    d, u = d[keep], u[keep]
    shells = []
    j = 0
    while True:
        hi = r0 * 2.0 ** -j
        lo = hi / 2.0
        if lo < r_min * (1 - 1e-12):
            break
        m = (d > lo) & (d <= hi * (1 + 1e-12))
        if not np.any(m):
            break
        ds, us = d[m], u[m]
        i_min, i_max = int(np.argmin(us)), int(np.argmax(us))
        psi = us - 2.0 * np.log(ds)
        shells.append({"r_outer": hi, "count": int(m.sum()),
                       "u_min": float(us[i_min]), "d_at_min": float(ds[i_min]),
                       "u_max": float(us[i_max]), "d_at_max": float(ds[i_max]),
                       "psi_min": float(psi.min()), "psi_max": float(psi.max())})
        j += 1
    if len(shells) < min_shells:
        raise ResolutionError(f"only {len(shells)} dyadic shells resolved; need {min_shells}")

    x = [s["d_at_min"] for s in shells] + [s["d_at_max"] for s in shells]
    yv = [s["u_min"] for s in shells] + [s["u_max"] for s in shells]
    slope = float(np.polyfit(np.log(x), yv, 1)[0])
    in_shells = d <= shells[0]["r_outer"] * (1 + 1e-12)
    in_shells &= d > shells[-1]["r_outer"] / 2.0
    psi_all = u[in_shells] - 2.0 * np.log(d[in_shells])
    med = float(np.median(psi_all))
    dev = float(np.max(np.abs(psi_all - med)))
    notes = []

    mins = np.array([s["u_min"] for s in shells])
    drops = mins[:-1] - mins[1:]
    inf_est = float(mins.min())
    if abs(slope - 2.0) <= slope_tol and dev <= window:
        cls = SingularityClass.GREENS
        inf_est = -math.inf
    elif np.all(drops <= 1e-12 * (1 + np.abs(mins[1:]))):
        cls = SingularityClass.BOUNDED
        notes.append("shell minima do not decrease toward the centre")
    else:
        pos = drops[drops > 0]
        tail = drops[-3:] if drops.size >= 3 else drops
        if np.all(tail > 0):
            q = float(np.exp(np.polyfit(np.arange(tail.size), np.log(tail), 1)[0]))
        else:
            q = 0.0
        if q < BOUNDED_RATIO and pos.size:
            cls = SingularityClass.BOUNDED
            last = float(tail[-1]) if tail[-1] > 0 else 0.0
            inf_est = float(mins[-1] - last * q / (1.0 - q))
            notes.append(f"shell-minimum decreases shrink geometrically (ratio {q:.3g})")
        else:
            cls = SingularityClass.INDETERMINATE
            notes.append(f"slope {slope:.4g} is not the fundamental rate and minima keep "
                         f"decreasing (ratio {q:.3g}); the field may not be admissible")
    return SingularityVerdict(cls, slope, dev, med, inf_est, shells, notes)


def singularity_classify(u: ScalarField, slope_tol=SLOPE_TOL, window=SUP_WINDOW,
                         min_shells=4):
    dom = u.domain
    return classify_samples(dom.distance, u.values, dom.r0, max(dom.r_exc, dom.h),
                            slope_tol, window, min_shells)


# -- scale-invariant estimate --------------------------------------------------------

def scale_invariant_check(u: ScalarField, order=1, exact=None, growth_tol=GROWTH_TOL):
    """``sup d|grad u|`` (order 1) or ``sup d^2 (|hess u| + |grad u|^2)`` (order 2).

    Passes when the supremum is finite and the per-shell suprema do not grow
    toward the centre (log-log slope at most ``growth_tol``).
    """
    if order not in (1, 2):
        raise InvalidInputError("order must be 1 or 2")
    dom = u.domain
    use_exact = u.generator is not None if exact is None else exact
    if use_exact:
        g = u.exact_gradient()
    else:
        g = gradient_grid(u)
    gn2 = np.sum(g * g, axis=-1)
    d = dom.distance
    if order == 1:
        q = d * np.sqrt(gn2)
    else:
        H = u.exact_hessian() if use_exact else hessian_grid(u)
        flat = H.reshape(-1, dom.n, dom.n)
        okh = np.all(np.isfinite(flat), axis=(1, 2))
        hn = np.full(flat.shape[0], np.nan)
        if np.any(okh):
            w, _ = jacobi_eigh(flat[okh])
            hn[okh] = np.max(np.abs(w), axis=-1)
        q = d ** 2 * (hn.reshape(dom.shape) + gn2)
    valid = np.isfinite(q) & (d > 0)
    if not np.any(valid):
        raise EmptyDomainError("no node with derivatives available")
    sup = float(q[valid].max())
    shell_sup = []
    r = dom.r0
    floor = max(dom.r_exc, dom.h)
    while r / 2 >= floor:
        m = valid & (d > r / 2) & (d <= r)
        if np.any(m):
            shell_sup.append((r, float(q[m].max())))
        r /= 2
    growth = 0.0
    if len(shell_sup) >= 2:
        rs = np.array([s[0] for s in shell_sup])
        vs = np.array([s[1] for s in shell_sup])
        if np.all(vs > 0):
            growth = float(np.polyfit(np.log(1 / rs), np.log(vs), 1)[0])
    passed = math.isfinite(sup) and growth <= growth_tol
    return AnalysisReport(
        "scale_invariant_check", {"domain": dom, "order": order, "exact": use_exact},
        {"sup": sup, "min": float(q[valid].min()), "shell_sup": shell_sup,
         "growth_slope": growth},
        {"growth_tol": growth_tol}, passed=passed)


# -- p-Laplacian -----------------------------------------------------------------------

def p_laplacian(v: ScalarField, p, step=1):
    """Divergence of ``|grad v|^{p-2} grad v`` by flux differencing.

    Normal components at half nodes are one-sided differences; tangential ones
    average the central differences of the two neighbours.
    """
    vals = v.values
    n = v.domain.n
    s = step
    hh = s * v.h
    gc = gradient_grid(v, order=2, step=s)
    div = np.zeros(vals.shape)
    for a in range(n):
        e = [0] * n
        e[a] = s
        fwd = shifted(vals, e)
        ga = (fwd - vals) / hh
        sq = ga ** 2
        for b in range(n):
            if b != a:
                gb = 0.5 * (gc[..., b] + shifted(gc[..., b], e))
                sq = sq + gb ** 2
        flux = sq ** ((p - 2) / 2.0) * ga
        back = [-x for x in e]
        div = div + (flux - shifted(flux, back)) / hh
    return div


def p_laplacian_defect(v: ScalarField, delta, mu=0.0, factor=10.0):
    """Check ``Delta_{p0} v >= -(p0-2) mu |grad v|^{p0-2} v - tau``.

    Checked at nodes where ``hess v + (delta Lap v + mu v) I`` is positive
    semidefinite up to the FD tolerance. ``tau`` is a Richardson estimate
    from the doubled stencil.
    """
    delta = as_rational(delta)
    if float(delta) == 0:
        raise DomainError("p0 is infinite for delta = 0")
    if np.any(v.values[np.isfinite(v.values)] <= 0):
        raise InvalidInputError("v must be positive")
    p0 = float(exponents(v.domain.n, delta).p0)
    n = v.domain.n
    L1 = p_laplacian(v, p0, 1)
    L2 = p_laplacian(v, p0, 2)
    tau = factor * np.maximum(v.h ** 2, np.abs(L1 - L2) / 3.0)
    H = hessian_grid(v)
    lap = np.trace(H, axis1=-2, axis2=-1)
    M = H + ((float(delta) * lap + mu * v.values)[..., None, None]) * np.eye(n)
    flat = M.reshape(-1, n, n)
    okm = np.all(np.isfinite(flat), axis=(1, 2))
    mineig = np.full(flat.shape[0], np.nan)
    if np.any(okm):
        mineig[okm] = jacobi_eigh(flat[okm])[0][:, 0]
    mineig = mineig.reshape(v.domain.shape)
    g = gradient_grid(v)
    gn = np.sqrt(np.sum(g * g, axis=-1))
    lower = -(p0 - 2.0) * mu * gn ** (p0 - 2.0) * v.values - tau
    cone_tol = factor * v.h ** 2 * (1 + np.abs(lap))
    where = np.isfinite(L1) & np.isfinite(tau) & np.isfinite(mineig) & (mineig >= -cone_tol)
    if not np.any(where):
        raise EmptyDomainError("no node satisfies the cone condition with a full stencil")
    slack = L1[where] - lower[where]
    return AnalysisReport(
        "p_laplacian_defect", {"domain": v.domain, "delta": delta, "mu": mu},
        {"p0": p0, "checked_nodes": int(where.sum()), "min_slack": float(slack.min()),
         "max_abs_defect": float(np.max(np.abs(L1[where]))),
         "min_defect": float(L1[where].min())},
        {"tau_factor": factor, "C": (p0 - 2.0) * mu}, passed=bool(slack.min() >= 0))


# -- eigenvalue bounds -------------------------------------------------------------------

def eigen_bound_constants(n, delta, mu):
    """``(c0, C1)`` in ``Lap v >= c0 |hess v| - C1 v`` with the operator norm."""
    d = float(delta)
    return 1.0 / (1.0 + (n - 1) * d), (n + 1) * mu / (1.0 + (n - 1) * d)


def eigen_bound_slacks(hess, v, delta, mu):
    """Slacks of the lower, upper and corollary bounds and the precondition.

    All arrays share the leading shape of ``hess``; non-negative means satisfied.
    """
    H = np.asarray(hess, dtype=float)
    n = H.shape[-1]
    v = np.asarray(v, dtype=float)
    d = float(delta)
    w, _ = jacobi_eigh(H)
    lap = np.sum(w, axis=-1)
    pre = w[..., 0] + d * lap + mu * v
    lower = w[..., 0] - (-d * lap - mu * v)
    upper = (1 + (n - 1) * d) * lap + (n - 1) * mu * v - w[..., -1]
    c0, c1 = eigen_bound_constants(n, d, mu)
    cor = lap - (c0 * np.max(np.abs(w), axis=-1) - c1 * v)
    return pre, lower, upper, cor


def hessian_eigen_bounds(hess, v, delta, mu=0.0, tau=0.0):
    """Eigenvalue bounds for ``hess v`` under ``hess v + (delta Lap v + mu v) I >= 0``."""
    H = np.asarray(hess, dtype=float)
    single = H.ndim == 2
    H = H[None] if single else H
    v = np.broadcast_to(np.asarray(v, dtype=float), H.shape[:-2])
    if np.any(v <= 0) or mu < 0:
        raise InvalidInputError("need v > 0 and mu >= 0")
    pre, lo, up, cor = eigen_bound_slacks(H, v, delta, mu)
    ok = pre >= -tau
    n = H.shape[-1]
    c0, c1 = eigen_bound_constants(n, delta, mu)
    worst = min(float(np.min(lo[ok], initial=np.inf)), float(np.min(up[ok], initial=np.inf)),
                float(np.min(cor[ok], initial=np.inf)))
    return AnalysisReport(
        "hessian_eigen_bounds", {"n": n, "delta": delta, "mu": mu, "count": int(H.shape[0])},
        {"checked": int(ok.sum()), "skipped_precondition": int((~ok).sum()),
         "min_lower_slack": float(np.min(lo[ok], initial=np.inf)),
         "min_upper_slack": float(np.min(up[ok], initial=np.inf)),
         "min_corollary_slack": float(np.min(cor[ok], initial=np.inf)),
         "c0": c0, "C1": c1},
        {"tau": tau}, passed=bool(worst >= -tau) and bool(np.any(ok)))


# -- volume --------------------------------------------------------------------------------

def volume_integral(u: ScalarField, radii=None, div_tol=DIVERGENCE_TOL):
    """``int e^{-n u}`` over active nodes, with the nested-excision trend."""
    dom = u.domain
    with np.errstate(over="ignore"):
        integrand = np.exp(-dom.n * u.values)
    total = dom.h ** dom.n * float(np.nansum(integrand))
    out = {"integral": total}
    try:
        radii = excision_radii(dom) if radii is None else radii
        tr = nested_trend(integrand, dom, radii, div_tol)
        out.update(verdict=tr.verdict, rate=tr.rate, value=tr.value, trend=tr.as_dict())
    except ResolutionError as exc:
        out.update(verdict="unresolved", value=total, note=str(exc))
    return AnalysisReport("volume_integral", {"domain": dom}, out,
                          {"divergence_tol": div_tol})


def volume_growing_balls(generator, n, radii=(4.0, 8.0, 16.0), nodes=128):
    """Total volume from balls of growing radius, extrapolating ``V(R) = V - c R^{-n}``."""
    vols = []
    for R in radii:
        dom = GridDomain.with_nodes(n, nodes, r0=R)
        u = ScalarField.from_generator(dom, generator)
        vols.append(dom.h ** n * float(np.nansum(np.exp(-n * u.values))))
    x = np.asarray(radii, dtype=float) ** -n
    A = np.stack([np.ones_like(x), x], axis=1)
    (v_inf, c), *_ = np.linalg.lstsq(A, np.array(vols), rcond=None)
    return AnalysisReport(
        "volume_growing_balls", {"n": n, "radii": list(radii), "nodes": nodes,
                                 "field": generator.as_dict()},
        {"ball_volumes": vols, "extrapolated": float(v_inf), "tail_coefficient": float(-c)},
        {})
