"""Radially symmetric conformal factors on flat space.

For ``u = u(r)`` the Schouten tensor of ``e^{-2u}|dx|^2`` has one radial
eigenvalue ``u'' + u'^2/2`` and ``n - 1`` tangential ones ``u'/r - u'^2/2``.
The ODE solver works in ``t = log r`` with state ``(u, q = r u')``, where the
scaled tangential eigenvalue ``T = r^2 lam_tan = q - q^2/2`` depends on ``q``
alone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .analysis import SLOPE_TOL, SUP_WINDOW, classify_samples, trend_from_partials
from .cones import BOUNDARY_TOL
from .conformal import CurvatureOperator, OperatorKind
from .errors import DegeneracyError, DomainError, FieldFormatError, InvalidInputError, ResolutionError
from .report import AnalysisReport

DEFAULT_STEP = 1e-3


def radial_schouten(u, du, d2u, r):
    """``(lam_rad, lam_tan)``; ``u`` itself does not enter on a flat background."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radial_schouten needs r > 0")
    du = np.asarray(du, dtype=float)
    d2u = np.asarray(d2u, dtype=float)
    return d2u + 0.5 * du ** 2, du / r - 0.5 * du ** 2


def full_spectrum(lam_rad, lam_tan, n):
    return np.array([lam_rad] + [lam_tan] * (n - 1), dtype=float)


@dataclass
class RadialProfile:
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    source: str = "analytic"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("r", "u", "du", "d2u"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.r.shape == self.u.shape == self.du.shape == self.d2u.shape):
            raise InvalidInputError("profile arrays differ in length")
        if self.r.size < 2 or np.any(self.r <= 0) or np.any(np.diff(self.r) <= 0):
            raise InvalidInputError("r must be positive and strictly increasing")

    @classmethod
    def from_functions(cls, u, du, d2u, r_min, r_max, count=1001):
        r = np.geomspace(r_min, r_max, count)
        return cls(r, u(r), du(r), d2u(r))

    @classmethod
    def log_model(cls, r_min, r_max, coef=2.0, c=0.0, count=1001):
        """``coef * log r + c``; ``coef = 2`` is the fundamental profile."""
        return cls.from_functions(lambda r: coef * np.log(r) + c, lambda r: coef / r,
                                  lambda r: -coef / r ** 2, r_min, r_max, count)

    @classmethod
    def stereographic(cls, r_min, r_max, count=1001):
        return cls.from_functions(lambda r: np.log((1 + r * r) / 2),
                                  lambda r: 2 * r / (1 + r * r),
                                  lambda r: 2 * (1 - r * r) / (1 + r * r) ** 2,
                                  r_min, r_max, count)

    def schouten(self):
        return radial_schouten(self.u, self.du, self.d2u, self.r)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "u", "du", "d2u"])
            for row in zip(self.r, self.u, self.du, self.d2u):
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["r", "u", "du", "d2u"]:
            raise FieldFormatError(f"{path}: expected header r,u,du,d2u")
        try:
            data = np.array([[float(x) for x in row] for row in rows[1:] if row])
        except ValueError as exc:
            raise FieldFormatError(f"{path}: {exc}") from exc
        return cls(*data.T, source="csv")


# -- ODE -------------------------------------------------------------------------

def _scaled_rhs_factory(op: CurvatureOperator, f, n, tol):
    """Return ``R(t, u, q) = r^2 lam_rad`` solving the equation, or raise."""
    k = op.k

    def a(j, T):
        return comb(n - 1, j - 1) * T ** (j - 1)

    def b(j, T):
        return comb(n - 1, j) * T ** j

    def check(t, u, ak):
        # ak = r^{2(k-1)} sigma_{k-1}(lam_tan); test the eigenvalues taken
        # against g = e^{-2u}|dx|^2, which are e^{2u} lam_tan
        s = ak * math.exp(2.0 * (k - 1) * (u - t))
        if s <= tol:
            raise DegeneracyError(
                f"sigma_{k - 1} of the tangential block is {s:.3e} <= {tol:g}",
                radius=math.exp(t))

    if op.kind is OperatorKind.SIGMA_K:
        def R(t, u, q):
            T = q - 0.5 * q * q
            ak = a(k, T)
            check(t, u, ak)
            rhs = (f * math.exp(2 * t - 2 * u)) ** k
            return (rhs - b(k, T)) / ak
        return R

    l = op.l

    def R(t, u, q):
        T = q - 0.5 * q * q
        ak = a(k, T)
        check(t, u, ak)
        F = (f * math.exp(2 * t - 2 * u)) ** (k - l)
        coef = ak - F * a(l, T)
        if abs(coef) <= tol:
            raise DegeneracyError("quotient equation is not solvable for u''",
                                  radius=math.exp(t))
        rr = (F * b(l, T) - b(k, T)) / coef
        if rr * a(l, T) + b(l, T) <= 0:
            raise DegeneracyError(f"sigma_{l} left the positive cone", radius=math.exp(t))
        return rr
    return R


def radial_ode_solve(op: CurvatureOperator, f, n, initial, r_end, step=DEFAULT_STEP,
                     tol=BOUNDARY_TOL):
    """Integrate ``F(A_u) = f e^{-2u}`` for radial ``u`` from ``initial = (r_a, u_a, u'_a)``.

    Fixed-step RK4 in ``t = log r``; ``r_end`` may lie on either side of
    ``r_a``. The returned profile is ordered by increasing ``r``.
    """
    if op.kind not in (OperatorKind.SIGMA_K, OperatorKind.QUOTIENT):
        raise InvalidInputError(f"radial reduction is offered for sigma_k and quotients, "
                                f"not {op.kind.value}")
    if op.dim != n:
        raise InvalidInputError("operator dimension differs from n")
    if f < 0:
        raise InvalidInputError("f must be non-negative")
    r_a, u_a, du_a = (float(x) for x in initial)
    if r_a <= 0 or r_end <= 0:
        raise DomainError("radii must be positive")
    R = _scaled_rhs_factory(op, float(f), n, tol)

    def rhs(t, y):
        rr = R(t, y[0], y[1])
        return np.array([y[1], y[1] + rr - 0.5 * y[1] ** 2]), rr

    t0, t1 = math.log(r_a), math.log(r_end)
    steps = max(1, int(math.ceil(abs(t1 - t0) / step - 1e-9)))
    dt = (t1 - t0) / steps
    ts = [t0]
    ys = [np.array([u_a, r_a * du_a])]
    Rs = [rhs(t0, ys[0])[1]]
    y = ys[0]
    t = t0
    for i in range(steps):
        k1, _ = rhs(t, y)
        k2, _ = rhs(t + dt / 2, y + dt / 2 * k1)
        k3, _ = rhs(t + dt / 2, y + dt / 2 * k2)
        k4, _ = rhs(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * dt
        ts.append(t)
        ys.append(y)
        Rs.append(rhs(t, y)[1])
    ts = np.array(ts)
    ys = np.array(ys)
    Rs = np.array(Rs)
    r = np.exp(ts)
    q = ys[:, 1]
    prof = dict(r=r, u=ys[:, 0], du=q / r, d2u=(Rs - 0.5 * q * q) / r ** 2)
    if dt < 0:
        prof = {key: val[::-1] for key, val in prof.items()}
    return RadialProfile(**prof, source="ode",
                         meta={"operator": op.kind.value, "k": op.k, "l": op.l, "f": f,
                               "n": n, "initial": [r_a, u_a, du_a], "step": abs(dt)})


def sigma_k_residual(profile: RadialProfile, n, k, f=0.0):
    """``max |sigma_k(A_u) - (f e^{-2u})^k|`` along a profile."""
    lr, lt = profile.schouten()
    sk = lr * comb(n - 1, k - 1) * lt ** (k - 1) + comb(n - 1, k) * lt ** k
    return float(np.max(np.abs(sk - (f * np.exp(-2 * profile.u)) ** k)))


def classify_radial(profile: RadialProfile, slope_tol=SLOPE_TOL, window=SUP_WINDOW):
    r_min, r_max = float(profile.r[0]), float(profile.r[-1])
    if r_min > r_max / 16 * (1 + 1e-12):
        raise ResolutionError(f"profile spans [{r_min:g}, {r_max:g}]; need r_min <= r_max/16")
    return classify_samples(profile.r, profile.u, r_max, r_min, slope_tol, window)


def radial_volume_trend(profile: RadialProfile, n, levels=None):
    """``|S^{n-1}| int e^{-nu} r^{n-1} dr`` from nested inner radii up to ``r_max``."""
    r, u = profile.r, profile.u
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    t = np.log(r)
    g = area * np.exp(-n * u) * r ** n
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(t))])
    total = cum[-1]
    r_max = r[-1]
    radii = []
    rr = r_max / 2
    while rr >= r[0]:
        radii.append(rr)
        rr /= math.sqrt(2)
    if levels is not None:
        radii = radii[:levels]
    if len(radii) < 3:
        raise ResolutionError("profile too short for a volume trend")
    partial = [total - float(np.interp(math.log(x), t, cum)) for x in radii]
    tr = trend_from_partials(radii, partial)
    return AnalysisReport("radial_volume_trend", {"n": n, "r_range": [r[0], r_max]},
                          {"verdict": tr.verdict, "rate": tr.rate, "value": tr.value,
                           "trend": tr.as_dict()}, {})
