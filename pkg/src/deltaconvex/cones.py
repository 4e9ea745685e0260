"""Membership, margins and exponent calculus for the cones Gamma_delta and
Gamma_{sigma_k}.

Margins are normalised by ``||lambda||`` so that verdicts are scale invariant.
For ``Gamma_delta`` the margin is ``min_i (lambda_i + delta * sum(lambda))``; for
``Gamma_{sigma_k}`` it is ``min_{j<=k} sigma_j(lambda) / C(n, j)``, both taken on
the unit-normalised tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import comb

import numpy as np

from .errors import DomainError, InvalidInputError, SamplingError
from .report import AnalysisReport
from .symmat import EigenTuple, elementary_symmetric

BOUNDARY_TOL = 1e-9
EPS_SCALE = 1e-300
INF = math.inf


class Verdict(str, Enum):
    STRICT_INTERIOR = "strict-interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class ConeSpec:
    """Either ``Gamma_delta`` (kind ``"delta"``) or ``Gamma_{sigma_k}``."""

    kind: str
    dim: int
    delta: float | Fraction | None = None
    k: int | None = None

    def __post_init__(self):
        if self.kind == "delta":
            if self.delta is None or not self.delta > Fraction(-1, self.dim):
                raise DomainError(f"Gamma_delta needs delta > -1/n, got {self.delta}")
        elif self.kind == "sigma_k":
            if self.k is None or not 1 <= self.k <= self.dim:
                raise DomainError(f"Gamma_sigma_k needs 1 <= k <= n, got k={self.k}")
        else:
            raise InvalidInputError(f"unknown cone kind {self.kind!r}")

    @classmethod
    def gamma_delta(cls, dim, delta):
        return cls("delta", dim, delta=delta)

    @classmethod
    def gamma_sigma_k(cls, dim, k):
        return cls("sigma_k", dim, k=k)

    @property
    def name(self):
        if self.kind == "delta":
            return f"Gamma_delta(delta={self.delta})"
        return f"Gamma_sigma_{self.k}"

    def margin(self, lam, tol=BOUNDARY_TOL):
        if self.kind == "delta":
            return gamma_delta_margin(lam, self.delta, tol=tol)
        return gamma_sigmak_margin(lam, self.k, tol=tol)

    def margins(self, lams):
        """Vectorised normalised margins over the last axis."""
        if self.kind == "delta":
            return delta_margins(lams, float(self.delta))
        return sigmak_margins(lams, self.k)


@dataclass(frozen=True)
class ConeMargin:
    margin: float
    verdict: Verdict
    tol: float

    @classmethod
    def from_margin(cls, margin, tol=BOUNDARY_TOL):
        return cls(float(margin), classify_margin(margin, tol), tol)


def classify_margin(margin, tol=BOUNDARY_TOL):
    if abs(margin) <= tol:
        return Verdict.BOUNDARY
    return Verdict.STRICT_INTERIOR if margin > tol else Verdict.EXTERIOR


def _unit(lams):
    lam = np.asarray(lams, dtype=float)
    # rescale by the largest entry first so tiny tuples do not underflow in the norm
    top = np.max(np.abs(lam), axis=-1, keepdims=True)
    lam = lam / np.where(top > 0, top, 1.0)
    norm = np.linalg.norm(lam, axis=-1, keepdims=True)
    return lam / np.maximum(norm, EPS_SCALE)


def delta_margins(lams, delta):
    mu = _unit(lams)
    return np.min(mu, axis=-1) + delta * np.sum(mu, axis=-1)


def sigmak_margins(lams, k):
    mu = _unit(lams)
    n = mu.shape[-1]
    e = elementary_symmetric(mu)
    scaled = np.stack([e[..., j] / comb(n, j) for j in range(1, k + 1)], axis=-1)
    return np.min(scaled, axis=-1)


def gamma_delta_margin(lam, delta, tol=BOUNDARY_TOL):
    lam = np.asarray(lam, dtype=float)
    if not delta > -1.0 / lam.shape[-1]:
        raise DomainError(f"delta={delta} must exceed -1/n")
    return ConeMargin.from_margin(float(delta_margins(lam, float(delta))), tol)


def gamma_sigmak_margin(lam, k, tol=BOUNDARY_TOL):
    lam = np.asarray(lam, dtype=float)
    if not 1 <= k <= lam.shape[-1]:
        raise DomainError(f"k={k} outside 1..{lam.shape[-1]}")
    return ConeMargin.from_margin(float(sigmak_margins(lam, k)), tol)


# -- exponent calculus -------------------------------------------------------

def as_rational(x):
    """Exact ``Fraction`` for ints, Fractions and ``"p/q"`` strings; floats pass through."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        s = x.strip()
        if s.lower() in ("inf", "+inf"):
            return INF
        try:
            return Fraction(s)
        except ValueError as exc:
            raise InvalidInputError(f"cannot parse number {x!r}") from exc
    return float(x)


def delta_of_k(n, k):
    """The delta for which k-convex implies delta-convex: (n-k)/(n(k-1))."""
    if n < 3:
        raise DomainError(f"n={n} must be at least 3")
    if not (2 * k > n and k <= n):
        raise DomainError(f"need n/2 < k <= n, got n={n}, k={k}")
    return Fraction(n - k, n * (k - 1))


@dataclass(frozen=True)
class ExponentTable:
    n: int
    delta: Fraction | float
    gamma: Fraction | float
    beta: Fraction | float
    alpha: Fraction | float
    p0: Fraction | float
    p_delta: Fraction | float
    delta0: Fraction | float

    def as_dict(self):
        return {f: getattr(self, f) for f in
                ("n", "delta", "gamma", "beta", "alpha", "p0", "p_delta", "delta0")}


def exponents(n, delta):
    """Constants attached to delta-convexity in dimension n.

    Exact rationals when ``delta`` is rational; ``p0`` and ``p_delta`` are
    ``math.inf`` in the Lipschitz case ``delta = 0``.
    """
    d = as_rational(delta)
    if n < 3:
        raise DomainError(f"n={n} must be at least 3")
    upper = Fraction(1, n - 2)
    if not (0 <= d < upper):
        raise DomainError(f"delta={delta} outside [0, 1/(n-2)) for n={n}")
    one = Fraction(1) if isinstance(d, Fraction) else 1.0
    gamma = (one + (2 - n) * d) / (one + d)
    beta = gamma / 2
    alpha = 1 / beta
    if d == 0:
        p0 = p_delta = INF
    else:
        p0 = 2 + 1 / d
        p_delta = n * (one + d) / ((n - 1) * d)
    delta0 = (one + (2 - n) * d) / 2
    return ExponentTable(n, d, gamma, beta, alpha, p0, p_delta, delta0)


def gamma_tau(n, k, tau):
    """Hoelder exponent for the modified Schouten tensor with parameter tau."""
    t = as_rational(tau)
    if not 2 * k > n or k > n:
        raise DomainError(f"need n/2 < k <= n, got n={n}, k={k}")
    tau0 = Fraction(2 * (n - k), n)
    if not (tau0 < t <= 1):
        raise DomainError(f"tau={tau} must lie in (tau0={tau0}, 1]")
    return (n - 2) * (2 * k - 2 * n + n * t) / (n - 2 * k + k * n - n * t)


def tau_threshold(n, k):
    return Fraction(2 * (n - k), n)


# -- sampling ----------------------------------------------------------------

def sample_sigmak_cone(n, k, count, rng, batch=200_000, min_rate=1e-4):
    """Rejection-sample ``count`` tuples of Gamma_{sigma_k} from ``[-1, 1]^n``."""
    accepted = []
    have = 0
    drawn = 0
    while have < count:
        x = rng.uniform(-1.0, 1.0, size=(batch, n))
        drawn += batch
        e = elementary_symmetric(x)
        keep = np.all(e[:, 1:k + 1] > 0.0, axis=1)
        accepted.append(x[keep])
        have += int(keep.sum())
        rate = have / drawn
        if drawn >= 10 * batch and rate < min_rate:
            raise SamplingError(
                f"acceptance rate {rate:.2e} below {min_rate:.0e} for n={n}, k={k}",
                diagnostics={"drawn": drawn, "accepted": have, "rate": rate})
    out = np.concatenate(accepted)[:count]
    return out, drawn


def inclusion_sample_test(n, k, sample_count=100_000, seed=0, tol=BOUNDARY_TOL):
    """Empirical check that Gamma_{sigma_k} sits inside Gamma_{delta(k,n)}."""
    delta = delta_of_k(n, k)
    rng = np.random.default_rng(seed)
    lams, drawn = sample_sigmak_cone(n, k, sample_count, rng)
    m = delta_margins(lams, float(delta))
    worst = int(np.argmin(m))
    min_margin = float(m[worst])
    return AnalysisReport(
        operation="inclusion_sample_test",
        inputs={"n": n, "k": k, "sample_count": sample_count},
        outputs={
            "delta": delta,
            "min_margin": min_margin,
            "worst_sample": lams[worst].tolist(),
            "violations": int(np.sum(m < -tol)),
            "acceptance_rate": sample_count / drawn,
        },
        tolerances={"boundary_tol": tol},
        passed=min_margin >= -tol,
        seed=seed,
    )


def ricci_from_schouten(lam_a, delta=0.0):
    """Ricci eigenvalues ``(n-2) lambda_i + sigma_1`` and the lower-bound margin.

    The margin is ``min_i Ric_i - [1 + (2-n) delta] sigma_1(A)``.
    """
    lam = np.asarray(lam_a, dtype=float)
    n = lam.shape[-1]
    if n < 3:
        raise DomainError(f"n={n} must be at least 3")
    s1 = np.sum(lam, axis=-1, keepdims=True)
    ric = (n - 2) * lam + s1
    margin = np.min(ric, axis=-1) - (1.0 + (2 - n) * float(delta)) * s1[..., 0]
    if lam.ndim == 1:
        return EigenTuple(ric), float(margin)
    return ric, margin


def sample_delta_cone(n, delta, count, rng, boundary=False):
    """Tuples of the closed Gamma_delta with shifted entries uniform on [0, 1].

    The shifted tuple ``mu_i = lambda_i + delta * sum(lambda)`` is drawn first and
    inverted exactly. With ``boundary`` one shifted entry is set to zero, which
    puts the tuple on the cone boundary.
    """
    d = float(delta)
    if not d > -1.0 / n:
        raise DomainError(f"delta={delta} must exceed -1/n")
    mu = rng.uniform(0.0, 1.0, size=(count, n))
    if boundary:
        mu[np.arange(count), rng.integers(0, n, size=count)] = 0.0
    return mu - (d * mu.sum(axis=1) / (1.0 + n * d))[:, None]
