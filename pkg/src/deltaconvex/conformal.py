"""Pointwise conformal geometry on a flat (or pointwise rescaled) background.

Conventions: a conformal metric is ``g_u = e^{-2u} g`` and eigenvalues of the
transformed Schouten tensor are always taken with respect to the background
``g``, represented by the identity in working coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb

import numpy as np

from .cones import BOUNDARY_TOL, ConeSpec, Verdict, as_rational, tau_threshold
from .errors import DomainError, InvalidInputError
from .symmat import SymTensor, eigenvalues, elementary_symmetric


def _mat(x):
    return x.matrix if isinstance(x, SymTensor) else np.asarray(x, dtype=float)


def schouten_from_ricci(ric, scalar, n=None):
    """``A = (Ric - R/(2(n-1)) g) / (n-2)`` in flat coordinates."""
    r = _mat(ric)
    n = r.shape[0] if n is None else n
    if n < 3:
        raise DomainError("the Schouten tensor needs n >= 3")
    a = (r - scalar / (2.0 * (n - 1)) * np.eye(n)) / (n - 2)
    return SymTensor.from_matrix(a)


def ricci_from_schouten_tensor(a):
    """Inverse of :func:`schouten_from_ricci`: ``Ric = (n-2) A + tr(A) g``.

    Returns ``(Ric, R)``.
    """
    m = _mat(a)
    n = m.shape[0]
    tr = float(np.trace(m))
    ric = (n - 2) * m + tr * np.eye(n)
    return SymTensor.from_matrix(ric), 2.0 * (n - 1) * tr


@dataclass
class ConformalPointData:
    """Background Schouten tensor and the 2-jet of u at one point.

    ``metric_scale`` is the pointwise factor ``s`` with ``g = s * delta``; it only
    enters through index raising, since in conformally flat coordinates the
    gradient term ``|du|_g^2 g`` is independent of ``s``.
    """

    A: np.ndarray
    grad_u: np.ndarray
    hess_u: np.ndarray
    u: float = 0.0
    metric_scale: float = 1.0

    def __post_init__(self):
        self.A = _mat(self.A)
        self.grad_u = np.asarray(self.grad_u, dtype=float)
        self.hess_u = _mat(self.hess_u)
        n = self.grad_u.shape[0]
        if self.A.shape != (n, n) or self.hess_u.shape != (n, n):
            raise InvalidInputError("A, grad_u and hess_u dimensions disagree")
        for name in ("A", "grad_u", "hess_u"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidInputError(f"{name} has non-finite entries")
        if not np.isfinite(self.u) or not self.metric_scale > 0:
            raise InvalidInputError("u must be finite and metric_scale positive")

    @property
    def dim(self):
        return self.grad_u.shape[0]


def conformal_change_matrix(a, grad_u, hess_u):
    """Vectorised ``A + hess u + du (x) du - |du|^2/2 g`` over leading axes."""
    a = np.asarray(a, dtype=float)
    g = np.asarray(grad_u, dtype=float)
    h = np.asarray(hess_u, dtype=float)
    n = g.shape[-1]
    outer = g[..., :, None] * g[..., None, :]
    sq = np.sum(g * g, axis=-1)[..., None, None]
    return a + h + outer - 0.5 * sq * np.eye(n)


def conformal_change(p: ConformalPointData):
    return SymTensor.from_matrix(conformal_change_matrix(p.A, p.grad_u, p.hess_u))


def raised_eigenvalues(t, metric_scale=1.0):
    """Eigenvalues of ``g^{-1} T`` for ``g = metric_scale * delta``."""
    return tuple(x / metric_scale for x in eigenvalues(t))


# -- curvature operators -------------------------------------------------------

class OperatorKind(str, Enum):
    SIGMA_K = "sigma_k"
    QUOTIENT = "quotient"
    SIGMA_K_TAU = "sigma_k_tau"
    DET_DELTA = "det_delta"


@dataclass(frozen=True)
class CurvatureOperator:
    kind: OperatorKind
    dim: int
    k: int | None = None
    l: int | None = None
    tau: Fraction | float | None = None
    delta: Fraction | float | None = None
    tol: float = field(default=BOUNDARY_TOL, compare=False)

    def __post_init__(self):
        n = self.dim
        if self.kind in (OperatorKind.SIGMA_K, OperatorKind.QUOTIENT, OperatorKind.SIGMA_K_TAU):
            if self.k is None or not 1 <= self.k <= n:
                raise DomainError(f"k={self.k} outside 1..{n}")
        if self.kind is OperatorKind.QUOTIENT and (self.l is None or not 1 <= self.l < self.k):
            raise DomainError(f"quotient needs 1 <= l < k, got l={self.l}")
        if self.kind is OperatorKind.SIGMA_K_TAU and (self.tau is None or self.tau > 1):
            raise DomainError(f"tau={self.tau} must satisfy tau <= 1")
        if self.kind is OperatorKind.DET_DELTA and (self.delta is None
                                                    or not self.delta > -1.0 / n):
            raise DomainError(f"delta={self.delta} must exceed -1/n")

    @classmethod
    def sigma_k(cls, n, k):
        return cls(OperatorKind.SIGMA_K, n, k=k)

    @classmethod
    def quotient(cls, n, k, l):
        return cls(OperatorKind.QUOTIENT, n, k=k, l=l)

    @classmethod
    def sigma_k_tau(cls, n, k, tau):
        return cls(OperatorKind.SIGMA_K_TAU, n, k=k, tau=as_rational(tau))

    @classmethod
    def det_delta(cls, n, delta):
        return cls(OperatorKind.DET_DELTA, n, delta=as_rational(delta))

    @property
    def cone(self):
        if self.kind is OperatorKind.DET_DELTA:
            return ConeSpec.gamma_delta(self.dim, self.delta)
        return ConeSpec.gamma_sigma_k(self.dim, self.k)

    @property
    def tau_admits_estimate(self):
        """Whether tau exceeds the explicit threshold 2(n-k)/n."""
        if self.kind is not OperatorKind.SIGMA_K_TAU:
            return None
        return self.tau > tau_threshold(self.dim, self.k)

    def __call__(self, lam):
        return evaluate_F(self, lam)


def tau_shift(lam_a, tau, n=None):
    """Eigenvalues of ``A^tau = A + (1 - tau) sigma_1(A) / (n - 2) g``."""
    lam = np.asarray(lam_a, dtype=float)
    n = lam.shape[-1] if n is None else n
    if n < 3:
        raise DomainError("A^tau needs n >= 3")
    s1 = np.sum(lam, axis=-1, keepdims=True)
    return lam + (1.0 - float(tau)) * s1 / (n - 2)


def evaluate_F(op: CurvatureOperator, lam):
    """Evaluate the 1-homogeneous operator on an eigenvalue tuple.

    For ``SIGMA_K_TAU`` the tuple must already be the ``A^tau`` spectrum (see
    :func:`tau_shift`). Returns exactly 0 when a vanishing factor is within the
    boundary tolerance, and raises :class:`DomainError` outside the closure of
    the operator's cone.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (op.dim,):
        raise InvalidInputError(f"expected {op.dim} eigenvalues, got shape {lam.shape}")
    cone = op.cone
    cm = cone.margin(lam, tol=op.tol)
    if cm.verdict is Verdict.EXTERIOR:
        raise DomainError(f"eigenvalues outside closure of {cone.name} (margin {cm.margin:.3e})")
    norm = float(np.linalg.norm(lam))
    if norm == 0.0:
        return 0.0
    n = op.dim
    if op.kind is OperatorKind.DET_DELTA:
        shifted = lam + float(op.delta) * lam.sum()
        if np.min(shifted) / norm <= op.tol:
            return 0.0
        return float(np.prod(shifted) ** (1.0 / n))
    e = elementary_symmetric(lam)
    k = op.k
    if e[k] / (comb(n, k) * norm ** k) <= op.tol:
        return 0.0
    if op.kind is OperatorKind.QUOTIENT:
        l = op.l
        return float((e[k] / e[l]) ** (1.0 / (k - l)))
    return float(e[k] ** (1.0 / k))


class Admissibility(str, Enum):
    STRICT = "strictly-admissible"
    DEGENERATE = "admissible-degenerate"
    INADMISSIBLE = "inadmissible"


def admissibility_classify(lam_au, cone: ConeSpec, tol=BOUNDARY_TOL):
    verdict = cone.margin(lam_au, tol=tol).verdict
    return {
        Verdict.STRICT_INTERIOR: Admissibility.STRICT,
        Verdict.BOUNDARY: Admissibility.DEGENERATE,
        Verdict.EXTERIOR: Admissibility.INADMISSIBLE,
    }[verdict]


# -- the u <-> v transform ----------------------------------------------------

def v_transform(u, beta):
    if not beta > 0:
        raise DomainError(f"beta={beta} must be positive")
    return np.exp(beta * np.asarray(u, dtype=float))


def u_of_v(v, beta):
    v = np.asarray(v, dtype=float)
    if not beta > 0:
        raise DomainError(f"beta={beta} must be positive")
    if np.any(v <= 0):
        raise DomainError("v must be positive to invert v = exp(beta u)")
    return np.log(v) / beta


def v_jet_from_u(u, grad_u, hess_u, beta):
    """``(v, grad v, hess v)`` for ``v = exp(beta u)`` by the chain rule."""
    g = np.asarray(grad_u, dtype=float)
    h = np.asarray(hess_u, dtype=float)
    v = np.exp(beta * np.asarray(u, dtype=float))
    vv = np.asarray(v)[..., None]
    grad_v = beta * vv * g
    hess_v = beta * vv[..., None] * (h + beta * g[..., :, None] * g[..., None, :])
    return v, grad_v, hess_v


def hessian_v_cone_form(a, beta, v, hess_v):
    """``hess v + beta v A``; lies in the closed delta-cone for admissible u."""
    a = np.asarray(_mat(a), dtype=float)
    v = np.asarray(v, dtype=float)
    return np.asarray(_mat(hess_v)) + beta * v[..., None, None] * a


def gradient_tensor(grad_v, delta):
    """``(1 + n delta)/(1 + delta) dv (x) dv - |dv|^2 g``."""
    g = np.asarray(grad_v, dtype=float)
    n = g.shape[-1]
    c = (1.0 + n * float(delta)) / (1.0 + float(delta))
    return c * np.outer(g, g) - float(g @ g) * np.eye(n)


def gradient_tensor_eigenvalues(n, delta, grad_norm=1.0):
    d = float(delta)
    top = (n - 1) * d / (1.0 + d)
    return tuple(x * grad_norm ** 2 for x in [top] + [-1.0] * (n - 1))


def a_v_formula(v, grad_v, hess_v, a, alpha):
    """Schouten tensor of ``e^{-2u} g`` written through ``v = e^{u/alpha}``."""
    v = float(v)
    if v <= 0:
        raise DomainError("v must be positive")
    g = np.asarray(grad_v, dtype=float)
    n = g.shape[0]
    return SymTensor.from_matrix(
        _mat(a)
        + alpha * _mat(hess_v) / v
        + (alpha ** 2 - alpha) * np.outer(g, g) / v ** 2
        - 0.5 * alpha ** 2 * float(g @ g) / v ** 2 * np.eye(n))


def conformal_laplacian_defect(w, lap_w, scalar, n):
    """``L w = lap w - (n-2)/(4(n-1)) R w``."""
    return lap_w - (n - 2) / (4.0 * (n - 1)) * scalar * w
