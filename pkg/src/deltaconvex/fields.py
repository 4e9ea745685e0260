"""Sampled scalar fields on punctured balls and annuli.

A :class:`GridDomain` is the Cartesian lattice ``c + (i - (N-1)/2) h`` clipped to
``r_exc <= |x - c| <= r0``. Field values live on the full ``N^n`` array with NaN
on inactive nodes, so finite-difference stencils that reach an inactive node
come out NaN and are treated as "not interior".
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from .cones import as_rational, delta_margins
from .errors import EmptyDomainError, FieldFormatError, InvalidInputError, StencilError
from .report import AnalysisReport
from .symmat import jacobi_eigh, operator_norm

FD_TOL_FACTOR = 10.0


# -- analytic catalog ----------------------------------------------------------

class Generator:
    """Closed-form field with exact first and second derivatives."""

    tag = "generator"

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def hessian(self, x):
        raise NotImplementedError

    def params(self):
        return {}

    def as_dict(self):
        return {"tag": self.tag, **self.params()}

    def __add__(self, other):
        return SumGenerator((self, other))


def _rel(x, x0):
    x = np.asarray(x, dtype=float)
    return x - np.asarray(x0, dtype=float) if x0 is not None else x


@dataclass(frozen=True)
class PowerField(Generator):
    """``coef * |x - x0|^a``."""

    a: float
    coef: float = 1.0
    x0: tuple | None = None
    tag = "power"

    def value(self, x):
        y = _rel(x, self.x0)
        return self.coef * np.linalg.norm(y, axis=-1) ** self.a

    def gradient(self, x):
        y = _rel(x, self.x0)
        r = np.linalg.norm(y, axis=-1)[..., None]
        return self.coef * self.a * r ** (self.a - 2) * y

    def hessian(self, x):
        y = _rel(x, self.x0)
        n = y.shape[-1]
        r = np.linalg.norm(y, axis=-1)[..., None, None]
        yy = y[..., :, None] * y[..., None, :]
        return self.coef * self.a * (r ** (self.a - 2) * np.eye(n)
                                     + (self.a - 2) * r ** (self.a - 4) * yy)

    def params(self):
        return {"a": self.a, "coef": self.coef, "x0": self.x0}


@dataclass(frozen=True)
class LogSingular(Generator):
    """``coef * log|x - x0|``; ``coef = 2`` is the fundamental-solution rate."""

    coef: float = 2.0
    x0: tuple | None = None
    tag = "log-singular"

    def value(self, x):
        return self.coef * np.log(np.linalg.norm(_rel(x, self.x0), axis=-1))

    def gradient(self, x):
        y = _rel(x, self.x0)
        return self.coef * y / np.sum(y * y, axis=-1)[..., None]

    def hessian(self, x):
        y = _rel(x, self.x0)
        n = y.shape[-1]
        r2 = np.sum(y * y, axis=-1)[..., None, None]
        yy = y[..., :, None] * y[..., None, :]
        return self.coef * (np.eye(n) / r2 - 2.0 * yy / r2 ** 2)

    def params(self):
        return {"coef": self.coef, "x0": self.x0}


@dataclass(frozen=True)
class Stereographic(Generator):
    """``log((1 + |x|^2) / 2)``: the round sphere as a conformal factor."""

    tag = "stereographic"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.log((1.0 + np.sum(x * x, axis=-1)) / 2.0)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * x / (1.0 + np.sum(x * x, axis=-1))[..., None]

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        q = (1.0 + np.sum(x * x, axis=-1))[..., None, None]
        xx = x[..., :, None] * x[..., None, :]
        return 2.0 * np.eye(n) / q - 4.0 * xx / q ** 2


@dataclass(frozen=True)
class Quadratic(Generator):
    """``(x-x0)^T M (x-x0) + b.(x-x0) + const``; covers constants and linear fields."""

    M: tuple | None = None
    b: tuple | None = None
    const: float = 0.0
    x0: tuple | None = None
    tag = "polynomial"

    def _mb(self, n):
        m = np.zeros((n, n)) if self.M is None else np.asarray(self.M, dtype=float)
        b = np.zeros(n) if self.b is None else np.asarray(self.b, dtype=float)
        return 0.5 * (m + m.T), b

    def value(self, x):
        y = _rel(x, self.x0)
        m, b = self._mb(y.shape[-1])
        return np.einsum("...i,ij,...j->...", y, m, y) + y @ b + self.const

    def gradient(self, x):
        y = _rel(x, self.x0)
        m, b = self._mb(y.shape[-1])
        return 2.0 * y @ m + b

    def hessian(self, x):
        y = np.asarray(x, dtype=float)
        m, _ = self._mb(y.shape[-1])
        return np.broadcast_to(2.0 * m, y.shape[:-1] + m.shape).copy()

    def params(self):
        return {"M": self.M, "b": self.b, "const": self.const, "x0": self.x0}

    @classmethod
    def constant(cls, c):
        return cls(const=float(c))

    @classmethod
    def linear(cls, b, const=0.0):
        return cls(b=tuple(float(x) for x in b), const=float(const))

    @classmethod
    def radial(cls, coef, n, x0=None):
        return cls(M=tuple(map(tuple, coef * np.eye(n))), x0=x0)


@dataclass(frozen=True)
class SumGenerator(Generator):
    terms: tuple = ()
    tag = "sum"

    def value(self, x):
        return sum(t.value(x) for t in self.terms)

    def gradient(self, x):
        return sum(t.gradient(x) for t in self.terms)

    def hessian(self, x):
        return sum(t.hessian(x) for t in self.terms)

    def params(self):
        return {"terms": [t.as_dict() for t in self.terms]}


@dataclass(frozen=True)
class Rescaled(Generator):
    """``x -> base(lam * x)``."""

    base: Generator
    lam: float
    tag = "rescaled"

    def value(self, x):
        return self.base.value(self.lam * np.asarray(x, dtype=float))

    def gradient(self, x):
        return self.lam * self.base.gradient(self.lam * np.asarray(x, dtype=float))

    def hessian(self, x):
        return self.lam ** 2 * self.base.hessian(self.lam * np.asarray(x, dtype=float))

    def params(self):
        return {"base": self.base.as_dict(), "lam": self.lam}


@dataclass(frozen=True)
class Scaled(Generator):
    """``coef * base``."""

    base: Generator
    coef: float
    tag = "scaled"

    def value(self, x):
        return self.coef * self.base.value(x)

    def gradient(self, x):
        return self.coef * self.base.gradient(x)

    def hessian(self, x):
        return self.coef * self.base.hessian(x)

    def params(self):
        return {"base": self.base.as_dict(), "coef": self.coef}


CATALOG = {
    "power": PowerField,
    "log-singular": LogSingular,
    "stereographic": Stereographic,
    "polynomial": Quadratic,
}


def make_generator(name, **params):
    if name not in CATALOG:
        raise InvalidInputError(f"unknown field {name!r}; choose from {sorted(CATALOG)}")
    for key in ("x0", "M", "b"):
        if params.get(key) is not None:
            params[key] = _tuplify(params[key])
    return CATALOG[name](**params)


def _tuplify(x):
    if isinstance(x, (list, tuple, np.ndarray)):
        return tuple(_tuplify(v) for v in x)
    return float(x)


# -- grids ---------------------------------------------------------------------

@dataclass(frozen=True)
class GridDomain:
    n: int
    h: float
    r0: float
    r_exc: float = 0.0
    center: tuple | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidInputError(f"grid spacing must be positive, got {self.h}")
        if not 0 <= self.r_exc < self.r0:
            raise InvalidInputError(f"need 0 <= r_exc < r0, got {self.r_exc}, {self.r0}")
        if self.n < 1:
            raise InvalidInputError("dimension must be positive")
        c = (0.0,) * self.n if self.center is None else tuple(float(x) for x in self.center)
        if len(c) != self.n:
            raise InvalidInputError("center has the wrong dimension")
        object.__setattr__(self, "center", c)

    @classmethod
    def with_nodes(cls, n, nodes, r0=1.0, r_exc=0.0, center=None):
        """Grid with ``nodes`` points per axis spanning ``[-r0, r0]``."""
        if nodes < 3:
            raise InvalidInputError("need at least 3 nodes per axis")
        return cls(n, 2.0 * r0 / (nodes - 1), r0, r_exc, center)

    @cached_property
    def nodes_per_axis(self):
        return int(math.floor(2.0 * self.r0 / self.h + 1e-9)) + 1

    @property
    def shape(self):
        return (self.nodes_per_axis,) * self.n

    def axis(self, a):
        N = self.nodes_per_axis
        return self.center[a] + (np.arange(N) - (N - 1) / 2.0) * self.h

    def coordinate(self, a):
        """Broadcastable coordinate array for axis ``a``."""
        shape = [1] * self.n
        shape[a] = self.nodes_per_axis
        return self.axis(a).reshape(shape)

    @cached_property
    def points(self):
        return np.stack(np.meshgrid(*[self.axis(a) for a in range(self.n)],
                                    indexing="ij"), axis=-1)

    @cached_property
    def distance(self):
        sq = 0.0
        for a in range(self.n):
            sq = sq + (self.coordinate(a) - self.center[a]) ** 2
        return np.sqrt(np.broadcast_to(sq, self.shape))

    @cached_property
    def mask(self):
        d = self.distance
        return (d <= self.r0 * (1 + 1e-12)) & (d >= self.r_exc)

    def position(self, index):
        return np.array([self.axis(a)[i] for a, i in enumerate(index)])

    def nearest_index(self, x):
        N = self.nodes_per_axis
        idx = np.rint((np.asarray(x, float) - np.array(self.center)) / self.h + (N - 1) / 2.0)
        return tuple(int(i) for i in np.clip(idx, 0, N - 1))

    def as_dict(self):
        return {"n": self.n, "h": self.h, "r0": self.r0, "r_exc": self.r_exc,
                "center": list(self.center), "nodes_per_axis": self.nodes_per_axis}


@dataclass
class ScalarField:
    domain: GridDomain
    values: np.ndarray
    generator: Generator | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.domain.shape:
            raise InvalidInputError(
                f"values shape {self.values.shape} != grid {self.domain.shape}")

    @classmethod
    def from_generator(cls, domain, gen):
        vals = np.full(domain.shape, np.nan)
        m = domain.mask
        with np.errstate(divide="ignore", invalid="ignore"):
            vals[m] = gen.value(domain.points[m])
        bad = m & ~np.isfinite(vals)
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise InvalidInputError(
                f"{gen.tag} is not finite at active node {idx}; raise r_exc")
        return cls(domain, vals, gen)

    @classmethod
    def from_function(cls, domain, fn):
        vals = np.full(domain.shape, np.nan)
        m = domain.mask
        vals[m] = fn(domain.points[m])
        return cls(domain, vals)

    @property
    def mask(self):
        return np.isfinite(self.values)

    @property
    def h(self):
        return self.domain.h

    def with_values(self, values, generator=None):
        return ScalarField(self.domain, values, generator)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def exact_gradient(self):
        if self.generator is None:
            raise InvalidInputError("field has no analytic generator")
        out = np.full(self.domain.shape + (self.domain.n,), np.nan)
        m = self.mask
        out[m] = self.generator.gradient(self.domain.points[m])
        return out

    def exact_hessian(self):
        if self.generator is None:
            raise InvalidInputError("field has no analytic generator")
        n = self.domain.n
        out = np.full(self.domain.shape + (n, n), np.nan)
        m = self.mask
        out[m] = self.generator.hessian(self.domain.points[m])
        return out


# -- finite differences --------------------------------------------------------

def shifted(arr, offset):
    """``out[i] = arr[i + offset]`` with NaN where the index leaves the grid."""
    pad = max(abs(o) for o in offset)
    if pad == 0:
        return arr
    padded = np.pad(arr, pad, mode="constant", constant_values=np.nan)
    sl = tuple(slice(pad + o, pad + o + s) for o, s in zip(offset, arr.shape))
    return padded[sl]


def _unit(n, a, s=1):
    e = [0] * n
    e[a] = s
    return e


def gradient_grid(f: ScalarField, order=2, step=1):
    """Central-difference gradient; ``order`` 2 or 4."""
    v = f.values
    n = f.domain.n
    hh = step * f.h
    out = np.empty(v.shape + (n,))
    for a in range(n):
        p1 = shifted(v, _unit(n, a, step))
        m1 = shifted(v, _unit(n, a, -step))
        if order == 2:
            out[..., a] = (p1 - m1) / (2 * hh)
        elif order == 4:
            p2 = shifted(v, _unit(n, a, 2 * step))
            m2 = shifted(v, _unit(n, a, -2 * step))
            out[..., a] = (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * hh)
        else:
            raise InvalidInputError(f"unsupported difference order {order}")
    return out


def hessian_grid(f: ScalarField, step=1):
    """Second-order central Hessian; symmetric by construction."""
    v = f.values
    n = f.domain.n
    hh = step * f.h
    out = np.empty(v.shape + (n, n))
    for a in range(n):
        out[..., a, a] = (shifted(v, _unit(n, a, step)) - 2 * v
                          + shifted(v, _unit(n, a, -step))) / hh ** 2
        for b in range(a + 1, n):
            def s(sa, sb):
                off = [0] * n
                off[a] = sa * step
                off[b] = sb * step
                return shifted(v, off)
            mixed = (s(1, 1) - s(1, -1) - s(-1, 1) + s(-1, -1)) / (4 * hh ** 2)
            out[..., a, b] = mixed
            out[..., b, a] = mixed
    return out


def _stencil_values(f, node, offsets):
    N = f.domain.nodes_per_axis
    vals = []
    for off in offsets:
        idx = tuple(i + o for i, o in zip(node, off))
        if any(not 0 <= i < N for i in idx) or not np.isfinite(f.values[idx]):
            raise StencilError(f"stencil of node {tuple(node)} reaches inactive node {idx}",
                               node=tuple(node))
        vals.append(f.values[idx])
    return vals


def fd_gradient(f: ScalarField, node):
    node = tuple(int(i) for i in node)
    n = f.domain.n
    g = np.empty(n)
    for a in range(n):
        p, m = _stencil_values(f, node, [_unit(n, a, 1), _unit(n, a, -1)])
        g[a] = (p - m) / (2 * f.h)
    return g


def fd_hessian(f: ScalarField, node):
    from .symmat import SymTensor
    node = tuple(int(i) for i in node)
    n = f.domain.n
    h2 = f.h ** 2
    (c,) = _stencil_values(f, node, [[0] * n])
    m = np.empty((n, n))
    for a in range(n):
        p, q = _stencil_values(f, node, [_unit(n, a, 1), _unit(n, a, -1)])
        m[a, a] = (p - 2 * c + q) / h2
        for b in range(a + 1, n):
            offs = []
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                o = [0] * n
                o[a], o[b] = sa, sb
                offs.append(o)
            pp, pm, mp, mm = _stencil_values(f, node, offs)
            m[a, b] = m[b, a] = (pp - pm - mp + mm) / (4 * h2)
    return SymTensor.from_matrix(m)


def delta_margin_grid(hess, delta):
    """Normalised Gamma_delta margins of a Hessian grid; NaN where undefined."""
    n = hess.shape[-1]
    flat = hess.reshape(-1, n, n)
    ok = np.all(np.isfinite(flat), axis=(1, 2))
    out = np.full(flat.shape[0], np.nan)
    if np.any(ok):
        w, _ = jacobi_eigh(flat[ok])
        out[ok] = delta_margins(w, float(as_rational(delta)))
    return out.reshape(hess.shape[:-2])


def cone_margins_with_tolerance(f: ScalarField, delta, factor=FD_TOL_FACTOR):
    """FD Hessian margins and their per-node discretisation tolerance.

    The tolerance is ``factor * max(h^2, |m_h - m_2h| / 3)``: a floor of
    ``factor * h^2`` (unit third-derivative scale) raised to the Richardson
    estimate of the margin's own O(h^2) error. It is NaN where the doubled
    stencil is unavailable; those nodes are reported as unchecked.
    """
    m1 = delta_margin_grid(hessian_grid(f, 1), delta)
    m2 = delta_margin_grid(hessian_grid(f, 2), delta)
    tol = factor * np.maximum(f.h ** 2, np.abs(m1 - m2) / 3.0)
    return m1, tol


# -- mollification -------------------------------------------------------------

def _smoothstep5(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


@dataclass(frozen=True)
class MollifierSpec:
    """Radial bump: 1 on ``|x| < 1``, quintic smoothstep down to 0 at ``|x| = 2``."""

    n: int
    plateau: float = 1.0
    support: float = 2.0
    quad_points: int = 400_000

    def profile(self, t):
        t = np.asarray(t, dtype=float)
        s = (t - self.plateau) / (self.support - self.plateau)
        return 1.0 - _smoothstep5(s)

    def _radial_moment(self, power):
        m = self.quad_points
        t = (np.arange(m) + 0.5) * (self.support / m)
        area = 2.0 * math.pi ** (self.n / 2) / math.gamma(self.n / 2)
        return area * np.sum(self.profile(t) * t ** (self.n - 1 + power)) * (self.support / m)

    @cached_property
    def normalization(self):
        return float(self._radial_moment(0))

    @cached_property
    def second_moment(self):
        """``int |y|^2 rho(y) dy`` for the normalised bump."""
        return float(self._radial_moment(2) / self.normalization)

    def __call__(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        return self.profile(r) / self.normalization


def mollifier_kernel(n, h, h_m, spec=None):
    """Discrete kernel on the lattice and its raw (pre-renormalisation) mass."""
    spec = spec or MollifierSpec(n)
    reach = int(math.floor(spec.support * h_m / h + 1e-12))
    ax = np.arange(-reach, reach + 1) * h
    pts = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1)
    w = spec(pts / h_m) * (h / h_m) ** n
    raw = float(w.sum())
    return w / raw, raw


def mollify(W: ScalarField, h_m, spec=None):
    """Convolve with the rescaled bump at scale ``h_m``.

    Output nodes are those whose whole kernel support is active. Kernel weights
    are renormalised to unit discrete mass so constants are reproduced to
    rounding.
    """
    h = W.h
    if h_m < 2 * h * (1 - 1e-12):
        raise InvalidInputError(f"mollification scale {h_m} below twice the spacing {h}")
    spec = spec or MollifierSpec(W.domain.n)
    w, raw = mollifier_kernel(W.domain.n, h, h_m, spec)
    finite = np.isfinite(W.values)
    bad = ndimage.correlate((~finite).astype(float), (w > 0).astype(float),
                            mode="constant", cval=1.0)
    eligible = (bad < 0.5) & W.domain.mask
    if not np.any(eligible):
        raise EmptyDomainError(f"no node has its {spec.support}*h_m ball inside the domain")
    sm = ndimage.correlate(np.where(finite, W.values, 0.0), w, mode="constant", cval=0.0)
    out = np.where(eligible, sm, np.nan)
    return ScalarField(W.domain, out, meta={"mollified": h_m, "kernel_raw_mass": raw})


def mollified_hessian_cone_check(W: ScalarField, delta, h_m, spec=None,
                                 factor=FD_TOL_FACTOR, max_listed=20):
    """Check that mollification keeps FD Hessians inside the closed delta-cone."""
    m_in, tol_in = cone_margins_with_tolerance(W, delta, factor)
    checked_in = np.isfinite(m_in) & np.isfinite(tol_in)
    fail_in = checked_in & (m_in < -tol_in)
    inputs = {"domain": W.domain, "delta": delta, "h_m": h_m,
              "field": W.generator.as_dict() if W.generator else None}
    tols = {"tau_factor": factor, "h": W.h}
    if np.any(fail_in):
        nodes = [tuple(int(i) for i in x) for x in np.argwhere(fail_in)[:max_listed]]
        return AnalysisReport(
            "mollified_hessian_cone_check", inputs,
            {"precondition": "failed", "failing_input_nodes": nodes,
             "failing_count": int(fail_in.sum()),
             "min_input_margin": float(np.nanmin(m_in))},
            tols, passed=False)
    Wh = mollify(W, h_m, spec)
    m_out, tol_out = cone_margins_with_tolerance(Wh, delta, factor)
    have = np.isfinite(m_out)
    if not np.any(have):
        raise EmptyDomainError("mollified field has no interior node for the Hessian")
    min_out = float(np.min(m_out[have]))
    tol_use = np.where(np.isfinite(tol_out), tol_out, factor * W.h ** 2)
    fail_out = have & (m_out < -tol_use)
    return AnalysisReport(
        "mollified_hessian_cone_check", inputs,
        {"precondition": "ok",
         "min_input_margin": float(np.min(m_in[np.isfinite(m_in)])),
         "min_output_margin": min_out,
         "output_nodes": int(have.sum()),
         "unchecked_input_nodes": int((np.isfinite(m_in) & ~checked_in).sum()),
         "kernel_raw_mass": Wh.meta["kernel_raw_mass"],
         "failing_output_count": int(fail_out.sum())},
        tols, passed=not np.any(fail_out))


# -- lift and inversion ------------------------------------------------------------

def lambda_lift(v: ScalarField, A=None, beta=1.0, safety=1.0):
    """``W = v + Lambda |x - O|^2`` with ``Lambda = safety + max |beta v A| / 2``.

    ``A`` is None (flat), a constant ``(n, n)`` matrix, or a per-node array of
    shape ``grid + (n, n)``.
    """
    m = v.mask
    if np.any(v.values[m] <= 0):
        raise InvalidInputError("lambda_lift needs v > 0 on active nodes")
    n = v.domain.n
    if A is None:
        top = 0.0
    else:
        A = np.asarray(A, dtype=float)
        if A.shape == (n, n):
            top = float(np.max(np.abs(beta * v.values[m]))) * float(operator_norm(A[None])[0])
        else:
            mats = beta * v.values[m][:, None, None] * A[m]
            top = float(np.max(operator_norm(mats)))
    lam = safety + 0.5 * top
    d2 = v.domain.distance ** 2
    gen = None
    if v.generator is not None:
        gen = v.generator + Quadratic.radial(lam, n, x0=v.domain.center)
    return ScalarField(v.domain, v.values + lam * d2, gen), lam


def invert_coordinates(x):
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    if np.any(r2 == 0):
        raise InvalidInputError("inversion is undefined at the origin")
    return x / r2


def _jacobian_fd4(fn, z, rel_step=1e-3):
    n = z.shape[0]
    eps = rel_step * np.linalg.norm(z)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = eps
        J[:, j] = (-fn(z + 2 * e) + 8 * fn(z + e) - 8 * fn(z - e) + fn(z - 2 * e)) / (12 * eps)
    return J


def pullback_flat_check(n=3, r0=1.0, count=100, seed=0, tol=1e-9):
    """Pull ``g_* = |x|^{-4} delta`` back to inverted coordinates and compare with delta."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = r0 * rng.uniform(0.05, 1.0, size=count)
    worst = 0.0
    for x in dirs * radii[:, None]:
        z = invert_coordinates(x)
        J = _jacobian_fd4(invert_coordinates, z)
        g = J.T @ J / np.sum(x * x) ** 2
        worst = max(worst, float(np.max(np.abs(g - np.eye(n)))))
    return AnalysisReport("pullback_flat_check", {"n": n, "r0": r0, "count": count},
                          {"max_deviation": worst}, {"tol": tol},
                          passed=worst <= tol, seed=seed)


def psi_field(u: ScalarField):
    """``Psi = u - 2 log|x - O|``: u measured against the fundamental rate."""
    with np.errstate(divide="ignore"):
        vals = u.values - 2.0 * np.log(u.domain.distance)
    return u.with_values(np.where(np.isfinite(vals), vals, np.nan))


# -- CSV -------------------------------------------------------------------------

def write_field_csv(f: ScalarField, path):
    d = f.domain
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "h", "r0", "rexc"] + [f"c{a + 1}" for a in range(d.n)])
        w.writerow([d.n, repr(d.h), repr(d.r0), repr(d.r_exc)] + [repr(c) for c in d.center])
        w.writerow([f"i{a + 1}" for a in range(d.n)] + ["value"])
        for idx in np.argwhere(np.isfinite(f.values)):
            w.writerow([int(i) for i in idx] + [repr(float(f.values[tuple(idx)]))])


def read_field_csv(path, strict=True):
    """Read a field; with ``strict`` every active node of the grid must be present."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise FieldFormatError(f"{path}: missing header lines")
    try:
        head = rows[1]
        n = int(head[0])
        domain = GridDomain(n, float(head[1]), float(head[2]), float(head[3]),
                            tuple(float(c) for c in head[4:4 + n]))
    except (ValueError, IndexError, InvalidInputError) as exc:
        raise FieldFormatError(f"{path}: bad grid header: {exc}") from exc
    vals = np.full(domain.shape, np.nan)
    N = domain.nodes_per_axis
    for lineno, row in enumerate(rows[3:], start=4):
        if not row:
            continue
        if len(row) != n + 1:
            raise FieldFormatError(f"{path}:{lineno}: expected {n + 1} columns")
        idx = tuple(int(i) for i in row[:n])
        if any(not 0 <= i < N for i in idx) or not domain.mask[idx]:
            raise FieldFormatError(f"{path}:{lineno}: node {idx} is not an active node")
        vals[idx] = float(row[n])
    missing = domain.mask & ~np.isfinite(vals)
    if strict and np.any(missing):
        nodes = [tuple(int(i) for i in x) for x in np.argwhere(missing)]
        raise FieldFormatError(f"{path}: {len(nodes)} active nodes missing", missing=nodes)
    return ScalarField(domain, vals)
