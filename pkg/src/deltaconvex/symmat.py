"""Small dense symmetric matrices: Jacobi eigenvalues, elementary symmetric
polynomials and spectral assembly.

Every kernel has a batched form acting on stacks ``(..., n, n)`` so that
sampling-heavy checks (cone inclusion, grid Hessians) stay vectorised.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InvalidInputError

MAX_DIM = 8
JACOBI_TOL = 1e-14
MAX_SWEEPS = 60


@dataclass(frozen=True)
class SymTensor:
    """Symmetric ``dim x dim`` matrix; only the upper triangle is stored."""

    dim: int
    upper: tuple

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise InvalidInputError(f"dimension {self.dim} outside 1..{MAX_DIM}")
        expected = self.dim * (self.dim + 1) // 2
        if len(self.upper) != expected:
            raise InvalidInputError(
                f"expected {expected} upper-triangular entries, got {len(self.upper)}")
        if not all(np.isfinite(self.upper)):
            raise InvalidInputError("SymTensor entries must be finite")

    @classmethod
    def from_matrix(cls, m, atol=1e-12):
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"not a square matrix: shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > atol * scale:
            raise InvalidInputError("matrix is not symmetric")
        iu = np.triu_indices(m.shape[0])
        return cls(m.shape[0], tuple(float(x) for x in m[iu]))

    @classmethod
    def identity(cls, dim):
        return cls.from_matrix(np.eye(dim))

    @classmethod
    def diag(cls, values):
        return cls.from_matrix(np.diag(np.asarray(values, dtype=float)))

    @property
    def matrix(self):
        m = np.zeros((self.dim, self.dim))
        iu = np.triu_indices(self.dim)
        m[iu] = self.upper
        return m + np.triu(m, 1).T

    def trace(self):
        return float(np.trace(self.matrix))

    def __add__(self, other):
        return SymTensor.from_matrix(self.matrix + _as_matrix(other))

    def __sub__(self, other):
        return SymTensor.from_matrix(self.matrix - _as_matrix(other))

    def __mul__(self, c):
        return SymTensor(self.dim, tuple(float(c) * x for x in self.upper))

    __rmul__ = __mul__


class EigenTuple(tuple):
    """Eigenvalues sorted non-decreasing."""

    def __new__(cls, values):
        vals = np.asarray(values, dtype=float).ravel()
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("eigenvalues must be finite")
        return super().__new__(cls, (float(v) for v in np.sort(vals)))

    @property
    def dim(self):
        return len(self)

    def asarray(self):
        return np.array(self, dtype=float)


def _as_matrix(x):
    if isinstance(x, SymTensor):
        return x.matrix
    return np.asarray(x, dtype=float)


def jacobi_eigh(mats, tol=JACOBI_TOL, max_sweeps=MAX_SWEEPS):
    """Cyclic Jacobi diagonalisation of a stack of symmetric matrices.

    Returns ``(w, v)`` with eigenvalues ``w`` sorted ascending along the last
    axis and orthonormal eigenvectors in the columns of ``v``. Sweeps stop once
    the off-diagonal Frobenius mass of every matrix is below ``tol * ||S||_F``.
    """
    a = np.array(mats, dtype=float, copy=True)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise InvalidInputError(f"expected (..., n, n) stack, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix stack has non-finite entries")
    n = a.shape[-1]
    lead = a.shape[:-2]
    a = a.reshape((-1, n, n))
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    m = a.shape[0]
    v = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    norm = np.sqrt(np.sum(a * a, axis=(1, 2)))
    offmask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[:, offmask] ** 2, axis=1))
        if np.all(off <= tol * norm):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                active = apq != 0.0
                if not np.any(active):
                    continue
                safe = np.where(active, apq, 1.0)
                with np.errstate(over="ignore", divide="ignore"):
                    # |theta| -> inf gives t -> 0, i.e. no rotation
                    theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
                    t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c3 = c[:, None]
                s3 = s[:, None]
                col_p = a[:, :, p].copy()
                col_q = a[:, :, q].copy()
                a[:, :, p] = c3 * col_p - s3 * col_q
                a[:, :, q] = s3 * col_p + c3 * col_q
                row_p = a[:, p, :].copy()
                row_q = a[:, q, :].copy()
                a[:, p, :] = c3 * row_p - s3 * row_q
                a[:, q, :] = s3 * row_p + c3 * row_q
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                vp = v[:, :, p].copy()
                vq = v[:, :, q].copy()
                v[:, :, p] = c3 * vp - s3 * vq
                v[:, :, q] = s3 * vp + c3 * vq

    w = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1)
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w.reshape(lead + (n,)), v.reshape(lead + (n, n))


def eigenvalues(s):
    """Sorted eigenvalues of a single symmetric tensor."""
    w, _ = jacobi_eigh(_as_matrix(s)[None])
    return EigenTuple(w[0])


def eigh(s):
    """Eigenvalues and the accumulated rotation ``Q`` with ``S = Q diag(w) Q^T``."""
    w, v = jacobi_eigh(_as_matrix(s)[None])
    return EigenTuple(w[0]), v[0]


def elementary_symmetric(lams):
    """All of ``sigma_0 .. sigma_n`` along the last axis.

    Uses ``e_k(l_1..l_m) = e_k(l_1..l_{m-1}) + l_m e_{k-1}(l_1..l_{m-1})``, which
    stays accurate for mixed-sign inputs where characteristic-polynomial
    coefficients would cancel badly.
    """
    lam = np.asarray(lams, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for m in range(n):
        x = lam[..., m]
        for k in range(m + 1, 0, -1):
            e[..., k] = e[..., k] + x * e[..., k - 1]
    return e


def sigma_k(lam, k):
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} outside 1..{n}")
    out = elementary_symmetric(lam)[..., k]
    return float(out) if out.ndim == 0 else out


def normalized_sigma(lam, k):
    """``sigma_k(lam) / C(n, k)``; the mean of the k-fold products."""
    lam = np.asarray(lam, dtype=float)
    return sigma_k(lam, k) / comb(lam.shape[-1], k)


def check_orthogonal(q, tol=1e-12):
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise InvalidInputError(f"frame must be square, got {q.shape}")
    err = np.max(np.abs(q.T @ q - np.eye(q.shape[0])))
    if err > tol:
        raise InvalidInputError(f"frame is not orthogonal (deviation {err:.3e})")
    return q


def spectral_assemble(lam, q):
    """Return ``Q diag(lam) Q^T`` as a SymTensor."""
    lam = np.asarray(lam, dtype=float)
    q = check_orthogonal(q)
    if q.shape[0] != lam.shape[0]:
        raise InvalidInputError("frame and eigenvalue dimensions differ")
    m = (q * lam) @ q.T
    return SymTensor.from_matrix(0.5 * (m + m.T))


def random_orthogonal(n, rng, size=None):
    """Haar-distributed orthogonal matrices (QR of Gaussian with sign fix)."""
    shape = (n, n) if size is None else (size, n, n)
    g = rng.standard_normal(shape)
    q, r = np.linalg.qr(g)
    d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    d = np.where(d == 0, 1.0, d)
    return q * d[..., None, :]


def operator_norm(mats):
    """Spectral norm of symmetric matrices (max |eigenvalue|)."""
    w, _ = jacobi_eigh(mats)
    return np.max(np.abs(w), axis=-1)
