import itertools
from math import prod

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from deltaconvex.errors import InvalidInputError
from deltaconvex.symmat import (
    EigenTuple,
    SymTensor,
    check_orthogonal,
    eigenvalues,
    eigh,
    elementary_symmetric,
    jacobi_eigh,
    normalized_sigma,
    operator_norm,
    random_orthogonal,
    sigma_k,
    spectral_assemble,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(st.integers(1, 8).flatmap(lambda n: arrays(float, (n, n), elements=finite)))
def test_jacobi_matches_lapack(m):
    s = m + m.T
    w, v = jacobi_eigh(s)
    ref = np.linalg.eigvalsh(s)
    scale = max(1.0, np.abs(s).max())
    assert np.allclose(w, ref, atol=1e-12 * scale * s.shape[0])
    assert np.allclose(v @ np.diag(w) @ v.T, s, atol=1e-11 * scale * s.shape[0])


def test_jacobi_batched_against_lapack(rng):
    for n in range(2, 9):
        b = rng.standard_normal((500, n, n))
        s = b + np.swapaxes(b, 1, 2)
        w, _ = jacobi_eigh(s)
        assert np.max(np.abs(w - np.linalg.eigvalsh(s))) < 1e-12


def test_jacobi_diagonal_and_zero():
    w, v = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
    assert w.tolist() == [-1.0, 2.0, 3.0]
    assert np.allclose(np.abs(v), np.eye(3)[:, [1, 2, 0]])
    w, _ = jacobi_eigh(np.zeros((4, 4)))
    assert np.all(w == 0)


def test_jacobi_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        jacobi_eigh(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_symtensor_roundtrip_and_validation():
    m = np.array([[1.0, 2.0, 0.5], [2.0, -1.0, 0.0], [0.5, 0.0, 3.0]])
    s = SymTensor.from_matrix(m)
    assert np.array_equal(s.matrix, m)
    assert s.trace() == 3.0
    assert np.array_equal((s + s).matrix, 2 * m)
    assert np.array_equal((2 * s - s).matrix, m)
    with pytest.raises(InvalidInputError):
        SymTensor.from_matrix([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(InvalidInputError):
        SymTensor.from_matrix(np.ones((9, 9)))
    with pytest.raises(InvalidInputError):
        SymTensor.from_matrix([[np.inf]])


def test_eigentuple_sorted():
    t = EigenTuple([3, 1, 2])
    assert tuple(t) == (1.0, 2.0, 3.0) and t.dim == 3
    with pytest.raises(InvalidInputError):
        EigenTuple([1, np.nan])


def test_eigenvalues_of_identity():
    assert eigenvalues(SymTensor.identity(4)) == (1.0, 1.0, 1.0, 1.0)


def _brute_sigma(lam, k):
    return sum(prod(c) for c in itertools.combinations(lam, k))


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=7))
def test_elementary_symmetric_brute_force(lam):
    e = elementary_symmetric(lam)
    assert e[0] == 1.0
    for k in range(1, len(lam) + 1):
        assert e[k] == pytest.approx(_brute_sigma(lam, k), abs=1e-9 * 5 ** k * 35)


def test_sigma_k_examples():
    assert sigma_k([1, 1, 1], 2) == 3.0
    assert sigma_k([2, 2, -1], 2) == 0.0
    assert normalized_sigma([1, 1, 1, 1], 3) == 1.0
    with pytest.raises(InvalidInputError):
        sigma_k([1, 2], 3)


def test_spectral_assemble_roundtrip(rng):
    q = random_orthogonal(5, rng)
    lam = np.array([-2.0, -0.5, 0.0, 1.0, 4.0])
    s = spectral_assemble(lam, q)
    w, v = eigh(s)
    assert np.allclose(w, lam, atol=1e-13)
    assert np.allclose(np.abs(np.diag(v.T @ q)), 1.0, atol=1e-10)


def test_check_orthogonal_rejects():
    with pytest.raises(InvalidInputError):
        check_orthogonal([[1.0, 0.1], [0.0, 1.0]])


def test_operator_norm():
    assert operator_norm(np.diag([-3.0, 1.0, 2.0])[None])[0] == 3.0
