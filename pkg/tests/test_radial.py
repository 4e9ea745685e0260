import math
from math import comb

import numpy as np
import pytest
from scipy.integrate import quad

from deltaconvex.analysis import SingularityClass
from deltaconvex.conformal import CurvatureOperator, conformal_change_matrix
from deltaconvex.errors import DegeneracyError, DomainError, FieldFormatError, InvalidInputError, ResolutionError
from deltaconvex.fields import LogSingular, PowerField, Stereographic
from deltaconvex.radial import (
    RadialProfile,
    classify_radial,
    full_spectrum,
    radial_ode_solve,
    radial_schouten,
    radial_volume_trend,
    sigma_k_residual,
)


def sphere(r):
    return np.log((1 + r * r) / 2)


@pytest.mark.parametrize("gen,u,du,d2u", [
    (Stereographic(), sphere, lambda r: 2 * r / (1 + r * r),
     lambda r: 2 * (1 - r * r) / (1 + r * r) ** 2),
    (LogSingular(1.5), lambda r: 1.5 * np.log(r), lambda r: 1.5 / r, lambda r: -1.5 / r ** 2),
    (PowerField(0.7), lambda r: r ** 0.7, lambda r: 0.7 * r ** -0.3,
     lambda r: -0.21 * r ** -1.3),
])
def test_radial_schouten_matches_tensor_formula(gen, u, du, d2u, rng):
    for n in (3, 5):
        for _ in range(10):
            x = rng.standard_normal(n)
            r = np.linalg.norm(x)
            A = conformal_change_matrix(np.zeros((n, n)), gen.gradient(x), gen.hessian(x))
            lr, lt = radial_schouten(u(r), du(r), d2u(r), r)
            assert np.allclose(np.linalg.eigvalsh(A), np.sort(full_spectrum(lr, lt, n)),
                               atol=1e-12 * (1 + abs(lr) + abs(lt)))


def test_radial_schouten_domain():
    with pytest.raises(DomainError):
        radial_schouten(0.0, 1.0, 1.0, 0.0)


def test_fundamental_profile_solves_homogeneous_sigma1():
    prof = radial_ode_solve(CurvatureOperator.sigma_k(3, 1), 0.0, 3, (1.0, 0.0, 2.0), 1e-3)
    assert prof.r[0] == pytest.approx(1e-3) and prof.r[-1] == pytest.approx(1.0)
    assert np.max(np.abs(prof.u - 2 * np.log(prof.r))) < 1e-11
    assert sigma_k_residual(prof, 3, 1) < 1e-9


@pytest.mark.parametrize("n,k", [(3, 1), (3, 2), (3, 3), (4, 2), (4, 3), (5, 4)])
def test_sphere_profile_from_ode(n, k):
    f = comb(n, k) ** (1 / k) / 2
    op = CurvatureOperator.sigma_k(n, k)
    for r_end in (0.05, 20.0):
        prof = radial_ode_solve(op, f, n, (1.0, 0.0, 1.0), r_end)
        assert np.max(np.abs(prof.u - sphere(prof.r))) < 1e-9
        assert sigma_k_residual(prof, n, k, f) < 1e-8 * max(1.0, f ** k)


def test_quotient_sphere_profile():
    n, k, l = 4, 3, 1
    f = (comb(n, k) / comb(n, l)) ** (1 / (k - l)) / 2
    prof = radial_ode_solve(CurvatureOperator.quotient(n, k, l), f, n, (1.0, 0.0, 1.0), 0.1)
    assert np.max(np.abs(prof.u - sphere(prof.r))) < 1e-9


def test_rk4_fourth_order():
    n, k = 3, 2
    f = comb(n, k) ** (1 / k) / 2
    op = CurvatureOperator.sigma_k(n, k)
    # off the exact sphere so the error is not at rounding level
    errs = []
    ref = radial_ode_solve(op, f, n, (1.0, 0.1, 1.1), 3.0, step=1e-3)
    for step in (0.1, 0.05):
        p = radial_ode_solve(op, f, n, (1.0, 0.1, 1.1), 3.0, step=step)
        errs.append(abs(p.u[-1] - ref.u[-1]))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.3)


def test_degenerate_homogeneous_sigma2():
    with pytest.raises(DegeneracyError) as exc:
        radial_ode_solve(CurvatureOperator.sigma_k(3, 2), 0.0, 3, (1.0, 0.0, 2.0), 0.1)
    assert exc.value.radius == pytest.approx(1.0)


def test_ode_validation():
    op = CurvatureOperator.sigma_k(3, 2)
    with pytest.raises(InvalidInputError):
        radial_ode_solve(op, 1.0, 4, (1.0, 0.0, 1.0), 2.0)
    with pytest.raises(InvalidInputError):
        radial_ode_solve(op, -1.0, 3, (1.0, 0.0, 1.0), 2.0)
    with pytest.raises(InvalidInputError):
        radial_ode_solve(CurvatureOperator.det_delta(3, 0.25), 1.0, 3, (1.0, 0.0, 1.0), 2.0)
    with pytest.raises(DomainError):
        radial_ode_solve(op, 1.0, 3, (1.0, 0.0, 1.0), 0.0)


def test_classify_radial():
    g = classify_radial(RadialProfile.log_model(1e-6, 1.0))
    assert g.cls is SingularityClass.GREENS
    b = classify_radial(RadialProfile.stereographic(1e-6, 1.0))
    assert b.cls is SingularityClass.BOUNDED
    assert b.inf_estimate == pytest.approx(math.log(0.5), abs=1e-6)
    i = classify_radial(RadialProfile.log_model(1e-6, 1.0, coef=1.0))
    assert i.cls is SingularityClass.INDETERMINATE
    with pytest.raises(ResolutionError):
        classify_radial(RadialProfile.log_model(0.5, 1.0))


def test_radial_volume_trend():
    n = 3
    prof = RadialProfile.stereographic(1e-6, 1.0, count=20001)
    rep = radial_volume_trend(prof, n)
    exact = 4 * math.pi * quad(lambda r: (2 / (1 + r * r)) ** 3 * r * r, 0, 1)[0]
    assert rep["verdict"] == "converging"
    assert rep["value"] == pytest.approx(exact, rel=1e-4)
    div = radial_volume_trend(RadialProfile.log_model(1e-6, 1.0, coef=1.0, count=20001), n)
    assert div["verdict"] == "diverging"


def test_profile_validation_and_csv(tmp_path):
    with pytest.raises(InvalidInputError):
        RadialProfile([1.0, 0.5], [0, 0], [0, 0], [0, 0])
    with pytest.raises(InvalidInputError):
        RadialProfile([0.5, 1.0], [0, 0], [0, 0], [0])
    prof = RadialProfile.stereographic(0.1, 2.0, count=17)
    p = tmp_path / "p.csv"
    prof.to_csv(p)
    back = RadialProfile.from_csv(p)
    assert back.source == "csv"
    assert np.array_equal(back.u, prof.u) and np.array_equal(back.r, prof.r)
    p.write_text("a,b\n1,2\n")
    with pytest.raises(FieldFormatError):
        RadialProfile.from_csv(p)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sphere_k_equals_n_far_from_unit_radius(n):
    # flat-frame eigenvalues decay like r^-4 but the metric-relative ones stay 1/2
    op = CurvatureOperator.sigma_k(n, n)
    out = radial_ode_solve(op, 0.5, n, (1.0, 0.0, 1.0), 50.0)
    assert np.max(np.abs(out.u - sphere(out.r))) < 1e-8
    # inward the u'' solve divides by ~r^{2(n-1)}: stiff, but convergent in the step
    errs = []
    for step in (1e-3, 5e-4):
        inner = radial_ode_solve(op, 0.5, n, (1.0, 0.0, 1.0), 1e-3, step=step)
        errs.append(np.max(np.abs(inner.u - sphere(inner.r))))
    assert errs[0] < 1e-5
    assert errs[1] < errs[0] / 4 or errs[0] < 1e-10


def test_negative_tangential_start_is_degenerate():
    # lam_tan = u' - u'^2/2 < 0 at r = 1 when u' > 2
    with pytest.raises(DegeneracyError):
        radial_ode_solve(CurvatureOperator.sigma_k(3, 2), 1.0, 3, (1.0, 0.0, 3.0), 2.0)
