import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltaconvex.analysis import (
    SingularityClass,
    barrier_oscillation_check,
    classify_samples,
    cutoff,
    eigen_bound_constants,
    excision_radii,
    grad_v_ln_norm,
    hessian_eigen_bounds,
    holder_exponent,
    nested_trend,
    p_laplacian,
    p_laplacian_defect,
    scale_invariant_check,
    singularity_classify,
    trend_from_partials,
    volume_growing_balls,
    volume_integral,
    w1p_norm,
    w1p_threshold_scan,
)
from deltaconvex.errors import DomainError, InvalidInputError, ResolutionError
from deltaconvex.fields import (
    GridDomain,
    LogSingular,
    PowerField,
    Quadratic,
    ScalarField,
    Stereographic,
)


def field(gen, n=3, nodes=41, r0=1.0, r_exc=0.0):
    return ScalarField.from_generator(GridDomain.with_nodes(n, nodes, r0, r_exc), gen)


# -- trends --------------------------------------------------------------------------

@given(st.floats(0.3, 2.0), st.floats(0.1, 10.0))
def test_trend_geometric_partials(s, c):
    # I(r) = c (1 - r^s): increments ~ r^s, limit c
    radii = [0.5 * 2 ** (-j / 2) for j in range(10)]
    partial = [c * (1 - r ** s) for r in radii]
    tr = trend_from_partials(radii, partial)
    assert tr.rate == pytest.approx(-s, rel=1e-9)
    assert not tr.diverging
    assert tr.value == pytest.approx(c, rel=1e-9)


def test_trend_log_and_power_divergence():
    radii = [0.5 * 2 ** (-j / 2) for j in range(10)]
    tr = trend_from_partials(radii, [math.log(1 / r) for r in radii])
    assert tr.diverging and abs(tr.rate) < 1e-9 and tr.value == math.inf
    tr = trend_from_partials(radii, [r ** -1.5 for r in radii])
    assert tr.diverging and tr.rate == pytest.approx(1.5, rel=1e-6)
    flat = trend_from_partials(radii, [3.0] * 10)
    assert not flat.diverging and flat.value == 3.0


def test_cutoff_profile():
    d = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 2.0])
    c = cutoff(d, 1.0)
    assert c[0] == 0 and c[1] == 0 and c[2] == 0 and c[4] == 1 and c[5] == 1
    assert 0 < c[3] < 1


def test_excision_radii_clearance():
    dom = GridDomain.with_nodes(3, 161, r_exc=0.02)
    radii = excision_radii(dom)
    assert radii[0] == 0.5
    assert all(r / 2 >= dom.r_exc + 2 * dom.h for r in radii)
    assert radii[-1] / math.sqrt(2) / 2 < dom.r_exc + 2 * dom.h
    with pytest.raises(ResolutionError):
        excision_radii(GridDomain.with_nodes(3, 9))


def test_nested_trend_on_radial_power_2d():
    # |x|^{-a} in 2D is integrable iff a < 2; the limit is 2 pi / (2 - a)
    dom = GridDomain.with_nodes(2, 801)
    radii = excision_radii(dom, r_start=0.5)
    d = dom.distance
    mask = dom.mask & (d > 0)
    d = np.where(d > 0, d, 1.0)
    for a, div in ((1.0, False), (2.0, True), (2.5, True)):
        integrand = np.where(mask, d ** -a, np.nan)
        tr = nested_trend(integrand, dom, radii)
        assert tr.diverging is div, (a, tr.rate)
    tr = nested_trend(np.where(mask, d ** -1.0, np.nan), dom, radii)
    assert tr.value == pytest.approx(2 * math.pi, rel=2e-2)


def test_w1p_flip_2d():
    # grad |x|^{1/2} ~ |x|^{-1/2}: p-integrable in 2D iff p < 4
    W = field(PowerField(0.5), n=2, nodes=801)
    rows, flip = w1p_threshold_scan(W, [3.0, 3.5, 3.75, 4.0, 4.5])
    assert [r["verdict"] for r in rows] == ["converging"] * 3 + ["diverging"] * 2
    assert flip == (3.75, 4.0)
    rep = w1p_norm(W, 2.0)
    assert rep["verdict"] == "converging"
    # int |grad|^2 over the unit disk = 2 pi int r^{-1}/4 r dr = pi / 2
    assert rep["trend"]["value"] == pytest.approx(math.pi / 2, rel=2e-2)
    with pytest.raises(InvalidInputError):
        w1p_norm(W, 0.5)


def test_w1p_unresolved_on_coarse_grid():
    rep = w1p_norm(field(PowerField(0.5), nodes=9), 2.0)
    assert rep["verdict"] == "unresolved"


def test_grad_v_ln_norm_diverges_for_log():
    # |grad log|x|| = 1/|x| so |grad|^n ~ |x|^{-n}: logarithmic divergence
    v = field(LogSingular(-1.0), n=2, nodes=801, r_exc=0.001)
    assert grad_v_ln_norm(v)["verdict"] == "diverging"
    smooth = field(Stereographic(), n=2, nodes=201)
    assert grad_v_ln_norm(smooth)["verdict"] == "converging"


# -- Hoelder -------------------------------------------------------------------------------

@pytest.mark.parametrize("a", [0.3, 0.5, 0.8])
def test_holder_exponent_power(a):
    est = holder_exponent(field(PowerField(a), nodes=65))
    assert est.exponent == pytest.approx(a, abs=0.03)
    assert est.residual < 0.05


def test_holder_to_growth_consistency():
    # v = |x|^g with v(O) = 0; u = (2/g) log v obeys u <= 2 log d + (2/g) log [v]_g
    gamma = 0.5
    v = field(PowerField(gamma), nodes=65)
    est = holder_exponent(v)
    assert est.exponent == pytest.approx(gamma, abs=0.02)
    dom = v.domain
    m = dom.mask & (dom.distance > 0)
    d = dom.distance[m]
    seminorm = float(np.max(v.values[m] / d ** gamma))
    assert seminorm == pytest.approx(1.0, abs=1e-12)
    u = (2 / gamma) * np.log(v.values[m])
    C = (2 / gamma) * math.log(seminorm)
    assert np.all(u <= 2 * np.log(d) + C + 1e-12)


def test_holder_constant_and_resolution():
    est = holder_exponent(field(Quadratic.constant(1.0), nodes=33))
    assert est.constant and est.exponent == math.inf
    with pytest.raises(ResolutionError):
        holder_exponent(field(PowerField(0.5), nodes=9))


def test_holder_off_center_point():
    W = field(PowerField(0.5, x0=(0.25, 0.0, 0.0)), nodes=65)
    est = holder_exponent(W, y=(0.25, 0.0, 0.0), r_start=0.5)
    assert est.exponent == pytest.approx(0.5, abs=0.03)


# -- barrier ------------------------------------------------------------------------------

def test_barrier_passes_for_delta_convex_field():
    W = field(PowerField(0.5) + Quadratic.radial(0.1, 3), nodes=41)
    # Hessian spectrum of |x|^{1/2} is (-1/4, 1/2, 1/2) r^{-3/2}: delta-convex iff delta >= 1/3
    rep = barrier_oscillation_check(W, "2/5", R=0.9)
    assert rep["precondition"] == "ok" and rep["W_y_source"] == "node"
    assert rep.passed, rep["min_slack"]
    assert rep["R_effective"] <= 0.9 * (1 + 1e-12)


def test_barrier_precondition_failure():
    W = field(PowerField(2.0, -1.0), nodes=33)
    rep = barrier_oscillation_check(W, 0.25)
    assert not rep.passed and rep["precondition"] == "failed"
    assert rep["failing_count"] > 0


def test_barrier_center_value_sources():
    W = field(PowerField(0.5), nodes=40)  # even node count: centre is not a node
    assert barrier_oscillation_check(W, 0.4)["W_y_source"] == "generator"
    bare = W.with_values(W.values)
    assert barrier_oscillation_check(bare, 0.4, center_value=0.0)["W_y_source"] == "supplied"
    assert barrier_oscillation_check(bare, 0.4)["W_y_source"] == "innermost-shell"


# -- singularity classification ------------------------------------------------------------

def test_classifier_three_classes():
    g = singularity_classify(field(LogSingular(2.0), nodes=129, r_exc=0.02))
    assert g.cls is SingularityClass.GREENS and g.slope == pytest.approx(2.0, abs=1e-9)
    assert g.inf_estimate == -math.inf
    b = singularity_classify(field(Stereographic(), nodes=129, r_exc=0.02))
    assert b.cls is SingularityClass.BOUNDED
    assert b.inf_estimate == pytest.approx(math.log(0.5), abs=1e-3)
    i = singularity_classify(field(LogSingular(1.0), nodes=129, r_exc=0.02))
    assert i.cls is SingularityClass.INDETERMINATE and i.notes


def test_classify_samples_geometric_minima():
    # minima decreasing geometrically toward a finite infimum
    d = np.geomspace(1e-4, 1.0, 400)
    u = 1.0 + np.sqrt(d)
    v = classify_samples(d, u, 1.0, r_min=1e-4)
    assert v.cls is SingularityClass.BOUNDED
    assert v.inf_estimate == pytest.approx(1.0, abs=2e-3)


def test_classify_samples_resolution():
    with pytest.raises(ResolutionError):
        classify_samples([0.9, 0.6], [1.0, 1.0], 1.0)


# -- scale invariance ---------------------------------------------------------------------

def test_scale_invariant_greens():
    u = field(LogSingular(2.0), nodes=65, r_exc=0.05)
    r1 = scale_invariant_check(u, 1)
    assert r1.passed and r1["sup"] == pytest.approx(2.0, abs=1e-12)
    r2 = scale_invariant_check(u, 2)
    assert r2.passed and r2["sup"] == pytest.approx(6.0, abs=1e-9)
    fd = scale_invariant_check(u, 1, exact=False)
    assert fd["sup"] == pytest.approx(2.0, rel=0.05)


def test_scale_invariant_detects_growth():
    u = field(PowerField(-1.0), nodes=65, r_exc=0.02)
    rep = scale_invariant_check(u, 1)
    assert not rep.passed and rep["growth_slope"] > 0.5
    with pytest.raises(InvalidInputError):
        scale_invariant_check(u, 3)


# -- p-Laplacian --------------------------------------------------------------------------

def test_p_laplacian_p2_is_laplacian():
    q = Quadratic(((1.0, 0.3, 0.0), (0.3, -0.5, 0.2), (0.0, 0.2, 2.0)), (0.5, 0.0, 1.0))
    v = field(q, nodes=21)
    L = p_laplacian(v, 2.0)
    assert np.nanmax(np.abs(L - 2 * 2.5)) < 1e-9


@pytest.mark.parametrize("p", [3.0, 6.0, 10.0])
def test_p_laplacian_radial_closed_form(p):
    # v = |x|^2: Delta_p v = 2^{p-1} (n + p - 2) |x|^{p-2}
    n = 3
    errs = []
    for N in (41, 81):
        v = field(PowerField(2.0), nodes=N)
        L = p_laplacian(v, p)
        d = v.domain.distance
        exact = 2 ** (p - 1) * (n + p - 2) * d ** (p - 2)
        m = np.isfinite(L) & (d > 0.3)
        errs.append(np.max(np.abs(L[m] - exact[m]) / exact[m]))
    assert errs[1] < 2e-2
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)


def test_p_laplacian_second_order():
    gen = Stereographic() + Quadratic.radial(1.0, 3)
    p = 4.0
    errs = []
    x = (0.3, 0.2, -0.1)
    for N in (21, 41, 81):
        v = field(gen, nodes=N)
        i = v.domain.nearest_index(x)
        errs.append(p_laplacian(v, p)[i])
    # Richardson: successive differences shrink by ~4
    ratio = (errs[0] - errs[1]) / (errs[1] - errs[2])
    assert math.log2(ratio) == pytest.approx(2.0, abs=0.2)


def test_p_laplacian_defect_flat_case():
    v = field(Quadratic.radial(1.0, 3, ) + Quadratic.constant(1.0), nodes=33)
    rep = p_laplacian_defect(v, "1/4")
    assert rep.passed and rep["p0"] == 6.0 and rep["checked_nodes"] > 0
    with pytest.raises(DomainError):
        p_laplacian_defect(v, 0)
    with pytest.raises(InvalidInputError):
        p_laplacian_defect(v * -1.0, 0.25)


# -- eigenvalue bounds ----------------------------------------------------------------------

def _bound_sample(rng, n, delta, mu, count):
    """Hessians with ``hess + (delta Lap + mu v) I >= 0`` and random frames."""
    w = rng.standard_normal((count, n)) * rng.uniform(0.1, 10, (count, 1))
    v = rng.uniform(0.05, 5.0, count)
    pre = w.min(axis=1) + delta * w.sum(axis=1) + mu * v
    slack = rng.exponential(1.0, count) * rng.choice([0.0, 1.0], count, p=[0.2, 0.8])
    w = w + ((slack - pre) / (1 + n * delta))[:, None]
    q, _ = np.linalg.qr(rng.standard_normal((count, n, n)))
    return (q * w[:, None, :]) @ np.swapaxes(q, 1, 2), v


@pytest.mark.parametrize("n", [3, 4, 6])
def test_eigen_bounds_property_1e5(n):
    rng = np.random.default_rng(2024 + n)
    count = 100_000
    for delta, mu in ((0.5 / (n - 2), 0.0), (0.2 / (n - 2), 0.7)):
        H, v = _bound_sample(rng, n, delta, mu, count)
        # independent evaluation of the three bounds with LAPACK eigenvalues
        w = np.linalg.eigvalsh(H)
        lap = w.sum(axis=1)
        scale = 1e-10 * (1 + np.abs(w).max(axis=1) + v)
        assert np.all(w[:, 0] + delta * lap + mu * v >= -scale)
        assert np.all(w[:, 0] >= -delta * lap - mu * v - scale)
        assert np.all(w[:, -1] <= (1 + (n - 1) * delta) * lap + (n - 1) * mu * v + scale)
        c0, c1 = eigen_bound_constants(n, delta, mu)
        assert np.all(lap >= c0 * np.abs(w).max(axis=1) - c1 * v - scale)
        rep = hessian_eigen_bounds(H, v, delta, mu, tau=float(scale.max()))
        assert rep.passed and rep["checked"] == count


def test_eigen_bounds_tight_at_boundary():
    # w = (x, 1, 1, 1) with x + delta (x + 3) = 0: precondition equality with mu = 0
    n, delta = 4, 0.25
    w = np.array([-3 * delta / (1 + delta), 1.0, 1.0, 1.0])
    rep = hessian_eigen_bounds(np.diag(w), 1.0, delta)
    assert rep.passed
    assert rep["min_lower_slack"] == pytest.approx(0.0, abs=1e-12)


def test_eigen_bounds_skip_precondition():
    rep = hessian_eigen_bounds(np.diag([-5.0, 1.0, 1.0]), 1.0, 0.1)
    assert rep["checked"] == 0 and not rep.passed
    with pytest.raises(InvalidInputError):
        hessian_eigen_bounds(np.eye(3), -1.0, 0.1)


# -- volume ----------------------------------------------------------------------------------

def test_volume_ball():
    rep = volume_integral(field(Quadratic.constant(0.0), nodes=81))
    assert rep["integral"] == pytest.approx(4 * math.pi / 3, rel=5e-3)
    assert rep["verdict"] == "converging"


def test_volume_singular_trend():
    # e^{-3u} = |x|^{-3 c}: integrable iff c < 1; c = 1/2 gives 8 pi / 3
    ok = volume_integral(field(LogSingular(0.5), nodes=129, r_exc=0.01))
    assert ok["verdict"] == "converging"
    assert ok["value"] == pytest.approx(8 * math.pi / 3, rel=2e-2)
    bad = volume_integral(field(LogSingular(1.0), nodes=129, r_exc=0.01))
    assert bad["verdict"] == "diverging"


def test_volume_growing_balls_sphere():
    rep = volume_growing_balls(Stereographic(), 3, nodes=96)
    assert rep["extrapolated"] == pytest.approx(2 * math.pi ** 2, rel=5e-3)
