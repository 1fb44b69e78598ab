import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import dblquad

from pmod.extended import ediv, emul, epow
from pmod.fields import (
    CriterionId,
    CriterionReport,
    PsiFamily,
    Verdict,
    I_integral,
    ball_statistics,
    closed_form,
    constant,
    criterion_power,
    criterion_divergence,
    criterion_loglog_growth,
    criterion_ls,
    criterion_radial_divergence,
    field_from_string,
    fmo_estimate,
    geometric_grid,
    grid,
    holder_pair,
    integrate,
    loglog_I_closed_form,
    ls_threshold,
    radial,
    ring_integral,
    sphere_mean,
    sphere_mean_estimate,
    tilde_I,
)
from pmod.fields.quadrature import sphere_rule
from pmod.geometry import SphericalRing

EPS_FMO = np.logspace(-1, -6, 11)


# ------------------------------------------------------------ extended arithmetic

def test_extended_conventions():
    assert ediv(3.0, math.inf) == 0.0
    assert ediv(3.0, 0.0) == math.inf
    assert emul(0.0, math.inf) == 0.0
    assert emul(math.inf, 0.0) == 0.0
    assert epow(0.0, -0.5) == math.inf
    assert epow(math.inf, -2.0) == 0.0
    np.testing.assert_array_equal(ediv(np.array([1.0, 2.0]), np.array([0.0, math.inf])), [math.inf, 0.0])


# ------------------------------------------------------------ quadrature

def test_integrate_smooth_and_singular():
    assert integrate(np.exp, 0, 1, rtol=1e-12).value == pytest.approx(math.e - 1, rel=1e-12)
    r = integrate(lambda t: t**-0.5, 0, 1, rtol=1e-9, geometric=40)
    assert r.converged and r.value == pytest.approx(2.0, rel=1e-8)
    assert integrate(np.exp, 1, 0).value == pytest.approx(1 - math.e, rel=1e-8)
    assert integrate(np.exp, 1, 1).value == 0.0


def test_integrate_reports_non_convergence():
    r = integrate(lambda t: np.sin(1 / t) / t, 1e-6, 1, rtol=1e-12, max_panels=16)
    assert not r.converged


def test_integrate_infinite():
    r = integrate(lambda t: np.full(np.shape(t), math.inf), 0, 1)
    assert r.value == math.inf


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_sphere_rule_moments(n):
    nodes, w = sphere_rule(n)
    assert w.sum() == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(np.linalg.norm(nodes, axis=1), 1.0, atol=1e-13)
    tol = 1e-12 if n <= 3 else 5e-3
    assert w @ nodes[:, 0] ** 2 == pytest.approx(1.0 / n, abs=tol)
    assert w @ nodes[:, 0] == pytest.approx(0.0, abs=tol)


# ------------------------------------------------------------ fields

def test_field_registry():
    assert field_from_string("constant:c=3")(np.zeros((4, 2))).tolist() == [3.0] * 4
    q = field_from_string("radialpow:alpha=−1")
    assert q(np.array([[2.0, 0.0]]))[0] == pytest.approx(0.5)
    assert field_from_string("logrecip")(np.array([[2.0, 0.0]]))[0] == 0.0
    with pytest.raises(KeyError):
        field_from_string("nope")
    with pytest.raises(ValueError):
        field_from_string("constant:c")
    with pytest.raises(ValueError):
        constant(-1.0)


def test_grid_field_is_multilinear():
    x = np.linspace(0, 1, 5)
    X, Y = np.meshgrid(x, x, indexing="ij")
    Q = grid(1 + 2 * X + 3 * Y, (0, 0), (1, 1))
    pts = np.array([[0.13, 0.71], [0.5, 0.5], [0.99, 0.01]])
    np.testing.assert_allclose(Q(pts), 1 + 2 * pts[:, 0] + 3 * pts[:, 1], rtol=1e-13)
    with pytest.raises(ValueError):
        grid(np.ones((2, 2, 2, 2)), (0,) * 4, (1,) * 4)


# ------------------------------------------------------------ sphere means

def test_sphere_mean_examples(rng):
    assert sphere_mean(constant(5.0), (0.3, 0.1), 0.7) == 5.0
    sq = closed_form(lambda x: np.sum(x * x, axis=-1), "normsq")
    assert sphere_mean(sq, (0.0, 0.0), 2.0) == pytest.approx(4.0, rel=1e-13)
    x1sq = field_from_string("coordsq:i=1")
    assert sphere_mean(x1sq, (0.0, 0.0, 0.0), 1.0) == pytest.approx(1 / 3, rel=1e-13)
    # Monte Carlo oracle with 10**6 uniform sphere samples
    g = rng.normal(size=(1_000_000, 3))
    g /= np.linalg.norm(g, axis=1)[:, None]
    assert np.mean(g[:, 0] ** 2) == pytest.approx(1 / 3, abs=2e-3)


def test_sphere_mean_high_dimension():
    m, err = sphere_mean_estimate(field_from_string("coordsq:i=2"), np.zeros(5), 2.0)
    assert m == pytest.approx(4 / 5, rel=5e-3)
    assert err < 5e-3


def test_sphere_mean_errors():
    with pytest.raises(ValueError):
        sphere_mean(constant(1.0), (0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        sphere_mean(field_from_string("logrecip"), (0.0, 0.0), 2.0)
    inf_on_half = closed_form(lambda x: np.where(x[..., 0] > 0, np.inf, 1.0), "half")
    assert sphere_mean(inf_on_half, (0.0, 0.0), 1.0) == math.inf


@given(st.floats(0, 100), st.floats(0.01, 3))
def test_sphere_mean_of_constant_is_exact(c, r):
    assert sphere_mean(constant(c), (0.1, 0.2, 0.3), r) == c


# ------------------------------------------------------------ ring integrals

def test_ring_integral_examples():
    ring = SphericalRing((0.0, 0.0), 1.0, math.e)
    assert ring_integral(constant(0.0), PsiFamily.reciprocal(), ring, 2).value == 0.0
    assert ring_integral(constant(1.0), PsiFamily.reciprocal(), ring, 2).value == pytest.approx(2 * math.pi, rel=1e-6)


@pytest.mark.parametrize("eps,eps0", [(1e-3, 0.5), (1e-8, 0.1), (0.2, 0.6)])
def test_ring_integral_loglog_closed_forms(eps, eps0):
    ring = SphericalRing((0.0, 0.0), eps, eps0)
    psi = PsiFamily.loglog(2, 2)
    one = ring_integral(constant(1.0), psi, ring, 2).value
    ref_one = 2 * math.pi * (1 / math.log(1 / eps0) - 1 / math.log(1 / eps))
    assert one == pytest.approx(ref_one, rel=1e-6)
    logq = ring_integral(field_from_string("logrecip"), psi, ring, 2).value
    assert logq == pytest.approx(2 * math.pi * loglog_I_closed_form(eps, eps0), rel=1e-6)


@pytest.mark.parametrize("field,center,p", [
    ("gauss:a=2", (0.1, -0.2), 1.5),
    ("coordsq:i=1", (0.3, 0.4), 2.0),
    ("gauss:a=0.5", (0.0, 0.0), 1.2),
])
def test_fubini_matches_cartesian_quadrature(field, center, p):
    Q = field_from_string(field)
    psi = PsiFamily("custom", lambda t: 1.0 + t * t)
    r1, r2 = 0.4, 1.3
    cx, cy = center
    f = lambda y, x: Q(np.array([x, y])) * psi(math.hypot(x - cx, y - cy)) ** p

    def disk(r):
        return dblquad(f, cx - r, cx + r, lambda x: cy - math.sqrt(max(r * r - (x - cx) ** 2, 0)),
                       lambda x: cy + math.sqrt(max(r * r - (x - cx) ** 2, 0)), epsabs=1e-10, epsrel=1e-10)[0]

    cart = disk(r2) - disk(r1)
    fub = ring_integral(Q, psi, SphericalRing(center, r1, r2), p).value
    assert fub == pytest.approx(cart, rel=1e-4)


# ------------------------------------------------------------ I and tilde I

def test_I_integral_examples():
    r = I_integral(PsiFamily.reciprocal(), 1.0, math.e)
    assert r.valid and r.value == pytest.approx(1.0, rel=1e-11)
    zero = I_integral(PsiFamily.constant(0.0), 0.1, 0.5)
    assert zero.value == 0.0 and not zero.valid
    for eps in (1e-2, 1e-6, 1e-12):
        val = I_integral(PsiFamily.loglog(3, 3), eps, 0.5).value
        assert val == pytest.approx(loglog_I_closed_form(eps, 0.5), rel=1e-10)
    with pytest.raises(ValueError):
        I_integral(PsiFamily.reciprocal(), 0.5, 0.5)


@given(st.floats(1e-6, 0.3), st.floats(0.1, 0.9), st.floats(0.1, 0.9))
def test_I_integral_additive(a, f1, f2):
    b = a + (0.95 - a) * f1 * 0.5
    c = b + (0.95 - b) * f2
    psi = PsiFamily.loglog(2, 1.5)
    whole = I_integral(psi, a, c).value
    parts = I_integral(psi, a, b).value + I_integral(psi, b, c).value
    assert parts == pytest.approx(whole, rel=1e-10)


def test_loglog_psi_domain():
    with pytest.raises(ValueError):
        PsiFamily.loglog(2, 2)(np.array([0.5, 1.5]))
    assert PsiFamily.reciprocal().restricted(1, 2)(np.array([0.5, 1.5, 3.0])).tolist() == [0.0, 1 / 1.5, 0.0]


def test_tilde_I():
    assert tilde_I(constant(1.0), (0.0, 0.0), 1, 2, 2, 1.5) == pytest.approx(0.5, rel=1e-9)
    assert tilde_I(field_from_string("infinite"), (0.0, 0.0), 1, 2, 2, 1.5) == 0.0
    assert tilde_I(constant(0.0), (0.0, 0.0), 1, 2, 2, 1.5) == math.inf
    with pytest.raises(ValueError):
        tilde_I(constant(1.0), (0.0, 0.0), 1, 1, 2, 1.5)


@given(st.floats(0.2, 3), st.floats(-1.5, 1.5), st.floats(0, 2), st.integers(2, 3), st.floats(0.05, 0.99))
def test_holder_inequality_on_radial_profiles(a, b, c, n, frac):
    p = n - 1 + frac
    q = lambda t: a * np.power(t, b) * (1.0 + c * np.log(1.0 / t) ** 2)
    lhs, rhs = holder_pair(q, 1e-3, 0.5, n, p)
    assert lhs <= rhs * (1 + 1e-8)


def test_holder_equality_for_constant_integrand():
    # g = 1/(t q**(1/(n-1))) constant makes the estimate an equality
    lhs, rhs = holder_pair(lambda t: t ** -1.0, 0.1, 0.5, 2, 1.5)
    assert lhs == pytest.approx(rhs, rel=1e-10)


# ------------------------------------------------------------ FMO

def test_fmo_constant():
    rep = fmo_estimate(constant(3.0), 0.0, EPS_FMO, 2)
    assert rep.verdict is Verdict.SATISFIED
    assert all(v == 0 for _, v in rep.evidence)


@pytest.mark.parametrize("n", [2, 3])
def test_fmo_log_reciprocal(n):
    rep = fmo_estimate(field_from_string("logrecip"), 0.0, EPS_FMO, n)
    assert rep.verdict is Verdict.SATISFIED
    # scale invariance: the oscillation equals 2/(n e) at every radius
    for _, v in rep.evidence:
        assert v == pytest.approx(2 / (n * math.e), abs=1e-3)


def test_fmo_reciprocal_grows():
    rep = fmo_estimate(field_from_string("recip"), 0.0, EPS_FMO, 2)
    assert rep.verdict is Verdict.VIOLATED
    assert rep.details["slope"] == pytest.approx(1.0, abs=0.02)


def test_fmo_requires_decreasing_eps():
    with pytest.raises(ValueError):
        fmo_estimate(constant(1.0), 0.0, [0.1, 0.2], 2)


@given(st.floats(0, 50))
def test_fmo_translation_invariant(c):
    Q = field_from_string("gauss:a=3")
    eps = [0.4, 0.2, 0.1]
    a = fmo_estimate(Q, (0.2, 0.1), eps, 2)
    b = fmo_estimate(Q.shifted(c), (0.2, 0.1), eps, 2)
    np.testing.assert_allclose([v for _, v in a.evidence], [v for _, v in b.evidence], rtol=1e-9, atol=1e-12)


def test_ball_statistics_mean():
    mean, osc = ball_statistics(field_from_string("coordsq:i=1"), (0.0, 0.0), 1.0)
    assert mean == pytest.approx(0.25, rel=1e-10)  # mean of x**2 over the unit disc


# ------------------------------------------------------------ growth criteria

def test_loglog_growth():
    r = geometric_grid(0.5)
    assert criterion_loglog_growth(constant(1.0), 0.0, 2, r).verdict is Verdict.SATISFIED
    exact = radial(lambda t: np.log(1 / t) ** 2, name="log2", domain_radius=1.0)
    rep = criterion_loglog_growth(exact, 0.0, 3, r)
    assert rep.verdict is Verdict.SATISFIED
    np.testing.assert_allclose([v for _, v in rep.evidence], 1.0, rtol=1e-12)
    assert criterion_loglog_growth(field_from_string("recip"), 0.0, 2, r).verdict is Verdict.VIOLATED
    with pytest.raises(ValueError):
        criterion_loglog_growth(constant(1.0), 0.0, 2, [0.5, 2.0])


def test_divergence_criterion():
    rep = criterion_divergence(constant(1.0), 0.0, 2, 0.5)
    assert rep.verdict is Verdict.SATISFIED
    for d, F in rep.evidence:
        assert F == pytest.approx(math.log(0.5 / d), rel=1e-9)
    assert rep.details["partial_integrals_finite"]
    conv = criterion_divergence(field_from_string("logpow:k=2"), 0.0, 2, 0.5)
    assert conv.verdict is Verdict.VIOLATED
    assert conv.details["extrapolated_limit"] == pytest.approx(1 / math.log(2), rel=0.05)
    conv3 = criterion_divergence(field_from_string("logpow:k=4"), 0.0, 3, 0.5)
    assert conv3.verdict is Verdict.VIOLATED
    inf = criterion_divergence(field_from_string("infinite"), 0.0, 2, 0.5)
    assert inf.verdict is Verdict.VIOLATED
    assert all(F == 0 for _, F in inf.evidence)


def test_divergence_borderline_harmonic():
    # q = log(1/t) in the plane gives dt/(t log(1/t)): divergent, but only just
    rep = criterion_divergence(field_from_string("logrecip"), 0.0, 2, 0.5)
    assert rep.verdict is Verdict.SATISFIED


def test_ls_criterion():
    assert ls_threshold(2, 1.5) == 4.0
    assert ls_threshold(3, 2.5) == 6.0
    ok = criterion_ls(constant(1.0), 4, 2, 1.5)
    assert ok.verdict is Verdict.SATISFIED
    assert ok.details["norm"] == pytest.approx(math.pi ** 0.25, rel=1e-6)
    env = [v for _, v in ok.evidence]
    assert np.all(np.diff(env) < 0)
    assert criterion_ls(constant(1.0), 3, 2, 1.5).verdict is Verdict.VIOLATED
    bad = criterion_ls(field_from_string("recip"), 4, 2, 1.5)
    assert bad.verdict is Verdict.VIOLATED and bad.details["norm"] == math.inf
    with pytest.raises(ValueError):
        ls_threshold(2, 2.0)


def test_radial_divergence_criterion():
    n, p = 2, 1.5
    powq = field_from_string(f"radialpow:alpha={p - n},c=2")
    assert criterion_radial_divergence(powq, 0.0, n, p, 0.5).verdict is Verdict.SATISFIED
    assert criterion_radial_divergence(constant(1.0), 0.0, n, p, 0.5).verdict is Verdict.SATISFIED
    # q = t**(p-n-1): the integrand is t**((2-p)/(p-1)), integrable at 0
    steep = field_from_string(f"radialpow:alpha={p - n - 1}")
    rep = criterion_radial_divergence(steep, 0.0, n, p, 0.5)
    assert rep.verdict is Verdict.VIOLATED
    assert rep.details["extrapolated_limit"] == pytest.approx(0.5**2 / 2, rel=1e-3)
    with pytest.raises(ValueError):
        criterion_radial_divergence(constant(1.0), 0.0, 2, 2.0, 0.5)


def test_power_criterion():
    n, p = 3, 2.5
    assert criterion_power(field_from_string(f"radialpow:alpha={p - n}"), 0.0, n, p, 0.5).verdict \
        is Verdict.SATISFIED
    assert criterion_power(field_from_string(f"radialpow:alpha={p - n - 1}"), 0.0, n, p, 0.5).verdict \
        is Verdict.VIOLATED


def test_report_contract():
    with pytest.raises(ValueError):
        CriterionReport(CriterionId.FMO, Verdict.INCONCLUSIVE, [])
    rep = CriterionReport("FMO", "satisfied", [(0.1, math.inf)])
    assert rep.to_dict()["evidence"] == [[0.1, "inf"]]
