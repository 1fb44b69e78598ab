import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmod.fields import PsiFamily, constant, integrate
from pmod.geometry import SphericalRing
from pmod.mappings import (
    MappingSpec,
    compose,
    derivative_matrix,
    dilatation,
    distortion_vs_bound,
    equicontinuity_probe,
    eta_family,
    evaluate,
    exp_map,
    g1,
    g2,
    identity,
    mapping_from_string,
    min_stretch,
    parse_family,
    radial_power,
    verify_ring_pQ,
)

RING = SphericalRing((0.0, 0.0), 1.0, 2.0)
angle = st.floats(-10, 10)


def off_axis(rng, count, n):
    pts = rng.uniform(-1, 1, size=(count, n))
    pts[np.hypot(pts[:, -2], pts[:, -1]) < 1e-3, -1] += 0.5
    return pts


# ------------------------------------------------------------ evaluation

def test_winding_map_values():
    f = g2(2)
    np.testing.assert_allclose(evaluate(f, [1.0, 0.0]), [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(evaluate(f, [0.0, 1.0]), [-1.0, 0.0], atol=1e-15)
    axis = np.array([0.7, 0.0, 0.0])
    assert np.array_equal(evaluate(g2(3, n=3), axis), axis)
    assert np.array_equal(evaluate(identity(4), np.arange(4.0)), np.arange(4.0))


def test_spiral_map_on_axis_is_identity():
    x = np.array([0.0, 0.0, 0.4])
    assert np.array_equal(evaluate(g1(3), x), x)


def test_spec_validation():
    with pytest.raises(ValueError):
        g2(1.5)
    with pytest.raises(ValueError):
        MappingSpec("exp", 3, {"m": 1.0})
    with pytest.raises(ValueError):
        compose(g2(2, n=2), g1(3))
    with pytest.raises(ValueError):
        MappingSpec("shear")
    with pytest.raises(ValueError):
        evaluate(g2(2), np.zeros(3))
    with pytest.raises(ValueError):
        evaluate(identity(), [np.nan, 0.0])


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.01, 5), angle)
def test_winding_composition_law(m, k, r, phi):
    x = np.array([r * math.cos(phi), r * math.sin(phi)])
    twice = evaluate(g2(m), evaluate(g2(k), x))
    np.testing.assert_allclose(twice, evaluate(g2(m * k), x), atol=1e-10 * max(1.0, r))


def test_spiral_preserves_norm(rng):
    for n in (2, 3, 4):
        x = rng.uniform(-1, 1, size=(2000, n))
        x = x[np.linalg.norm(x, axis=1) < 1]
        np.testing.assert_allclose(np.linalg.norm(evaluate(g1(n), x), axis=1), np.linalg.norm(x, axis=1),
                                   rtol=0, atol=1e-12)


def test_exp_map_is_complex_exponential(rng):
    z = rng.normal(size=(20, 2))
    w = np.exp(3.0 * (z[:, 0] + 1j * z[:, 1]))
    np.testing.assert_allclose(evaluate(exp_map(3), z), np.column_stack([w.real, w.imag]), rtol=1e-13)


def test_composition_order():
    f = compose(radial_power(2.0), g2(2))
    x = np.array([0.0, 0.5])
    np.testing.assert_allclose(evaluate(f, x), evaluate(radial_power(2.0), evaluate(g2(2), x)))


# ------------------------------------------------------------ parsing

def test_mapping_strings():
    assert mapping_from_string("g2:m=3").params == {"m": 3}
    assert mapping_from_string("exp:m=5").kind == "exp"
    assert mapping_from_string("radialpow:alpha=0.5").params["alpha"] == 0.5
    c = mapping_from_string("compose:g1,g2:m=2")
    assert [p.kind for p in c.parts] == ["g1", "g2"] and c.name == "compose:g1,g2:m=2"
    assert mapping_from_string("g2:m=2", n=3).n == 3
    with pytest.raises(ValueError):
        mapping_from_string("g2:m")
    with pytest.raises(ValueError):
        mapping_from_string("warp")


def test_family_ranges():
    fam = parse_family("exp:m=1..10")
    assert [f.params["m"] for f in fam] == list(map(float, range(1, 11)))
    assert len(parse_family("g2:m=2;identity")) == 2
    for bad in ("exp:m=1..", "exp:m=5..1"):
        with pytest.raises(ValueError):
            parse_family(bad)


# ------------------------------------------------------------ derivatives

ZOO = [g1(2), g1(3), g2(2), g2(5, n=3), exp_map(1.5), radial_power(0.5), radial_power(2.5, n=3),
       compose(g1(2), g2(3)), identity(3)]


@pytest.mark.parametrize("f", ZOO, ids=lambda f: f"{f.name}-{f.n}")
def test_analytic_matches_finite_differences(f, rng):
    for x in off_axis(rng, 25, f.n) * 0.9:
        if f.kind == "exp":
            x = x * 0.5
        A = derivative_matrix(f, x)
        F = derivative_matrix(f, x, "central_fd")
        np.testing.assert_allclose(A, F, atol=1e-5 * max(1.0, np.abs(A).max()))


def test_identity_derivative():
    assert np.array_equal(derivative_matrix(identity(3), [1.0, 2.0, 3.0]), np.eye(3))


def test_radial_power_singular_values(rng):
    for alpha in (0.3, 1.0, 2.5):
        for x in rng.normal(size=(10, 3)):
            r = np.linalg.norm(x)
            s = np.linalg.svd(derivative_matrix(radial_power(alpha, 3), x), compute_uv=False)
            np.testing.assert_allclose(sorted(s), sorted([alpha * r ** (alpha - 1), r ** (alpha - 1), r ** (alpha - 1)]),
                                       rtol=1e-12)


def test_finite_difference_step_validation():
    with pytest.raises(ValueError):
        derivative_matrix(g2(2), [1.0, 1.0], "central_fd", h=0.0)
    with pytest.raises(ValueError):
        derivative_matrix(g2(2), [1.0, 1.0], "spectral")
    with pytest.raises(ValueError):
        derivative_matrix(g2(2), [0.0, 0.0])


# ------------------------------------------------------------ dilatation

def test_identity_dilatation():
    for p in (1.2, 2.0, 3.7):
        s = dilatation(identity(3), [0.1, 0.2, 0.3], p)
        assert s.K_Ip == 1.0 and s.jacobian == 1.0 and s.min_stretch == 1.0


@pytest.mark.parametrize("m", [1, 2, 3, 5])
@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_winding_dilatation_equals_m(m, p, rng):
    pts = off_axis(rng, 1000, 2)
    K = np.array([dilatation(g2(m), x, p).K_Ip for x in pts])
    np.testing.assert_allclose(K, m, atol=1e-6)
    K_fd = np.array([dilatation(g2(m), x, p, "central_fd").K_Ip for x in pts[:200]])
    np.testing.assert_allclose(K_fd, m, atol=1e-4)


def test_winding_dilatation_in_three_dimensions(rng):
    for x in off_axis(rng, 100, 3):
        s = dilatation(g2(3, n=3), x, 2.5)
        assert s.jacobian == pytest.approx(3.0) and s.min_stretch == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_spiral_dilatation(n, rng):
    cap = (1 + math.sqrt(2)) ** n
    x = rng.uniform(-1, 1, size=(3000, n))
    x = x[np.linalg.norm(x, axis=1) < 1][:1000]
    K = np.array([dilatation(g1(n), y, n).K_Ip for y in x])
    assert np.all(K <= cap + 1e-6)
    # the stretches are sqrt(2) -+ 1 everywhere, so the bound is attained
    np.testing.assert_allclose(K, cap, rtol=1e-10)


def test_degenerate_stretch_gives_infinite_dilatation():
    s = dilatation(radial_power(0.0), [0.6, 0.8], 1.5)
    assert s.min_stretch == 0.0 and s.K_Ip == math.inf
    assert min_stretch(np.zeros((2, 2))) == 0.0
    assert min_stretch(np.diag([1.0, 1e-3])) == pytest.approx(1e-3, rel=1e-10)


# ------------------------------------------------------------ ring verifier

def test_verifier_identity():
    rep = verify_ring_pQ(identity(), RING, 1.5, constant(1.0), eta_family("const", RING, 1.5))
    assert rep.verdict == "satisfied"
    assert rep.eta_integral == pytest.approx(1.0)
    assert rep.margin == pytest.approx(rep.rhs - rep.lhs)
    assert rep.solver_certificate["converged"]


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_verifier_winding_with_matching_majorant(m):
    rep = verify_ring_pQ(g2(m), RING, 1.5, constant(m), eta_family("const", RING, 1.5))
    assert rep.verdict == "satisfied"


@pytest.mark.parametrize("center", [(2.0, 0.0), (0.0, 2.0), (1.4, 1.4)])
def test_verifier_finds_violation_away_from_axis(center):
    """Near (2, 0) the winding map is locally diag(1, 3); with Q = 1 the inequality fails."""
    ring = SphericalRing(center, 0.1, 0.2)
    bad = verify_ring_pQ(g2(3), ring, 1.5, constant(1.0), eta_family("const", ring, 1.5))
    assert bad.verdict == "violated" and bad.margin < -bad.tolerance
    good = verify_ring_pQ(g2(3), ring, 1.5, constant(3.0), eta_family("const", ring, 1.5))
    assert good.verdict == "satisfied"


def test_verifier_rejects_inadmissible_eta():
    with pytest.raises(ValueError):
        verify_ring_pQ(identity(), RING, 1.5, constant(1.0), PsiFamily.constant(0.5))


def test_verifier_stable_under_refinement():
    ring = SphericalRing((2.0, 0.0), 0.1, 0.2)
    eta = eta_family("const", ring, 1.5)
    base = verify_ring_pQ(g2(3), ring, 1.5, constant(1.0), eta, k_curves=256, resolution=128)
    finer = verify_ring_pQ(g2(3), ring, 1.5, constant(1.0), eta, k_curves=512, resolution=128)
    assert finer.verdict == base.verdict
    assert abs(finer.margin - base.margin) < 0.05 * abs(base.rhs)


def test_eta_families():
    small = SphericalRing((0.0, 0.0), 0.05, 0.5)
    for kind in ("const", "loglog", "qmean"):
        eta = eta_family(kind, small, 1.5, constant(2.0))
        assert integrate(lambda t: eta(t), 0.05, 0.5, rtol=1e-10).value == pytest.approx(1.0, rel=1e-8)
    with pytest.raises(ValueError):
        eta_family("loglog", RING, 1.5)
    with pytest.raises(ValueError):
        eta_family("qmean", small, 1.5)


# ------------------------------------------------------------ equicontinuity

def test_probe_identity_oscillation_is_delta():
    tab = equicontinuity_probe([identity()], (0.3, -0.2), [0.5, 0.1, 0.01])
    np.testing.assert_allclose(tab.oscillation[0], [0.5, 0.1, 0.01], rtol=1e-14)


def test_probe_exponential_family():
    tab = equicontinuity_probe([exp_map(m) for m in range(1, 11)], (0.0, 0.0), [0.5])
    np.testing.assert_allclose(tab.column(0.5), [math.exp(m / 2) - 1 for m in range(1, 11)], rtol=1e-12)
    assert tab.verdict == "violated evidence"
    assert tab.column(0.5)[-1] / tab.column(0.5)[0] > 50


def test_probe_winding_family_is_equicontinuous():
    tab = equicontinuity_probe([g2(m) for m in range(1, 6)], (0.6, 0.3), [0.2, 0.1, 0.05, 0.025])
    assert tab.verdict == "equicontinuous evidence"
    assert np.all(tab.oscillation <= 5 * np.array(tab.deltas) + 1e-12)


@given(st.lists(st.sampled_from(["exp:m=7", "g2:m=4", "radialpow:alpha=3", "g1"]), min_size=1, max_size=3),
       st.floats(-2, 2), st.floats(-2, 2))
def test_chordal_probe_is_bounded(names, bx, by):
    fam = [mapping_from_string(s) for s in names]
    tab = equicontinuity_probe(fam, (bx, by), [2.0, 0.5], metric="chordal", samples=256)
    assert np.all(tab.oscillation <= 1.0 + 1e-15)


def test_probe_validation():
    with pytest.raises(ValueError):
        equicontinuity_probe([identity()], (0.0, 0.0), [0.1], samples=100)
    with pytest.raises(ValueError):
        equicontinuity_probe([identity()], (0.0, 0.0), [0.1], metric="taxicab")


def test_probe_in_three_dimensions():
    tab = equicontinuity_probe([identity(3)], (0.0, 0.0, 0.0), [0.3])
    assert tab.oscillation[0, 0] == pytest.approx(0.3, rel=1e-12)


# ------------------------------------------------------------ distortion tables

def test_distortion_identity_fmo_constant_is_stable():
    dists = [1e-2, 1e-3, 1e-4, 1e-6]
    a = distortion_vs_bound(identity(), (0.0, 0.0), 2.0, constant(1.0), "fmo", dists)
    b = distortion_vs_bound(identity(), (0.0, 0.0), 2.0, constant(1.0), "fmo", dists + [1e-9, 1e-12])
    assert math.isfinite(a.fitted_C) and a.fitted_C == b.fitted_C


def test_distortion_radial_power_is_dominated():
    dists = np.logspace(-2, -12, 6)
    cmp = distortion_vs_bound(radial_power(0.5), (0.0, 0.0), 1.5, constant(1.0), "fmo", dists)
    ratios = np.array(cmp.distortion) / np.array(cmp.bound_shape)
    assert np.all(np.diff(ratios) < 0)
    np.testing.assert_allclose(cmp.distortion, dists**0.5, rtol=1e-12)


def test_distortion_winding_off_axis_is_linear():
    dists = [1e-2, 1e-3, 1e-4]
    cmp = distortion_vs_bound(g2(3), (0.5, 0.5), 1.5, constant(3.0), "fmo", dists)
    slopes = np.array(cmp.distortion) / np.array(dists)
    assert np.all((slopes > 1) & (slopes <= 3 + 1e-6))
    assert cmp.fitted_C < 0.1 and cmp.holds_with_unit_C


def test_distortion_divergent_bound():
    cmp = distortion_vs_bound(identity(), (0.0, 0.0), 1.5, constant(1.0), "divergent", [1e-2, 1e-4], delta0=0.5)
    np.testing.assert_allclose(cmp.bound_shape, [math.log(0.5 / d) ** -0.5 for d in (1e-2, 1e-4)], rtol=1e-8)
    with pytest.raises(ValueError):
        distortion_vs_bound(identity(), (0.0, 0.0), 1.5, constant(1.0), "divergent", [1e-2])
    with pytest.raises(ValueError):
        distortion_vs_bound(exp_map(3), (0.0, 0.0), 1.5, constant(1.0), "fmo", [0.1], image_radius=1.0)
