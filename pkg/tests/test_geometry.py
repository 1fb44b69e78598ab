import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmod.geometry import (
    Condenser,
    DimensionParams,
    ExtendedPoint,
    SphericalRing,
    ball_volume,
    chordal_diameter,
    chordal_distance,
    chordal_distance_array,
    sphere_area,
    unit_ball_volume,
)

coord = st.floats(-1e3, 1e3, allow_nan=False)


def points(n=3):
    finite = st.lists(coord, min_size=n, max_size=n).map(lambda c: ExtendedPoint(tuple(c)))
    return st.one_of(finite, st.just(ExtendedPoint.infinity(n)))


def test_chordal_known_values():
    O, inf = ExtendedPoint((0.0, 0.0)), ExtendedPoint.infinity(2)
    assert chordal_distance(O, inf) == 1.0
    assert chordal_distance(O, O) == 0.0
    assert chordal_distance(inf, inf) == 0.0
    assert chordal_distance(ExtendedPoint((1.0, 0.0)), inf) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_infinity_ignores_coords():
    a = ExtendedPoint((5.0, 5.0), at_infinity=True)
    assert chordal_distance(a, ExtendedPoint((0.0, 0.0))) == 1.0
    with pytest.raises(ValueError):
        a.as_array()


def test_dimension_checks():
    with pytest.raises(ValueError):
        ExtendedPoint((1.0,))
    with pytest.raises(ValueError):
        chordal_distance(ExtendedPoint((0.0, 0.0)), ExtendedPoint((0.0, 0.0, 0.0)))


def test_chordal_diameter():
    with pytest.raises(ValueError):
        chordal_diameter([])
    assert chordal_diameter([ExtendedPoint((3.0, 4.0))]) == 0.0
    assert chordal_diameter([ExtendedPoint((0.0, 0.0)), ExtendedPoint.infinity(2)]) == 1.0
    assert chordal_diameter([ExtendedPoint((1.0, 0.0)), ExtendedPoint((-1.0, 0.0))]) == pytest.approx(1.0, abs=1e-15)


def test_array_form_matches_scalar(rng):
    a, b = rng.normal(size=(50, 3)) * 4, rng.normal(size=(50, 3)) * 4
    vec = chordal_distance_array(a, b)
    ref = [chordal_distance(ExtendedPoint(tuple(x)), ExtendedPoint(tuple(y))) for x, y in zip(a, b)]
    np.testing.assert_allclose(vec, ref, rtol=1e-14)


@given(points(), points(), points())
def test_chordal_metric_axioms(x, y, z):
    dxy, dyx = chordal_distance(x, y), chordal_distance(y, x)
    assert dxy == pytest.approx(dyx, abs=1e-15)
    assert 0.0 <= dxy <= 1.0 + 1e-15
    assert dxy <= chordal_distance(x, z) + chordal_distance(z, y) + 1e-12


@given(st.lists(points(2), min_size=1, max_size=6), st.lists(points(2), max_size=4))
def test_chordal_diameter_monotone(base, extra):
    assert chordal_diameter(base) <= chordal_diameter(base + extra)


def test_measure_formulas():
    assert ball_volume(2, 1) == pytest.approx(math.pi, rel=1e-15)
    assert sphere_area(3, 1) == pytest.approx(4 * math.pi, rel=1e-15)
    assert ball_volume(4, 1) == pytest.approx(math.pi**2 / 2, rel=1e-15)
    assert ball_volume(3, math.inf) == math.inf
    with pytest.raises(ValueError):
        unit_ball_volume(0)
    with pytest.raises(ValueError):
        ball_volume(2, -1)


def test_ball_volume_monte_carlo(rng):
    # independent estimate of the 4-ball volume from uniform samples of the cube
    pts = rng.uniform(-1, 1, size=(400_000, 4))
    est = 16 * np.mean(np.sum(pts * pts, axis=1) < 1)
    assert est == pytest.approx(ball_volume(4, 1), rel=0.01)


@given(st.integers(1, 8), st.floats(0.05, 20))
def test_sphere_area_is_volume_derivative(n, r):
    h = 1e-6 * r
    deriv = (ball_volume(n, r + h) - ball_volume(n, r - h)) / (2 * h)
    assert deriv == pytest.approx(sphere_area(n, r), rel=1e-6)


def test_ring_and_condenser():
    ring = SphericalRing((0, 0), 1, 2)
    assert ring.n == 2
    assert list(ring.contains(np.array([[1.5, 0], [0.5, 0], [2.5, 0]]))) == [True, False, False]
    for bad in ((0, 1), (2, 1), (1, 1)):
        with pytest.raises(ValueError):
            SphericalRing((0, 0), *bad)
    with pytest.raises(ValueError):
        SphericalRing(tuple([0.0] * 9), 1, 2)
    c = Condenser((0, 0, 0), 1.0)
    assert c.outer_volume() == math.inf
    assert c.plate_volume() == pytest.approx(4 * math.pi / 3)
    assert c.plate_diameter() == 2.0
    with pytest.raises(ValueError):
        Condenser((0, 0), 2.0, 1.0)


def test_dimension_params():
    assert DimensionParams(2, 1.5).in_main_range
    assert not DimensionParams(3, 1.5).in_main_range
    with pytest.raises(ValueError):
        DimensionParams(3, 1.5).require_main_range()
    with pytest.raises(ValueError):
        DimensionParams(2, 1.0)
