"""The fixed experiment suite behind ``pmod reproduce``.

Each check returns a plain dict row: id, name, passed, value, target, detail.
All randomness flows from the seed, so two runs give identical rows.
"""
from __future__ import annotations

import math
import time

import numpy as np

from . import bounds
from .fields import (
    PsiFamily,
    constant,
    criterion_divergence,
    field_from_string,
    fmo_estimate,
    geometric_grid,
    holder_pair,
    integrate,
    ls_threshold,
    radial,
    ring_integral,
    sphere_means,
)
from .geometry import SphericalRing, unit_sphere_area
from .mappings import dilatation, eta_family, equicontinuity_probe, exp_map, g1, g2, verify_ring_pQ
from .modsolver import CurveFamily, DensityGrid, Polyline, discrete_modulus, sample_ring_family

RING_CURVES = 256
RING_RESOLUTION = 128


def _row(cid, name, passed, value, target, **detail):
    return {"id": cid, "name": name, "passed": bool(passed), "value": value, "target": target, "detail": detail}


def ring_oracle(seed: int) -> list[dict]:
    rows = []
    ring = SphericalRing((0.0, 0.0), 1.0, 2.0)
    fam = sample_ring_family(ring, RING_CURVES)
    for p in (1.2, 1.5, 1.8, 2.0):
        t0 = time.perf_counter()
        res = discrete_modulus(fam, p, resolution=RING_RESOLUTION)
        slow = time.perf_counter() - t0 > 60
        exact = bounds.ring_modulus_oracle(1.0, 2.0, 2, p)
        rel = abs(res.value - exact) / exact
        rows.append(_row(1, f"ring modulus p={p:g}", rel <= 0.05 and not slow, round(rel, 10), "rel <= 0.05",
                         discrete=res.value, oracle=exact))
    e_ring = SphericalRing((0.0, 0.0), 1.0, math.e)
    res = discrete_modulus(sample_ring_family(e_ring, RING_CURVES), 2.0, resolution=RING_RESOLUTION)
    rel = abs(res.value - 2 * math.pi) / (2 * math.pi)
    rows.append(_row(1, "ring modulus p=n=2, r2=e", rel <= 0.05, round(rel, 10), "rel <= 0.05 vs 2*pi",
                     discrete=res.value))
    return rows


def _off_axis_points(rng, count: int, n: int) -> np.ndarray:
    pts = rng.uniform(-1.0, 1.0, size=(count, n))
    bad = np.hypot(pts[:, -2], pts[:, -1]) < 1e-3
    pts[bad, -1] += 0.5
    return pts


def g2_dilatation(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for m in (1, 2, 3, 5):
        for x in _off_axis_points(rng, 1000, 2):
            worst = max(worst, abs(dilatation(g2(m), x, 1.5).K_Ip - m))
    return [_row(2, "g2 dilatation K = m", worst <= 1e-6, worst, "max |K - m| <= 1e-6")]


def g1_dilatation(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed + 1)
    rows = []
    for n in (2, 3):
        pts = rng.uniform(-1.0, 1.0, size=(4000, n))
        pts = pts[(np.linalg.norm(pts, axis=1) < 1) & (np.hypot(pts[:, 0], pts[:, 1]) > 0)][:1000]
        worst = max(dilatation(g1(n), x, n).K_Ip for x in pts)
        cap = (1 + math.sqrt(2)) ** n
        rows.append(_row(3, f"g1 dilatation n={n}", worst <= cap + 1e-6, worst, f"<= {cap:.12g} + 1e-6"))
    return rows


def verifier(seed: int) -> list[dict]:
    ring = SphericalRing((0.0, 0.0), 1.0, 2.0)
    p = 1.5
    eta = eta_family("const", ring, p)
    rows = []
    for m in (1, 2, 3):
        rep = verify_ring_pQ(g2(m), ring, p, constant(m), eta, k_curves=RING_CURVES, resolution=RING_RESOLUTION)
        rows.append(_row(4, f"g2(m={m}) with Q=m", rep.verdict == "satisfied", rep.margin, "satisfied",
                         lhs=rep.lhs, rhs=rep.rhs))
    rep = verify_ring_pQ(g2(3), ring, p, constant(1), eta, k_curves=RING_CURVES, resolution=RING_RESOLUTION)
    rows.append(_row(4, "g2(m=3) with Q=1", rep.verdict == "violated", rep.margin, "violated",
                     lhs=rep.lhs, rhs=rep.rhs, verdict=rep.verdict))
    return rows


def counterexample(seed: int) -> list[dict]:
    exp_tab = equicontinuity_probe([exp_map(m) for m in range(1, 11)], (0.0, 0.0), [0.5])
    col = exp_tab.column(0.5)
    growth = float(col[-1] / col[0])
    g2_tab = equicontinuity_probe([g2(m) for m in range(1, 6)], (0.0, 0.0), [0.5])
    spread = float(g2_tab.column(0.5).max() / g2_tab.column(0.5).min())
    return [
        _row(5, "exp family growth at delta=0.5", growth > 50, growth, "> 50", verdict=exp_tab.verdict),
        _row(5, "g2 family spread at delta=0.5", spread <= 2, spread, "<= 2", verdict=g2_tab.verdict),
    ]


def axioms(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed + 2)
    ring = SphericalRing((0.0, 0.0), 1.0, 2.0)
    big = sample_ring_family(ring, 96, mode="random_joining", seed=seed)
    idx = np.sort(rng.choice(len(big), size=48, replace=False))
    small = big.subset(idx)
    other = sample_ring_family(ring, 64, mode="random_joining", seed=seed + 3)
    grid = DensityGrid.covering(big.union(other), 64, margin=0.05)
    p = 1.5
    M = lambda fam: discrete_modulus(fam, p, grid=grid).value
    m_big, m_small, m_other, m_union = M(big), M(small), M(other), M(big.union(other))
    # truncate every curve of big to its first half: a minorizing family
    halves = CurveFamily([Polyline(g.vertices[: max(2, len(g.vertices) // 2 + 1)]) for g in big])
    m_half = M(halves)
    lam = 2.0
    scaled_grid = DensityGrid(grid.lo * lam, grid.hi * lam, grid.values)
    m_scaled = discrete_modulus(big.scaled(lam), p, grid=scaled_grid).value
    ratio = m_scaled / (m_big * lam ** (2 - p))
    slack = 1e-3
    return [
        _row(6, "monotone", m_small <= m_big * (1 + slack), m_small / m_big, "<= 1"),
        _row(6, "subadditive", m_union <= (m_big + m_other) * (1 + slack), m_union / (m_big + m_other), "<= 1"),
        _row(6, "minorization", m_big <= m_half * (1 + slack), m_big / m_half, "<= 1"),
        _row(6, "scaling lambda**(n-p)", abs(ratio - 1) <= 1e-3, ratio, "1 +- 1e-3"),
    ]


def fubini_holder(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed + 4)
    Q = field_from_string("gauss:a=2")
    ring = SphericalRing((0.1, -0.2), 0.5, 1.5)
    psi = PsiFamily.reciprocal()
    p = 1.5
    fub = ring_integral(Q, psi, ring, p).value
    direct = _cartesian_ring_integral(Q, ring, p)
    rel = abs(fub - direct) / abs(direct)
    worst = -math.inf
    for _ in range(20):
        a, b, c = rng.uniform(0.2, 2.0), rng.uniform(-1.5, 1.5), rng.uniform(0.0, 2.0)
        n = int(rng.integers(2, 4))
        pp = float(rng.uniform(n - 1 + 0.05, n))
        prof = lambda t, a=a, b=b, c=c: a * np.power(t, b) * (1.0 + c * np.log(1.0 / t) ** 2)
        lhs, rhs = holder_pair(prof, 0.01, 0.5, n, pp)
        worst = max(worst, (lhs - rhs) / rhs)
    return [
        _row(7, "Fubini vs Cartesian", rel <= 1e-4, rel, "rel <= 1e-4", fubini=fub, cartesian=direct),
        _row(7, "Hölder on 20 profiles", worst <= 1e-8, worst, "(lhs - rhs)/rhs <= 1e-8"),
    ]


def _cartesian_ring_integral(Q, ring: SphericalRing, p: float, m: int = 400) -> float:
    """Polar tensor Gauss rule on the annulus, independent of the sphere-mean path."""
    from numpy.polynomial.legendre import leggauss

    xr, wr = leggauss(m)
    r = 0.5 * (ring.r2 - ring.r1) * (xr + 1) + ring.r1
    wr = 0.5 * (ring.r2 - ring.r1) * wr
    th = 2 * np.pi * np.arange(m) / m
    c = ring.center_array()
    pts = c + np.stack([r[:, None] * np.cos(th)[None], r[:, None] * np.sin(th)[None]], axis=-1)
    vals = Q(pts) * (1.0 / r[:, None]) ** p * r[:, None]
    return float(wr @ vals.sum(axis=1) * (2 * np.pi / m))


def criteria_suite(seed: int) -> list[dict]:
    eps = geometric_grid(0.5, 16)
    rows = []
    for name, want in (("constant:c=3", "satisfied"), ("logrecip", "satisfied"), ("recip", "violated")):
        rep = fmo_estimate(field_from_string(name), (0.0, 0.0), eps, 2)
        rows.append(_row(8, f"FMO {name}", rep.verdict.value == want, rep.verdict.value, want))
    rep = criterion_divergence(constant(1.0), (0.0, 0.0), 2, 0.5)
    F_closed = [math.log(0.5 / d) for d, _ in rep.evidence]
    err = max(abs(f - g) for (_, f), g in zip(rep.evidence, F_closed))
    rows.append(_row(8, "divergence Q=1", rep.verdict.value == "satisfied" and err < 1e-8, err,
                     "satisfied, F = log(delta0/delta)"))
    s0 = ls_threshold(2, 1.5)
    rows.append(_row(8, "L^s threshold n=2 p=1.5", s0 == 4.0, s0, 4.0))
    return rows


def bound_algebra(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed + 5)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        p = float(rng.uniform(n - 1 + 0.01, n))
        q = float(rng.uniform(0.5, p))
        r, K, I, c1 = (float(v) for v in rng.uniform(0.2, 5.0, size=4))
        cap = bounds.cap_upper_criterion(K * I**q, I, p)
        m_A = r**n * math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        composed = bounds.diameter_from_capacity(cap, m_A, n, p, c1)
        direct = bounds.distortion_bound_general(r, K, I, n, p, q, c1)
        worst = max(worst, abs(composed - direct) / direct)
    vol = bounds.cap_lower_volume(1.0, 3, 1.5)
    return [
        _row(9, "general distortion = composed bounds", worst <= 1e-12, worst, "rel <= 1e-12"),
        _row(9, "volume bound n=3 p=1.5", abs(vol - 6 * math.sqrt(math.pi)) <= 1e-12, vol, 6 * math.sqrt(math.pi)),
    ]


SUITE = (ring_oracle, g2_dilatation, g1_dilatation, verifier, counterexample, axioms, fubini_holder,
         criteria_suite, bound_algebra)


def run_suite(seed: int) -> list[dict]:
    rows = []
    for check in SUITE:
        rows.extend(check(seed))
    return rows
