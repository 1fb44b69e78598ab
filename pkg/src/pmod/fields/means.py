"""Sphere means, ring integrals and the radial integrals built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..extended import ediv, emul, epow
from ..geometry import SphericalRing, unit_sphere_area
from .psi import PsiFamily
from .quadrature import QuadResult, gauss_legendre, integrate, sphere_average, sphere_rule
from .scalar import ScalarField

_CHUNK = 2_000_000


def _check_inside(Q: ScalarField, x0: np.ndarray, r: float) -> None:
    if math.isinf(Q.domain_radius):
        return
    reach = np.linalg.norm(x0 - Q.center_array(x0.size)) + r
    if reach > Q.domain_radius * (1 + 1e-12):
        raise ValueError(f"sphere of radius {r} about {x0.tolist()} leaves the field's domain")


def sphere_means(Q: ScalarField, x0, radii, order: int = 48) -> np.ndarray:
    """q_{x0}(r) for an array of radii."""
    x0 = np.asarray(x0, dtype=float).ravel()
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("sphere radius must be positive")
    if radii.size:
        _check_inside(Q, x0, float(radii.max()))
    if Q.constant_value is not None:
        return np.full(radii.shape, Q.constant_value)
    if Q.is_radial_about(x0):
        return np.asarray(Q.profile(radii), dtype=float)
    nodes, weights = sphere_rule(x0.size, order)
    flat = radii.ravel()
    out = np.empty(flat.size)
    step = max(1, _CHUNK // (nodes.shape[0] * x0.size))
    for i in range(0, flat.size, step):
        r = flat[i:i + step]
        pts = x0 + r[:, None, None] * nodes[None, :, :]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = Q(pts)
        if np.any(np.isnan(vals)):
            raise FloatingPointError("field evaluated to NaN on a sphere")
        out[i:i + step] = sphere_average(vals, weights)
    return out.reshape(radii.shape)


def sphere_mean(Q: ScalarField, x0, r: float) -> float:
    """Mean of Q over the sphere |x - x0| = r."""
    if r <= 0:
        raise ValueError("sphere radius must be positive")
    return float(sphere_means(Q, x0, np.array([r]))[0])


def sphere_mean_estimate(Q: ScalarField, x0, r: float) -> tuple[float, float]:
    """(mean, error estimate); the error compares against a half-order rule."""
    x0 = np.asarray(x0, dtype=float).ravel()
    fine = sphere_mean(Q, x0, r)
    if Q.constant_value is not None or Q.is_radial_about(x0):
        return fine, 0.0
    if x0.size <= 3:
        coarse = float(sphere_means(Q, x0, np.array([r]), order=24)[0])
        return fine, abs(fine - coarse)
    nodes, weights = sphere_rule(x0.size)
    vals = Q(x0 + r * nodes)
    half = vals.size // 2
    return fine, 0.5 * abs(vals[:half].mean() - vals[half:].mean())


def ring_integral(Q: ScalarField, psi: PsiFamily, ring: SphericalRing, p: float,
                  rtol: float = 1e-6) -> QuadResult:
    """Integral of Q(x) psi(|x - x0|)**p over the ring, via its sphere means."""
    n = ring.n
    x0 = ring.center_array()
    _check_inside(Q, x0, ring.r2)

    def g(t):
        w = emul(epow(psi(t), p), t ** (n - 1))
        return emul(sphere_means(Q, x0, t), w)

    res = integrate(g, ring.r1, ring.r2, rtol=rtol, geometric=24)
    om = unit_sphere_area(n)
    return QuadResult(om * res.value, om * res.error, res.converged, res.panels)


@dataclass(frozen=True)
class IResult:
    value: float
    error: float
    converged: bool
    valid: bool  # 0 < I < inf

    def __float__(self):
        return float(self.value)


def I_integral(psi: PsiFamily, eps: float, eps0: float, rtol: float = 1e-11) -> IResult:
    """I(eps, eps0) = integral of psi over (eps, eps0)."""
    if not 0 < eps < eps0:
        raise ValueError("need 0 < eps < eps0")
    res = integrate(lambda t: psi(t), eps, eps0, rtol=rtol, atol=1e-300, geometric=8)
    valid = res.converged and 0.0 < res.value < math.inf
    return IResult(res.value, res.error, res.converged, valid)


def tilde_I(Q: ScalarField, x0, r1: float, r2: float, n: int, p: float, rtol: float = 1e-8) -> float:
    """Integral over (r1, r2) of dr / (r**((n-1)/(p-1)) q_{x0}(r)**(1/(p-1)))."""
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    x0 = np.asarray(x0, dtype=float).ravel()
    _check_inside(Q, x0, r2)

    def g(t):
        return ediv(1.0, emul(np.power(t, (n - 1) / (p - 1)), epow(sphere_means(Q, x0, t), 1.0 / (p - 1))))

    return integrate(g, r1, r2, rtol=rtol, geometric=8).value


def divergence_increments(g, delta0: float, count: int, rtol: float = 1e-9) -> list[QuadResult]:
    """Integrals of g over the dyadic shells (delta0 2**-(k+1), delta0 2**-k), k < count.

    Each shell is integrated in the variable u = log t.
    """
    out = []
    for k in range(count):
        a = math.log(delta0) - (k + 1) * math.log(2.0)
        b = a + math.log(2.0)
        out.append(integrate(lambda u: emul(g(np.exp(u)), np.exp(u)), a, b, rtol=rtol, atol=1e-300))
    return out


def ball_statistics(Q: ScalarField, x0, eps: float, shells: int = 40, order: int = 24) -> tuple[float, float]:
    """(mean of Q over B(x0, eps), mean absolute deviation from that mean)."""
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    _check_inside(Q, x0, eps)
    xg, wg = gauss_legendre(order)
    edges = eps * 2.0 ** -np.arange(shells + 1, dtype=float)
    edges = np.append(edges, 0.0)
    lo, hi = edges[1:], edges[:-1]
    r = (0.5 * (hi - lo)[:, None] * (xg[None, :] + 1.0) + lo[:, None]).ravel()
    wr = (0.5 * (hi - lo)[:, None] * wg[None, :]).ravel() * r ** (n - 1) * n / eps**n
    if Q.constant_value is not None:
        return Q.constant_value, 0.0
    nodes, wsph = sphere_rule(n, 32 if n <= 3 else 0)
    step = max(1, _CHUNK // (nodes.shape[0] * n))
    vals = np.empty((r.size, nodes.shape[0]))
    for i in range(0, r.size, step):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals[i:i + step] = Q(x0 + r[i:i + step, None, None] * nodes[None])
    if np.any(np.isnan(vals)):
        raise FloatingPointError("field evaluated to NaN in the ball")
    if np.any(np.isinf(vals)):
        return math.inf, math.inf
    mean = float(wr @ (vals @ wsph))
    osc = float(wr @ (np.abs(vals - mean) @ wsph))
    return mean, osc


def lp_norm_shells(Q: ScalarField, center, radius: float, s: float, shells: int = 40) -> tuple[list[float], float]:
    """Shell contributions to the integral of Q**s over B(center, radius) and their tail ratio."""
    center = np.asarray(center, dtype=float).ravel()
    n = center.size
    Qs = Q.power(s)
    om = unit_sphere_area(n)

    def g(t):
        return emul(sphere_means(Qs, center, t), t ** (n - 1))

    contrib = []
    for k in range(shells):
        hi = radius * 2.0**-k
        res = integrate(g, hi / 2, hi, rtol=1e-8, atol=1e-300)
        contrib.append(om * res.value)
    tail = contrib[-4:]
    ratios = [b / a for a, b in zip(tail[:-1], tail[1:]) if a > 0]
    ratio = max(ratios) if ratios else 0.0
    return contrib, ratio


def holder_pair(q, eps: float, eps0: float, n: int, p: float, rtol: float = 1e-10) -> tuple[float, float]:
    """Both sides of the Hölder estimate for g(t) = 1 / (t q(t)**(1/(n-1))) on (eps, eps0).

    Returns (integral of g, (integral of g**(n/p))**(p/n) * (eps0 - eps)**((n-p)/n)).
    """
    if not 0 < eps < eps0:
        raise ValueError("need 0 < eps < eps0")
    if not 1 < p <= n:
        raise ValueError("need 1 < p <= n")

    def g(t):
        return ediv(1.0, emul(t, epow(q(t), 1.0 / (n - 1))))

    lhs = integrate(g, eps, eps0, rtol=rtol, atol=1e-300, geometric=8).value
    inner = integrate(lambda t: epow(g(t), n / p), eps, eps0, rtol=rtol, atol=1e-300, geometric=8).value
    return lhs, epow(inner, p / n) * (eps0 - eps) ** ((n - p) / n)
