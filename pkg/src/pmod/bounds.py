"""Closed-form capacity, modulus and distortion bounds.

The literature constants ``c1`` (diameter lower bound for capacity) and
``b_np`` (ring modulus lower bound) are not known in closed form; they are
plain parameters defaulting to 1, so only shapes and monotonicity of the
dependent bounds are meaningful.
"""
from __future__ import annotations

import math

from .geometry import unit_ball_volume, unit_sphere_area


def _require_p_range(n: int, p: float, lo: float, hi: float, what: str) -> None:
    if not lo < p < hi:
        raise ValueError(f"{what} needs p in ({lo:g}, {hi:g}); got p={p:g} with n={n}")


def cap_lower_volume(m_C: float, n: int, p: float) -> float:
    """Capacity lower bound from the volume of the inner plate (1 < p < n)."""
    _require_p_range(n, p, 1.0, n, "volume lower bound")
    if m_C < 0:
        raise ValueError("volume must be nonnegative")
    om = unit_ball_volume(n)
    return n * om ** (p / n) * ((n - p) / (p - 1)) ** (p - 1) * m_C ** ((n - p) / n)


def cap_lower_diameter(d_C: float, m_A: float, n: int, p: float, c1: float = 1.0) -> float:
    """(c1 d(C)**p / m(A)**(1-n+p))**(1/(n-1)), valid for p > n-1."""
    if p <= n - 1:
        raise ValueError("diameter lower bound needs p > n-1")
    if d_C < 0 or m_A <= 0 or c1 <= 0:
        raise ValueError("need d_C >= 0, m_A > 0, c1 > 0")
    return (c1 * d_C**p / m_A ** (1 - n + p)) ** (1.0 / (n - 1))


def diameter_from_capacity(cap: float, m_A: float, n: int, p: float, c1: float = 1.0) -> float:
    """Largest plate diameter compatible with the diameter lower bound at capacity ``cap``."""
    if cap < 0 or m_A <= 0 or c1 <= 0:
        raise ValueError("need cap >= 0, m_A > 0, c1 > 0")
    return (cap ** (n - 1) * m_A ** (1 - n + p) / c1) ** (1.0 / p)


def modulus_lower_ring(a: float, b: float, n: int, p: float, b_np: float = 1.0) -> float:
    """Lower bound for curves joining two sets that meet every sphere S(0, r), a < r < b."""
    _require_p_range(n, p, n - 1, n, "ring modulus lower bound")
    if not 0 < a <= b:
        raise ValueError("need 0 < a <= b")
    if b_np <= 0:
        raise ValueError("b_np must be positive")
    return 2**n * b_np / (n - p) * (b ** (n - p) - a ** (n - p))


def cap_upper_criterion(Phi: float, I: float, p: float) -> float:
    """Phi / I**p."""
    if not I > 0:
        raise ValueError("I must be positive")
    if math.isinf(I):
        return 0.0
    return Phi / I**p


def cap_upper_tildeI(tilde_I: float, n: int, p: float) -> float:
    """omega_{n-1} / tilde_I**(p-1); infinite when tilde_I = 0."""
    if tilde_I < 0:
        raise ValueError("tilde_I must be nonnegative")
    if tilde_I == 0:
        return math.inf
    if math.isinf(tilde_I):
        return 0.0
    return unit_sphere_area(n) / tilde_I ** (p - 1)


def distortion_bound_general(r_image: float, K: float, I: float, n: int, p: float, q: float,
                             c1: float = 1.0) -> float:
    """Bound on |f(x) - f(x0)| when the weighted ring integral is at most K I**q."""
    if r_image <= 0:
        raise ValueError("image radius must be positive")
    if q > p:
        raise ValueError("need q <= p")
    if not I > 0:
        raise ValueError("I must be positive")
    om = unit_ball_volume(n)
    return ((1.0 / c1) ** (1.0 / p) * om ** ((1 - n + p) / p) * r_image ** ((1 - n + p) * n / p)
            * K ** ((n - 1) / p) * I ** ((q - p) * (n - 1) / p))


def distortion_bound_fmo(dist: float, C_const: float, n: int, p: float) -> float:
    """C (log log 1/dist)**((1-p)(n-1)/p) for 0 < dist < 1/e."""
    if not 0 < dist < math.exp(-1):
        raise ValueError("need 0 < dist < 1/e")
    return C_const * math.log(math.log(1.0 / dist)) ** ((1 - p) * (n - 1) / p)


def distortion_bound_divergent(dist: float, delta0: float, F: float, C_const: float, n: int) -> float:
    """C F**(-(n-1)**2/n), F being the divergent radial integral from dist to delta0."""
    if not 0 < dist < delta0:
        raise ValueError("need 0 < dist < delta0")
    if not F > 0:
        raise ValueError("F must be positive")
    if math.isinf(F):
        return 0.0
    return C_const * F ** (-((n - 1) ** 2) / n)


def ring_modulus_oracle(r1: float, r2: float, n: int, p: float) -> float:
    """Exact p-modulus of the curves joining the boundary spheres of A(r1, r2).

    The extremal density is radial, phi(t) proportional to t**(-(n-1)/(p-1)),
    which gives omega_{n-1} J**(1-p) with J the integral of that power over
    (r1, r2).  ``r2 = inf`` is allowed for p < n.
    """
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    if p <= 1:
        raise ValueError("p must exceed 1")
    a = (n - 1) / (p - 1)
    om = unit_sphere_area(n)
    if math.isclose(a, 1.0, rel_tol=0, abs_tol=1e-14):
        if math.isinf(r2):
            return 0.0
        J = math.log(r2 / r1)
    elif math.isinf(r2):
        if a < 1:
            return 0.0
        J = r1 ** (1 - a) / (a - 1)
    else:
        J = (r2 ** (1 - a) - r1 ** (1 - a)) / (1 - a)
    return om * J ** (1 - p)


def condenser_capacity(inner: float, outer: float, n: int, p: float) -> float:
    """p-capacity of a concentric ball condenser (equal to the ring modulus)."""
    return ring_modulus_oracle(inner, outer, n, p)


BOUND_FUNCTIONS = {
    "cap_lower_volume": cap_lower_volume,
    "cap_lower_diameter": cap_lower_diameter,
    "modulus_lower_ring": modulus_lower_ring,
    "cap_upper_criterion": cap_upper_criterion,
    "cap_upper_tildeI": cap_upper_tildeI,
    "distortion_bound_general": distortion_bound_general,
    "distortion_bound_fmo": distortion_bound_fmo,
    "distortion_bound_divergent": distortion_bound_divergent,
    "ring_modulus_oracle": ring_modulus_oracle,
}
