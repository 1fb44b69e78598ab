"""Finite-protocol verdicts for the integral criteria on the majorant Q.

Asymptotic statements are decided on geometric sequences eps_k = eps0 2**-k
by least-squares slopes in log-log coordinates: slope <= 0.05 counts as
bounded, slope >= 0.5 as unbounded, anything between is inconclusive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..extended import ediv, emul, epow
from ..geometry import unit_sphere_area
from .means import ball_statistics, divergence_increments, lp_norm_shells, sphere_means
from .scalar import ScalarField

BOUNDED_SLOPE = 0.05
UNBOUNDED_SLOPE = 0.5
DEFAULT_STEPS = 20


class Verdict(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


class CriterionId(str, Enum):
    FMO = "FMO"
    LOGLOG_GROWTH = "loglog_growth"
    DIVERGENCE_C = "divergence_c"
    LS = "theorem3_Ls"
    RADIAL_DIVERGENCE = "theorem4_divergence"
    POWER = "corollary_power"


@dataclass
class CriterionReport:
    criterion_id: CriterionId
    verdict: Verdict
    evidence: list[tuple[float, float]]
    extrapolation_note: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.criterion_id = CriterionId(self.criterion_id)
        self.verdict = Verdict(self.verdict)
        if self.verdict is Verdict.INCONCLUSIVE and not self.extrapolation_note:
            raise ValueError("an inconclusive verdict must explain itself")

    @property
    def satisfied(self) -> bool:
        return self.verdict is Verdict.SATISFIED

    def to_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id.value,
            "verdict": self.verdict.value,
            "evidence": [[_jsonable(e), _jsonable(v)] for e, v in self.evidence],
            "extrapolation_note": self.extrapolation_note,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Enum):
        return v.value
    return v


def geometric_grid(eps0: float, steps: int = DEFAULT_STEPS) -> np.ndarray:
    return eps0 * 2.0 ** -np.arange(1, steps + 1, dtype=float)


def log_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x (positive entries only)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if keep.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def growth_verdict(scale: np.ndarray, values: np.ndarray) -> tuple[Verdict, float, str]:
    """Bounded / unbounded decision for ``values`` as ``scale`` grows."""
    values = np.asarray(values, dtype=float)
    if np.any(np.isinf(values)):
        return Verdict.VIOLATED, math.inf, "infinite entries in the sequence"
    if np.all(values <= 0):
        return Verdict.SATISFIED, 0.0, ""
    slope = log_slope(scale, values)
    if slope <= BOUNDED_SLOPE:
        return Verdict.SATISFIED, slope, ""
    if slope >= UNBOUNDED_SLOPE:
        return Verdict.VIOLATED, slope, ""
    return Verdict.INCONCLUSIVE, slope, (
        f"log-log slope {slope:.3f} lies between {BOUNDED_SLOPE} and {UNBOUNDED_SLOPE}; "
        "a longer eps-sequence is needed to separate bounded from unbounded growth")


def _as_point(x0, n: int | None = None) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size == 1 and n is not None and n > 1:
        x0 = np.full(n, float(x0[0]))
    return x0


def fmo_estimate(Q: ScalarField, x0, eps_list, n: int | None = None) -> CriterionReport:
    """Mean oscillation of Q over B(x0, eps) for each eps, with an FMO verdict."""
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 2 or np.any(np.diff(eps) >= 0):
        raise ValueError("eps list must be strictly decreasing")
    x0 = _as_point(x0, n)
    osc = []
    for e in eps:
        _, o = ball_statistics(Q, x0, float(e))
        osc.append(o)
    verdict, slope, note = growth_verdict(1.0 / eps, np.array(osc))
    return CriterionReport(CriterionId.FMO, verdict, list(zip(eps.tolist(), osc)), note,
                           {"slope": slope, "x0": x0.tolist()})


def criterion_loglog_growth(Q: ScalarField, x0, n: int, r_list) -> CriterionReport:
    """q_{x0}(r) = O(log(1/r)**(n-1)) tested through the ratio sequence."""
    r = np.asarray(r_list, dtype=float)
    if np.any(np.diff(r) >= 0) or np.any(r >= 1) or np.any(r <= 0):
        raise ValueError("r list must decrease inside (0, 1)")
    x0 = _as_point(x0, n)
    q = sphere_means(Q, x0, r)
    ratio = ediv(q, np.log(1.0 / r) ** (n - 1))
    verdict, slope, note = growth_verdict(np.log(1.0 / r), ratio)
    return CriterionReport(CriterionId.LOGLOG_GROWTH, verdict, list(zip(r.tolist(), np.ravel(ratio).tolist())),
                           note, {"slope": slope})


def _divergence_report(cid: CriterionId, g, delta0: float, steps: int) -> CriterionReport:
    """Decide whether the integral of g over (0, delta0) diverges.

    Uses the dyadic shell increments dF_k.  With L = log(1/t) measured at the
    shell midpoints, a harmonic tail dF ~ 1/L is the borderline divergent
    case, so the fitted exponent beta of dF ~ L**beta is compared with -1
    using the standard bounded/unbounded thresholds.
    """
    pieces = divergence_increments(g, delta0, steps)
    inc = np.array([p.value for p in pieces])
    deltas = delta0 * 2.0 ** -np.arange(1, steps + 1, dtype=float)
    F = np.cumsum(inc)
    finite_each = bool(np.all(np.isfinite(F)))
    evidence = list(zip(deltas.tolist(), F.tolist()))
    details = {"partial_integrals_finite": finite_each, "delta0": delta0,
               "quadrature_converged": all(p.converged for p in pieces)}
    if not finite_each:
        return CriterionReport(cid, Verdict.SATISFIED, evidence,
                               "F(delta) is infinite at finite delta; the integral diverges trivially",
                               details)
    if np.all(inc <= 0):
        return CriterionReport(cid, Verdict.VIOLATED, evidence, "F vanishes identically", details)
    mids = delta0 * 2.0 ** -(np.arange(steps, dtype=float) + 0.5)
    L = np.log(1.0 / mids) if delta0 < 1 else np.log(delta0 / mids) + 1.0
    half = steps // 2
    beta = log_slope(L[half:], inc[half:])
    details["tail_exponent"] = beta
    excess = beta + 1.0
    if excess >= -BOUNDED_SLOPE:
        note = f"increments decay like L^{beta:.3f} (L = log 1/delta), no faster than harmonic: F grows without bound"
        return CriterionReport(cid, Verdict.SATISFIED, evidence, note, details)
    # convergent tail: Richardson-type extrapolation of F(0+) from the fitted power law
    j = np.arange(1, 200_000, dtype=float)
    step = math.log(2.0)
    tail = inc[-1] * np.sum(((L[-1] + j * step) / L[-1]) ** beta) if beta < -1 else math.inf
    details["extrapolated_limit"] = float(F[-1] + tail)
    if excess <= -UNBOUNDED_SLOPE:
        note = (f"increments decay like L^{beta:.3f}; extrapolated limit F(0+) ~ "
                f"{F[-1] + tail:.6g}")
        return CriterionReport(cid, Verdict.VIOLATED, evidence, note, details)
    note = (f"increment exponent {beta:.3f} is too close to the harmonic borderline -1 to decide "
            "divergence on this sequence")
    return CriterionReport(cid, Verdict.INCONCLUSIVE, evidence, note, details)


def criterion_divergence(Q: ScalarField, x0, n: int, delta0: float, steps: int = DEFAULT_STEPS) -> CriterionReport:
    """Divergence at 0 of the integral of dt / (t q(t)**(1/(n-1)))."""
    x0 = _as_point(x0, n)

    def g(t):
        return ediv(1.0, emul(t, epow(sphere_means(Q, x0, t), 1.0 / (n - 1))))

    return _divergence_report(CriterionId.DIVERGENCE_C, g, delta0, steps)


def criterion_radial_divergence(Q: ScalarField, b, n: int, p: float, eps0: float, steps: int = DEFAULT_STEPS) -> CriterionReport:
    """Divergence at 0 of the integral of dr / (r**((n-1)/(p-1)) q_b(r)**(1/(p-1)))."""
    if not n - 1 < p < n:
        raise ValueError("p must lie in (n-1, n)")
    b = _as_point(b, n)

    def g(t):
        return ediv(1.0, emul(np.power(t, (n - 1) / (p - 1)), epow(sphere_means(Q, b, t), 1.0 / (p - 1))))

    return _divergence_report(CriterionId.RADIAL_DIVERGENCE, g, eps0, steps)


def criterion_power(Q: ScalarField, b, n: int, p: float, eps0: float,
                              steps: int = DEFAULT_STEPS) -> CriterionReport:
    """q_b(t) <= c t**(p-n) near 0, tested through the ratio q_b(t) t**(n-p)."""
    if not n - 1 < p < n:
        raise ValueError("p must lie in (n-1, n)")
    b = _as_point(b, n)
    t = geometric_grid(eps0, steps)
    ratio = emul(sphere_means(Q, b, t), t ** (n - p))
    verdict, slope, note = growth_verdict(1.0 / t, ratio)
    return CriterionReport(CriterionId.POWER, verdict, list(zip(t.tolist(), np.ravel(ratio).tolist())),
                           note, {"slope": slope, "sup_ratio": float(np.max(ratio))})


def ls_threshold(n: int, p: float) -> float:
    """Smallest admissible integrability exponent n/(n-p)."""
    if not n - 1 < p < n:
        raise ValueError("p must lie in (n-1, n)")
    return n / (n - p)


def ls_envelope(norm: float, s: float, n: int, p: float, eps0: float, eps: np.ndarray) -> np.ndarray:
    """Upper envelope of ring_integral / I**p for psi = 1/t and Q in L^s."""
    om = unit_sphere_area(n)
    log_ratio = np.log(eps0 / np.asarray(eps, dtype=float))
    s0 = ls_threshold(n, p)
    if math.isclose(s, s0, rel_tol=1e-12):
        return om ** (p / n) * norm * log_ratio ** (-p + p / n)
    q = s / (s - 1.0)
    expo = n - p * q
    return norm * (om / expo * eps0**expo) ** (1.0 / q) * log_ratio ** (-p)


def criterion_ls(Q: ScalarField, s: float, n: int, p: float, center=None, radius: float = 1.0,
                       eps0: float | None = None, steps: int = DEFAULT_STEPS) -> CriterionReport:
    """Q in L^s(B(center, radius)) with s >= n/(n-p), plus the decay envelope."""
    if s <= 1:
        raise ValueError("s must exceed 1")
    threshold = ls_threshold(n, p)
    center = np.zeros(n) if center is None else _as_point(center, n)
    shells, ratio = lp_norm_shells(Q, center, radius, s)
    finite = bool(np.all(np.isfinite(shells))) and ratio < 1.0
    if finite:
        tail = shells[-1] * ratio / (1.0 - ratio) if ratio > 0 else 0.0
        norm = float((sum(shells) + tail) ** (1.0 / s))
    else:
        norm = math.inf
    details = {"threshold": threshold, "s": s, "norm": norm, "shell_tail_ratio": ratio,
               "meets_threshold": s >= threshold}
    eps0 = radius / 2 if eps0 is None else eps0
    eps = geometric_grid(eps0, steps)
    if not finite:
        evidence = list(zip((radius * 2.0 ** -np.arange(len(shells))).tolist(), shells))
        return CriterionReport(CriterionId.LS, Verdict.VIOLATED, evidence,
                               f"shell contributions to the L^{s:g} integral stop decaying (ratio {ratio:.3g})",
                               details)
    envelope = ls_envelope(norm, s, n, p, eps0, eps) if s >= threshold else np.full(eps.size, math.inf)
    verdict = Verdict.SATISFIED if s >= threshold else Verdict.VIOLATED
    note = "" if s >= threshold else f"s = {s:g} is below the threshold n/(n-p) = {threshold:g}"
    return CriterionReport(CriterionId.LS, verdict, list(zip(eps.tolist(), envelope.tolist())),
                           note, details)
