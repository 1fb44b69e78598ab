"""Majorant fields, radial quadrature and the integral criteria."""
from .criteria import (
    CriterionId,
    CriterionReport,
    Verdict,
    criterion_power,
    criterion_divergence,
    criterion_loglog_growth,
    criterion_ls,
    criterion_radial_divergence,
    fmo_estimate,
    geometric_grid,
    growth_verdict,
    ls_threshold,
    ls_envelope,
)
from .means import (
    I_integral,
    IResult,
    ball_statistics,
    ring_integral,
    sphere_mean,
    sphere_mean_estimate,
    sphere_means,
    tilde_I,
    holder_pair,
    lp_norm_shells,
    divergence_increments,
)
from .psi import PsiFamily, loglog_I_closed_form
from .quadrature import QuadResult, integrate
from .scalar import FIELD_NAMES, ScalarField, closed_form, constant, field_from_string, grid, radial

__all__ = [
    "CriterionId", "CriterionReport", "Verdict", "criterion_power", "criterion_divergence",
    "criterion_loglog_growth", "criterion_ls", "criterion_radial_divergence", "fmo_estimate",
    "geometric_grid", "growth_verdict", "ls_threshold", "ls_envelope", "I_integral", "IResult",
    "ball_statistics", "ring_integral", "sphere_mean", "sphere_mean_estimate", "sphere_means", "tilde_I", "holder_pair", "lp_norm_shells", "divergence_increments",
    "PsiFamily", "loglog_I_closed_form", "QuadResult", "integrate", "FIELD_NAMES", "ScalarField",
    "closed_form", "constant", "field_from_string", "grid", "radial",
]
