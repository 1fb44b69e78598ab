"""Arithmetic on [0, inf] with a/inf = 0, a/0 = inf (a > 0) and 0*inf = 0."""
from __future__ import annotations

import math

import numpy as np

INF = math.inf


def ediv(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a / b
    out = np.where(np.isinf(b) & np.isfinite(a), 0.0, out)
    out = np.where((b == 0) & (a > 0), np.inf, out)
    # 0/0 and inf/inf do not occur in the formulas we evaluate; pin them to 0
    out = np.where(np.isnan(out), 0.0, out)
    return out if out.ndim else float(out)


def emul(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        out = a * b
    out = np.where(((a == 0) & np.isinf(b)) | ((b == 0) & np.isinf(a)), 0.0, out)
    return out if out.ndim else float(out)


def epow(a, e):
    """a**e on [0, inf]: 0**(-k) = inf, inf**(-k) = 0."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.power(a, e)
    return out if out.ndim else float(out)


def is_inf(x) -> bool:
    return bool(np.isinf(x))
