"""Admissible radial weight families psi used to test the integral criteria."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..extended import ediv, emul, epow


@dataclass(frozen=True)
class PsiFamily:
    """psi(t) >= 0, identically zero outside ``support`` when one is given."""

    kind: str
    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float] | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = np.asarray(self.func(t), dtype=float)
        if self.support is not None:
            lo, hi = self.support
            v = np.where((t > lo) & (t < hi), v, 0.0)
        return v

    def restricted(self, lo: float, hi: float) -> "PsiFamily":
        return PsiFamily(self.kind, self.func, (lo, hi), dict(self.params))

    @classmethod
    def constant(cls, c: float) -> "PsiFamily":
        return cls("constant", lambda t: np.full(np.shape(t), float(c)), params={"c": c})

    @classmethod
    def reciprocal(cls) -> "PsiFamily":
        return cls("reciprocal", lambda t: 1.0 / t)

    @classmethod
    def loglog(cls, n: int, p: float) -> "PsiFamily":
        """(t log(1/t))**(-n/p), defined for 0 < t < 1."""
        def f(t):
            if np.any(t >= 1):
                raise ValueError("loglog weight is only defined on (0, 1)")
            return np.power(t * np.log(1.0 / t), -n / p)
        return cls("loglog", f, params={"n": n, "p": p})

    @classmethod
    def qmean(cls, n: int, p: float, q: Callable[[np.ndarray], np.ndarray]) -> "PsiFamily":
        """(1 / (t q(t)**(1/(n-1))))**(n/p) with the extended-arithmetic conventions."""
        def f(t):
            return epow(ediv(1.0, emul(t, epow(q(t), 1.0 / (n - 1)))), n / p)
        return cls("qmean", f, params={"n": n, "p": p})

    @classmethod
    def capacity(cls, n: int, p: float, q: Callable[[np.ndarray], np.ndarray]) -> "PsiFamily":
        """1 / (t**((n-1)/(p-1)) q(t)**(1/(p-1)))."""
        def f(t):
            return ediv(1.0, emul(np.power(t, (n - 1) / (p - 1)), epow(q(t), 1.0 / (p - 1))))
        return cls("capacity", f, params={"n": n, "p": p})

    @classmethod
    def tabulated(cls, t, values) -> "PsiFamily":
        t = np.asarray(t, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise ValueError("psi must be nonnegative")
        return cls("tabulated", lambda s: np.interp(s, t, values), (float(t[0]), float(t[-1])))


def loglog_I_closed_form(eps: float, eps0: float) -> float:
    """I(eps, eps0) for psi = 1/(t log(1/t)), i.e. the loglog family with p = n."""
    return math.log(math.log(1.0 / eps) / math.log(1.0 / eps0))
