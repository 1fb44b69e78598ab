"""Nonnegative majorant fields Q and the closed-form registry."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator


@dataclass(frozen=True)
class ScalarField:
    """An evaluable field Q >= 0; ``np.inf`` marks infinite values.

    ``profile`` is set for fields that are radial about ``center``; the
    sphere mean about that centre is then the profile itself.
    """

    kind: str
    func: Callable[[np.ndarray], np.ndarray]
    center: tuple[float, ...] | None = None
    profile: Callable[[np.ndarray], np.ndarray] | None = None
    domain_radius: float = math.inf
    name: str = ""
    params: dict = field(default_factory=dict)
    constant_value: float | None = None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.func(x), dtype=float)

    def center_array(self, n: int) -> np.ndarray:
        return np.zeros(n) if self.center is None else np.asarray(self.center, dtype=float)

    def is_radial_about(self, x0) -> bool:
        if self.profile is None:
            return False
        x0 = np.asarray(x0, dtype=float)
        return bool(np.allclose(self.center_array(x0.size), x0, rtol=0, atol=1e-14))

    def power(self, s: float) -> "ScalarField":
        """The field Q**s (same centre and radial structure)."""
        prof = None if self.profile is None else (lambda r, f=self.profile: np.power(f(r), s))
        cval = None if self.constant_value is None else self.constant_value**s
        return ScalarField(f"{self.kind}^s", lambda x, f=self.func: np.power(f(x), s),
                           self.center, prof, self.domain_radius, f"({self.name})^{s}",
                           dict(self.params), cval)

    def shifted(self, c: float) -> "ScalarField":
        """The field Q + c."""
        prof = None if self.profile is None else (lambda r, f=self.profile: f(r) + c)
        cval = None if self.constant_value is None else self.constant_value + c
        return ScalarField(self.kind, lambda x, f=self.func: f(x) + c, self.center, prof,
                           self.domain_radius, f"{self.name}+{c}", dict(self.params), cval)


def _dist(x, center):
    if center is None:
        return np.linalg.norm(x, axis=-1)
    return np.linalg.norm(x - np.asarray(center, dtype=float), axis=-1)


def constant(c: float) -> ScalarField:
    if c < 0:
        raise ValueError("Q must be nonnegative")
    return ScalarField("constant", lambda x: np.full(np.shape(x)[:-1], float(c)),
                       profile=lambda r: np.full(np.shape(r), float(c)),
                       name=f"constant:c={c:g}", params={"c": c}, constant_value=float(c))


def radial(profile: Callable[[np.ndarray], np.ndarray], center=None, name: str = "radial",
           domain_radius: float = math.inf, params: dict | None = None) -> ScalarField:
    """Q(x) = profile(|x - center|)."""
    ctr = None if center is None else tuple(float(c) for c in center)

    def func(x):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return profile(_dist(x, ctr))

    def prof(r):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return profile(np.asarray(r, dtype=float))

    return ScalarField("radial", func, ctr, prof, domain_radius, name, params or {})


def closed_form(func: Callable[[np.ndarray], np.ndarray], name: str, center=None,
                domain_radius: float = math.inf, params: dict | None = None) -> ScalarField:
    ctr = None if center is None else tuple(float(c) for c in center)
    return ScalarField("closed_form", func, ctr, None, domain_radius, name, params or {})


def grid(values, lo, hi) -> ScalarField:
    """Samples on a regular node lattice over the box [lo, hi]; multilinear in between."""
    values = np.asarray(values, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if values.ndim > 3:
        raise ValueError("grid-sampled fields are limited to n <= 3")
    if np.any(values < 0):
        raise ValueError("Q must be nonnegative")
    axes = [np.linspace(a, b, m) for a, b, m in zip(lo, hi, values.shape)]
    interp = RegularGridInterpolator(axes, values, method="linear", bounds_error=True)

    def func(x):
        x = np.asarray(x, dtype=float)
        return interp(x.reshape(-1, x.shape[-1])).reshape(x.shape[:-1])

    radius = float(np.min(hi - lo)) / 2
    return ScalarField("grid", func, tuple((lo + hi) / 2), None, radius, "grid")


def _log_recip(r):
    return np.maximum(np.log(1.0 / r), 0.0)


def _registry() -> dict[str, Callable[..., ScalarField]]:
    return {
        "constant": lambda c=1.0: constant(c),
        "zero": lambda: constant(0.0),
        "infinite": lambda: ScalarField("constant", lambda x: np.full(np.shape(x)[:-1], np.inf),
                                        profile=lambda r: np.full(np.shape(r), np.inf),
                                        name="infinite", constant_value=math.inf),
        "radialpow": lambda alpha=-1.0, c=1.0: radial(lambda r: c * np.power(r, alpha),
                                                      name=f"radialpow:alpha={alpha:g}",
                                                      params={"alpha": alpha, "c": c}),
        "recip": lambda: radial(lambda r: 1.0 / r, name="recip"),
        "logrecip": lambda: radial(_log_recip, name="logrecip", domain_radius=1.0),
        "logpow": lambda k=1.0, c=1.0: radial(lambda r: c * np.power(_log_recip(r), k),
                                              name=f"logpow:k={k:g}", domain_radius=1.0,
                                              params={"k": k, "c": c}),
        "coordsq": lambda i=1: closed_form(lambda x: x[..., int(i) - 1] ** 2, name=f"coordsq:i={int(i)}",
                                           params={"i": int(i)}),
        "gauss": lambda a=1.0: closed_form(lambda x: 1.0 + np.exp(-a * np.sum((x - 0.3) ** 2, axis=-1)),
                                           name=f"gauss:a={a:g}", params={"a": a}),
    }


FIELD_NAMES = tuple(sorted(_registry()))


def parse_params(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        if "=" not in item:
            raise ValueError(f"malformed parameter {item!r}; expected key=value")
        key, val = item.split("=", 1)
        out[key.strip()] = float(val.replace("−", "-"))
    return out


def field_from_string(spec: str) -> ScalarField:
    """Build a registry field from "name" or "name:key=value,...", e.g. "constant:c=1"."""
    name, _, rest = spec.partition(":")
    reg = _registry()
    if name not in reg:
        raise KeyError(f"unknown field {name!r}; known: {', '.join(FIELD_NAMES)}")
    return reg[name](**parse_params(rest))
