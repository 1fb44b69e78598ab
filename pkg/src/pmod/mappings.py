"""Mapping zoo, dilatation, the ring (p, Q) verifier and equicontinuity probes."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .bounds import distortion_bound_divergent, distortion_bound_fmo
from .fields import I_integral, PsiFamily, ScalarField, integrate, ring_integral, sphere_means
from .fields.criteria import log_slope
from .fields.quadrature import sphere_rule
from .extended import ediv, emul, epow
from .geometry import SphericalRing, chordal_distance_array
from .modsolver import DensityGrid, discrete_modulus, image_family, sample_ring_family

KINDS = ("identity", "g1", "g2", "exp", "radialpow", "compose")
ANALYTIC = {"identity", "g1", "g2", "exp", "radialpow"}


@dataclass(frozen=True)
class MappingSpec:
    kind: str
    n: int = 2
    params: dict = field(default_factory=dict)
    parts: tuple["MappingSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown mapping kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.kind == "g2":
            m = self.params.get("m", 1)
            if m != int(m) or m < 1:
                raise ValueError("g2 needs a positive integer winding m")
            self.params["m"] = int(m)
        if self.kind == "exp" and self.n != 2:
            raise ValueError("exp is a planar map")
        if self.kind == "compose":
            if not self.parts or any(p.n != self.n for p in self.parts):
                raise ValueError("composition parts must share the dimension")

    @property
    def name(self) -> str:
        if self.kind == "compose":
            return "compose:" + ",".join(p.name for p in self.parts)
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={v:g}" for k, v in self.params.items())

    def evaluate(self, x) -> np.ndarray:
        return evaluate(self, x)


def identity(n: int = 2) -> MappingSpec:
    return MappingSpec("identity", n)


def g1(n: int = 2) -> MappingSpec:
    return MappingSpec("g1", n)


def g2(m: int, n: int = 2) -> MappingSpec:
    return MappingSpec("g2", n, {"m": m})


def exp_map(m: float) -> MappingSpec:
    return MappingSpec("exp", 2, {"m": float(m)})


def radial_power(alpha: float, n: int = 2) -> MappingSpec:
    return MappingSpec("radialpow", n, {"alpha": float(alpha)})


def compose(*parts: MappingSpec) -> MappingSpec:
    """compose(f, g) is f o g: the last part acts first."""
    return MappingSpec("compose", parts[0].n, parts=tuple(parts))


_ALIASES = {"exp_m": "exp", "radial_power": "radialpow", "id": "identity"}


def mapping_from_string(spec: str, n: int = 2) -> MappingSpec:
    """Parse "g2:m=3", "exp:m=5", "radialpow:alpha=0.5", "compose:g1,g2:m=2"."""
    spec = spec.strip()
    if spec.startswith("compose:"):
        body = spec[len("compose:"):]
        pieces: list[str] = []
        for tok in body.split(","):
            if "=" in tok and ":" not in tok and pieces:
                pieces[-1] += "," + tok
            else:
                pieces.append(tok)
        return compose(*(mapping_from_string(p, n) for p in pieces))
    name, _, rest = spec.partition(":")
    name = _ALIASES.get(name, name)
    params = {}
    for item in filter(None, rest.split(",")):
        if "=" not in item:
            raise ValueError(f"malformed mapping parameter {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = float(v.replace("−", "-"))
    if name == "exp":
        n = 2
    return MappingSpec(name, n, params)


def parse_family(spec: str, n: int = 2) -> list[MappingSpec]:
    """Expand a range such as "exp:m=1..10" into one mapping per integer value."""
    m = re.search(r"([A-Za-z_]+)=(-?\d+)\.\.(-?\d+)", spec)
    if m is None:
        if ".." in spec:
            raise ValueError(f"malformed range in {spec!r}")
        return [mapping_from_string(s, n) for s in spec.split(";") if s]
    lo, hi = int(m.group(2)), int(m.group(3))
    if hi < lo:
        raise ValueError(f"empty range in {spec!r}")
    return [mapping_from_string(spec[:m.start()] + f"{m.group(1)}={v}" + spec[m.end():], n)
            for v in range(lo, hi + 1)]


def evaluate(spec: MappingSpec, x) -> np.ndarray:
    """Apply the mapping to points (last axis = coordinates)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.n:
        raise ValueError(f"point dimension {x.shape[-1]} does not match mapping dimension {spec.n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("mapping evaluated outside its domain")
    k = spec.kind
    if k == "identity":
        return x.copy()
    if k == "compose":
        y = x
        for part in reversed(spec.parts):
            y = evaluate(part, y)
        return y
    if k == "g1":
        y = x.copy()
        u, v = x[..., 0], x[..., 1]
        rr = u * u + v * v
        on_axis = rr == 0
        theta = np.log(np.where(on_axis, 1.0, rr))
        c, s = np.cos(theta), np.sin(theta)
        y[..., 0] = np.where(on_axis, u, u * c - v * s)
        y[..., 1] = np.where(on_axis, v, u * s + v * c)
        return y
    if k == "g2":
        m = spec.params["m"]
        y = x.copy()
        u, v = x[..., -2], x[..., -1]
        r = np.hypot(u, v)
        phi = np.mod(np.arctan2(v, u), 2.0 * np.pi)
        on_axis = r == 0
        y[..., -2] = np.where(on_axis, u, r * np.cos(m * phi))
        y[..., -1] = np.where(on_axis, v, r * np.sin(m * phi))
        return y
    if k == "exp":
        m = spec.params["m"]
        e = np.exp(m * x[..., 0])
        return np.stack([e * np.cos(m * x[..., 1]), e * np.sin(m * x[..., 1])], axis=-1)
    if k == "radialpow":
        a = spec.params["alpha"]
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0, r ** (a - 1.0), 0.0)
        if a < 1 and np.any(r == 0):
            scale = np.where(r > 0, scale, 0.0)
        return x * scale
    raise AssertionError(k)


def _analytic_derivative(spec: MappingSpec, x: np.ndarray) -> np.ndarray:
    n = spec.n
    k = spec.kind
    if k == "identity":
        return np.eye(n)
    if k == "compose":
        D = np.eye(n)
        y = x
        for part in reversed(spec.parts):
            D = derivative_matrix(part, y) @ D
            y = evaluate(part, y)
        return D
    if k == "g1":
        u = x[:2]
        rr = float(u @ u)
        if rr == 0:
            raise ValueError("g1 is not differentiable on its axis")
        th = math.log(rr)
        R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        Ju = np.array([-u[1], u[0]])
        D = np.eye(n)
        D[:2, :2] = R @ (np.eye(2) + np.outer(Ju, 2.0 * u / rr))
        return D
    if k == "g2":
        m = spec.params["m"]
        r = math.hypot(x[-2], x[-1])
        if r == 0:
            raise ValueError("g2 is not differentiable on its axis")
        phi = math.atan2(x[-1], x[-2])
        er = np.array([math.cos(phi), math.sin(phi)])
        ep = np.array([-math.sin(phi), math.cos(phi)])
        er_m = np.array([math.cos(m * phi), math.sin(m * phi)])
        ep_m = np.array([-math.sin(m * phi), math.cos(m * phi)])
        D = np.eye(n)
        D[-2:, -2:] = np.outer(er_m, er) + m * np.outer(ep_m, ep)
        return D
    if k == "exp":
        m = spec.params["m"]
        e = math.exp(m * x[0])
        c, s = math.cos(m * x[1]), math.sin(m * x[1])
        return m * e * np.array([[c, -s], [s, c]])
    if k == "radialpow":
        a = spec.params["alpha"]
        r = float(np.linalg.norm(x))
        if r == 0:
            raise ValueError("radial power map is not differentiable at the origin")
        xh = x / r
        return r ** (a - 1.0) * (np.eye(n) + (a - 1.0) * np.outer(xh, xh))
    raise AssertionError(k)


def derivative_matrix(spec: MappingSpec, x, scheme: str = "analytic", h: float | None = None) -> np.ndarray:
    """The n x n derivative at x; ``central_fd`` uses central differences."""
    x = np.asarray(x, dtype=float).ravel()
    if scheme == "analytic" and (spec.kind in ANALYTIC or spec.kind == "compose"):
        return _analytic_derivative(spec, x)
    if scheme not in ("analytic", "central_fd"):
        raise ValueError(f"unknown derivative scheme {scheme!r}")
    if h is None:
        h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    steps = np.eye(spec.n) * h
    plus = evaluate(spec, x + steps)
    minus = evaluate(spec, x - steps)
    return ((plus - minus) / (2.0 * h)).T


@dataclass(frozen=True)
class DilatationSample:
    point: tuple[float, ...]
    jacobian: float
    min_stretch: float
    K_Ip: float


def min_stretch(D: np.ndarray) -> float:
    """Smallest singular value, from the symmetric eigenproblem of D^T D."""
    w = np.linalg.eigvalsh(D.T @ D)
    # eigenvalues carry an absolute error of order eps * |D|^2; below that, l is zero
    if w[0] <= 8 * D.shape[0] * np.finfo(float).eps * max(w[-1], 0.0):
        return 0.0
    return float(math.sqrt(w[0]))


def dilatation(spec: MappingSpec, x, p: float, scheme: str = "analytic") -> DilatationSample:
    """J(x, f), l(f'(x)) and K_{I,p} = J / l**p (infinite when l = 0 and f'(x) != 0)."""
    x = np.asarray(x, dtype=float).ravel()
    D = derivative_matrix(spec, x, scheme)
    J = float(np.linalg.det(D))
    l = min_stretch(D)
    if l > 0:
        K = J / l**p
    elif not np.any(D):
        K = 1.0  # f'(x) = 0: the usual convention
    else:
        K = math.inf
    return DilatationSample(tuple(x.tolist()), J, l, K)


@dataclass
class VerificationReport:
    lhs: float
    rhs: float
    margin: float
    verdict: str
    solver_certificate: dict
    quadrature_error: float
    tolerance: float
    eta_integral: float
    eta_kind: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def eta_family(kind: str, ring: SphericalRing, p: float, Q: ScalarField | None = None) -> PsiFamily:
    """Normalised radial weights: 'const', 'loglog' (needs r2 < 1) or 'qmean' (needs Q)."""
    n = ring.n
    if kind == "const":
        return PsiFamily.constant(1.0 / (ring.r2 - ring.r1))
    if kind == "loglog":
        base = PsiFamily.loglog(n, p)
    elif kind == "qmean":
        if Q is None:
            raise ValueError("the qmean weight needs a field")
        x0 = ring.center_array()
        base = PsiFamily.qmean(n, p, lambda t: sphere_means(Q, x0, t))
    else:
        raise ValueError(f"unknown eta kind {kind!r}")
    I = I_integral(base, ring.r1, ring.r2)
    if not I.valid:
        raise ValueError(f"eta of kind {kind!r} cannot be normalised on this ring (I = {I.value})")
    return PsiFamily(kind, lambda t, f=base, c=I.value: f(t) / c, base.support, dict(base.params))


def verify_ring_pQ(spec: MappingSpec, ring: SphericalRing, p: float, Q: ScalarField, eta: PsiFamily,
                   k_curves: int = 256, resolution: int = 128, refine: int = 8,
                   mode: str = "radial", seed: int = 0) -> VerificationReport:
    """Compare M_p(f(Gamma(S1, S2, A))) against the weighted ring integral for one eta."""
    if ring.n != spec.n:
        raise ValueError("ring and mapping dimensions differ")
    eta_int = integrate(lambda t: eta(t), ring.r1, ring.r2, rtol=1e-10).value
    if eta_int < 1.0 - 1e-9:
        raise ValueError(f"eta is not admissible: its integral over (r1, r2) is {eta_int:.6g} < 1")
    family = sample_ring_family(ring, k_curves, mode=mode, seed=seed)
    image = image_family(spec, family, refine=refine)
    res = discrete_modulus(image, p, grid=DensityGrid.covering(image, resolution))
    cert = res.certificate.to_dict()
    rhs = ring_integral(Q, eta, ring, p)
    solver_tol = res.value * max(res.certificate.relative_gap, 0.0) + res.certificate.max_violation * res.value
    tol = solver_tol + rhs.error
    margin = rhs.value - res.value
    notes = ["a single eta is tested: 'satisfied' supports, 'violated' refutes, the inequality for all eta"]
    if not (res.certificate.converged and rhs.converged):
        verdict = "inconclusive"
        notes.append("solver or quadrature did not converge")
    elif margin >= -tol:
        verdict = "satisfied"
    else:
        verdict = "violated"
    return VerificationReport(res.value, rhs.value, margin, verdict, cert, rhs.error, tol,
                              eta_int, eta.kind, notes)


@dataclass
class ProbeTable:
    maps: list[str]
    deltas: list[float]
    oscillation: np.ndarray  # shape (maps, deltas)
    verdict: str
    growth: list[float]
    decay_slope: float
    metric: str

    def rows(self):
        for i, name in enumerate(self.maps):
            for j, d in enumerate(self.deltas):
                yield name, d, float(self.oscillation[i, j])

    def column(self, delta: float) -> np.ndarray:
        j = int(np.argmin(np.abs(np.asarray(self.deltas) - delta)))
        return self.oscillation[:, j]


PROBE_GROWTH_LIMIT = 10.0


def _probe_points(n: int, count: int) -> np.ndarray:
    if n == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    nodes, _ = sphere_rule(n, max(8, int(math.sqrt(count / 2)) + 1))
    return nodes


def equicontinuity_probe(family: list[MappingSpec], b, deltas, metric: str = "euclidean",
                         samples: int = 512) -> ProbeTable:
    """sup over |x - b| = delta of d(f(x), f(b)) for every map and radius.

    Evidence is 'violated' when some radius shows the oscillation growing by
    more than PROBE_GROWTH_LIMIT along the family, 'equicontinuous' when the
    family-wide sup decays with delta (log-log slope >= 0.5), else inconclusive.
    """
    if metric not in ("euclidean", "chordal"):
        raise ValueError(f"unknown metric {metric!r}")
    if samples < 256:
        raise ValueError("use at least 256 sphere samples")
    b = np.asarray(b, dtype=float).ravel()
    deltas = [float(d) for d in deltas]
    dirs = _probe_points(b.size, samples)
    osc = np.zeros((len(family), len(deltas)))
    for i, f in enumerate(family):
        fb = evaluate(f, b[None, :])[0]
        for j, d in enumerate(deltas):
            fx = evaluate(f, b + d * dirs)
            if metric == "euclidean":
                dist = np.linalg.norm(fx - fb, axis=1)
            else:
                dist = chordal_distance_array(fx, fb[None, :])
            osc[i, j] = float(dist.max())
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = [float(osc[-1, j] / osc[0, j]) if osc[0, j] > 0 else (math.inf if osc[-1, j] > 0 else 1.0)
                  for j in range(len(deltas))]
    column_sup = osc.max(axis=0)
    slope = log_slope(np.asarray(deltas), column_sup) if len(deltas) > 1 else 0.0
    if len(family) > 1 and max(growth) > PROBE_GROWTH_LIMIT:
        verdict = "violated evidence"
    elif len(deltas) > 1 and slope >= 0.5:
        verdict = "equicontinuous evidence"
    else:
        verdict = "inconclusive"
    return ProbeTable([f.name for f in family], deltas, osc, verdict, growth, slope, metric)


@dataclass
class DistortionComparison:
    dists: list[float]
    distortion: list[float]
    bound_shape: list[float]
    fitted_C: float
    holds_with_unit_C: bool
    bound: str

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def distortion_vs_bound(spec: MappingSpec, x0, p: float, Q: ScalarField, bound: str, dist_list,
                        C: float = 1.0, delta0: float | None = None, image_radius: float | None = None,
                        samples: int = 256) -> DistortionComparison:
    """Tabulate sup |f(x) - f(x0)| on spheres against a distortion bound shape.

    The fitted constant is the smallest C for which the bound holds over the
    sample; it is an empirical quantity, not the constant of the bound.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    dirs = _probe_points(n, samples)
    f0 = evaluate(spec, x0[None, :])[0]
    dist_list = [float(d) for d in dist_list]
    sup = []
    for d in dist_list:
        fx = evaluate(spec, x0 + d * dirs)
        sup.append(float(np.linalg.norm(fx - f0, axis=1).max()))
    if image_radius is not None:
        probe = evaluate(spec, x0 + max(dist_list) * dirs)
        if np.linalg.norm(probe, axis=1).max() > image_radius:
            raise ValueError("mapping image leaves B(0, r) on the sampled region")
    shape = []
    for d in dist_list:
        if bound == "fmo":
            shape.append(distortion_bound_fmo(d, 1.0, n, p))
        elif bound == "divergent":
            if delta0 is None:
                raise ValueError("divergent bound needs delta0")
            g = lambda t: ediv(1.0, emul(t, epow(sphere_means(Q, x0, t), 1.0 / (n - 1))))
            F = integrate(g, d, delta0, rtol=1e-8, geometric=8).value
            shape.append(distortion_bound_divergent(d, delta0, F, 1.0, n))
        else:
            raise ValueError(f"unknown bound {bound!r}")
    ratios = [s / b if b > 0 else math.inf for s, b in zip(sup, shape)]
    fitted = max(ratios)
    return DistortionComparison(dist_list, sup, shape, fitted, fitted <= C, bound)
