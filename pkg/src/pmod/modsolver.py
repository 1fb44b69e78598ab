"""Discrete p-modulus of finite polyline families on a regular density grid.

The density lives on cell centres of a box grid and is read off by
multilinear interpolation.  A curve's line integral is a linear functional
of the cell values (composite midpoint rule), so the discrete problem is

    minimise  sum_c vol * rho_c**p   subject to   A rho >= 1,  rho >= 0,

with A nonnegative.  We solve it by dual coordinate ascent: each step is the
exact Bregman projection onto one curve's constraint (a monotone 1-D root
find on the curve's interpolation stencil), constraints are visited
most-violated first, and every sweep yields both an admissible upper bound
(rho rescaled by its smallest line integral) and a dual lower bound.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numba import njit

from .geometry import SphericalRing

MIN_RESOLUTION = 8
SOLVER_NOTE = (
    "value is an admissible upper bound for the discrete problem on this grid; "
    "the gap to the continuum modulus is a discretisation effect (5% oracle policy)"
)


@dataclass(frozen=True)
class Polyline:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.shape[0] < 2:
            raise ValueError("a polyline needs at least two vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polyline vertices must be finite")
        object.__setattr__(self, "vertices", v)

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum())


@dataclass
class CurveFamily:
    curves: list[Polyline] = field(default_factory=list)
    label: str = ""

    def __len__(self):
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    @property
    def n(self) -> int | None:
        return self.curves[0].n if self.curves else None

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        allv = np.vstack([c.vertices for c in self.curves])
        return allv.min(axis=0), allv.max(axis=0)

    def union(self, other: "CurveFamily") -> "CurveFamily":
        return CurveFamily(self.curves + other.curves, label=f"{self.label}+{other.label}")

    def subset(self, indices) -> "CurveFamily":
        return CurveFamily([self.curves[i] for i in indices], label=f"{self.label}[sub]")

    def scaled(self, lam: float) -> "CurveFamily":
        return CurveFamily([Polyline(c.vertices * lam) for c in self.curves], label=f"{lam}*{self.label}")

    def to_json(self) -> str:
        return json.dumps([c.vertices.tolist() for c in self.curves])

    @classmethod
    def from_json(cls, text: str, label: str = "") -> "CurveFamily":
        data = json.loads(text)
        if isinstance(data, dict):
            label = data.get("label", label)
            data = data["curves"]
        return cls([Polyline(np.array(v, dtype=float)) for v in data], label=label)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "CurveFamily":
        return cls.from_json(Path(path).read_text(), label=Path(path).stem)


_GRID_MAGIC = b"PMODGRD1"


@dataclass
class DensityGrid:
    """Nonnegative cell values on the box [lo, hi] split into ``shape`` cells."""

    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != self.lo.size:
            raise ValueError("values must have one axis per dimension")
        if min(self.values.shape) < MIN_RESOLUTION:
            raise ValueError(f"resolution must be at least {MIN_RESOLUTION} per axis")
        if np.any(self.hi <= self.lo):
            raise ValueError("empty grid box")
        if np.any(self.values < 0):
            raise ValueError("density must be nonnegative")

    @classmethod
    def zeros(cls, lo, hi, resolution) -> "DensityGrid":
        lo = np.asarray(lo, dtype=float)
        shape = _shape(resolution, lo.size)
        return cls(lo, hi, np.zeros(shape))

    @classmethod
    def covering(cls, family: CurveFamily, resolution, margin: float = 0.0) -> "DensityGrid":
        """Grid on the family's bounding box, padded by ``margin`` (relative)."""
        lo, hi = family.bounds()
        span = hi - lo
        pad = margin * span.max() + 1e-9 * max(1.0, np.abs(hi).max(), np.abs(lo).max())
        span_floor = 1e-6 * max(span.max(), 1.0)
        lo = lo - pad - np.where(span < span_floor, span_floor, 0.0)
        hi = hi + pad + np.where(span < span_floor, span_floor, 0.0)
        return cls.zeros(lo, hi, resolution)

    @property
    def n(self) -> int:
        return self.lo.size

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def cell_size(self) -> np.ndarray:
        return (self.hi - self.lo) / np.array(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.cell_size))

    def with_values(self, values) -> "DensityGrid":
        return DensityGrid(self.lo.copy(), self.hi.copy(), np.asarray(values, dtype=float).reshape(self.shape))

    def energy(self, p: float) -> float:
        return float(np.sum(self.values**p) * self.cell_volume)

    def stencil(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Flat cell indices and multilinear weights, each of shape (m, 2**n)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tol = 1e-9 * np.maximum(1.0, np.abs(self.hi - self.lo))
        if np.any(pts < self.lo - tol) or np.any(pts > self.hi + tol):
            raise ValueError("curve leaves the density grid box")
        shape = np.array(self.shape)
        # cell-centre lattice coordinates, clamped so boundary strips copy the edge value
        u = (pts - self.lo) / self.cell_size - 0.5
        u = np.clip(u, 0.0, shape - 1.0)
        base = np.minimum(np.floor(u).astype(np.int64), np.maximum(shape - 2, 0))
        frac = u - base
        n = self.n
        corners = np.array(list(np.ndindex(*(2,) * n)), dtype=np.int64)
        idx = np.zeros((pts.shape[0], corners.shape[0]), dtype=np.int64)
        wts = np.ones((pts.shape[0], corners.shape[0]))
        strides = np.array([int(np.prod(shape[d + 1:])) for d in range(n)], dtype=np.int64)
        for k, corner in enumerate(corners):
            cell = base + corner
            idx[:, k] = cell @ strides
            wts[:, k] = np.prod(np.where(corner == 1, frac, 1.0 - frac), axis=1)
        return idx, wts

    def __call__(self, points) -> np.ndarray:
        idx, wts = self.stencil(points)
        return np.sum(self.values.ravel()[idx] * wts, axis=1)

    def to_bytes(self) -> bytes:
        head = _GRID_MAGIC + struct.pack("<I", self.n) + struct.pack(f"<{self.n}I", *self.shape)
        head += struct.pack(f"<{2 * self.n}d", *self.lo, *self.hi)
        return head + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "DensityGrid":
        if blob[:8] != _GRID_MAGIC:
            raise ValueError("not a density grid file")
        (n,) = struct.unpack_from("<I", blob, 8)
        shape = struct.unpack_from(f"<{n}I", blob, 12)
        off = 12 + 4 * n
        box = struct.unpack_from(f"<{2 * n}d", blob, off)
        off += 16 * n
        vals = np.frombuffer(blob, dtype="<f8", offset=off).reshape(shape)
        return cls(np.array(box[:n]), np.array(box[n:]), vals.astype(float))

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "DensityGrid":
        return cls.from_bytes(Path(path).read_bytes())


def _shape(resolution, n: int) -> tuple[int, ...]:
    if np.isscalar(resolution):
        shape = (int(resolution),) * n
    else:
        shape = tuple(int(r) for r in resolution)
    if len(shape) != n:
        raise ValueError("resolution does not match dimension")
    if min(shape) < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION} per axis")
    return shape


def _quadrature_nodes(grid: DensityGrid, gamma: Polyline) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints and lengths of sub-segments no longer than half a cell edge."""
    v = gamma.vertices
    seg = np.diff(v, axis=0)
    seglen = np.linalg.norm(seg, axis=1)
    hmax = 0.5 * grid.cell_size.min()
    pieces = np.maximum(1, np.ceil(seglen / hmax).astype(np.int64))
    seg_id = np.repeat(np.arange(len(seglen)), pieces)
    offs = np.concatenate([np.arange(k) for k in pieces])
    t = (offs + 0.5) / pieces[seg_id]
    mids = v[seg_id] + t[:, None] * seg[seg_id]
    lens = seglen[seg_id] / pieces[seg_id]
    return mids, lens


def line_integral(rho: DensityGrid, gamma: Polyline) -> float:
    """Integral of the interpolated density along a polyline."""
    if gamma.n != rho.n:
        raise ValueError("curve and grid dimensions differ")
    mids, lens = _quadrature_nodes(rho, gamma)
    return float(np.dot(rho(mids), lens))


def constraint_matrix(grid: DensityGrid, family: CurveFamily) -> sp.csr_matrix:
    """Row j holds the line-integral functional of curve j over the cell values."""
    rows, cols, vals = [], [], []
    for j, gamma in enumerate(family.curves):
        if gamma.n != grid.n:
            raise ValueError("curve and grid dimensions differ")
        mids, lens = _quadrature_nodes(grid, gamma)
        idx, wts = grid.stencil(mids)
        rows.append(np.full(idx.size, j, dtype=np.int64))
        cols.append(idx.ravel())
        vals.append((wts * lens[:, None]).ravel())
    size = int(np.prod(grid.shape))
    if not rows:
        return sp.csr_matrix((0, size))
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(family), size)).tocsr()
    A.sum_duplicates()
    A.eliminate_zeros()
    return A


@njit(cache=True)
def _row_value(lo, hi, indices, data, s, t, inv_pw, expo):
    v = 0.0
    dv = 0.0
    for q in range(lo, hi):
        a = data[q]
        z = s[indices[q]] + t * a
        if z <= 0.0:
            continue
        r = (z * inv_pw) ** expo
        v += a * r
        dv += a * a * expo * r / z
    return v, dv


@njit(cache=True)
def _project(j, indptr, indices, data, lam, s, inv_pw, expo):
    """Exact Bregman projection onto constraint j; returns the dual step."""
    lo = indptr[j]
    hi = indptr[j + 1]
    tmin = -lam[j]
    vmin, _ = _row_value(lo, hi, indices, data, s, tmin, inv_pw, expo)
    if vmin >= 1.0:
        t = tmin
    else:
        # closed form for an isolated stencil gives the starting bracket
        acc = 0.0
        for q in range(lo, hi):
            acc += data[q] ** (1.0 + expo)
        t_hi = (1.0 / (acc * inv_pw**expo)) ** (1.0 / expo) if acc > 0 else 1.0
        t_hi = max(t_hi, tmin + 1e-300)
        v_hi, _ = _row_value(lo, hi, indices, data, s, t_hi, inv_pw, expo)
        while v_hi < 1.0:
            t_hi = tmin + 2.0 * (t_hi - tmin)
            v_hi, _ = _row_value(lo, hi, indices, data, s, t_hi, inv_pw, expo)
        t_lo = tmin
        t = t_hi
        for _ in range(100):
            v, dv = _row_value(lo, hi, indices, data, s, t, inv_pw, expo)
            if v >= 1.0:
                t_hi = t
            else:
                t_lo = t
            if abs(v - 1.0) <= 1e-14 or (t_hi - t_lo) <= 1e-15 * max(1.0, abs(t_hi)):
                break
            step = t - (v - 1.0) / dv if dv > 0 else 0.5 * (t_lo + t_hi)
            if not (t_lo < step < t_hi):
                step = 0.5 * (t_lo + t_hi)
            t = step
    lam[j] += t
    for q in range(lo, hi):
        z = s[indices[q]] + t * data[q]
        s[indices[q]] = z if z > 0.0 else 0.0
    return t


@njit(cache=True)
def _line_values(indptr, indices, data, rho):
    k = indptr.size - 1
    out = np.zeros(k)
    for j in range(k):
        acc = 0.0
        for q in range(indptr[j], indptr[j + 1]):
            acc += data[q] * rho[indices[q]]
        out[j] = acc
    return out


@njit(cache=True)
def _sweep(indptr, indices, data, lam, s, inv_pw, expo, tol):
    rho = (s * inv_pw) ** expo
    vals = _line_values(indptr, indices, data, rho)
    k = vals.size
    score = np.zeros(k)
    for j in range(k):
        r = 1.0 - vals[j]
        if r > tol or (r < -tol and lam[j] > 0.0):
            score[j] = abs(r)
    order = np.argsort(-score, kind="mergesort")
    for j in order:
        if score[j] == 0.0:
            break
        _project(j, indptr, indices, data, lam, s, inv_pw, expo)
    return score.max()


@dataclass
class ModulusCertificate:
    converged: bool
    iterations: int
    max_violation: float
    min_line_integral: float
    admissible_value: float
    dual_lower_bound: float
    relative_gap: float
    note: str = SOLVER_NOTE

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ModulusResult:
    value: float
    rho_star: DensityGrid | None
    certificate: ModulusCertificate


def _dual_value(lam, s, rho, p) -> float:
    return float(lam.sum() - (p - 1.0) / p * np.dot(s, rho))


def discrete_modulus(
    family: CurveFamily,
    p: float,
    grid: DensityGrid | None = None,
    resolution=128,
    tol: float = 1e-4,
    rtol: float = 1e-6,
    window: int = 50,
    max_iter: int = 100_000,
) -> ModulusResult:
    """Approximate M_p of a finite family on a grid density.

    ``grid`` fixes the box and resolution (its values are ignored); when it is
    omitted the family's bounding box is used with ``resolution`` cells per
    axis.  ``max_iter`` counts sweeps over the violated constraints.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if len(family) == 0:
        cert = ModulusCertificate(True, 0, 0.0, math.inf, 0.0, 0.0, 0.0)
        return ModulusResult(0.0, grid, cert)
    for gamma in family:
        if gamma.length <= 0:
            raise ValueError("degenerate curve of zero length: no admissible density")
    if grid is None:
        grid = DensityGrid.covering(family, resolution)
    A = constraint_matrix(grid, family)
    indptr = A.indptr.astype(np.int64)
    indices = A.indices.astype(np.int64)
    data = A.data.astype(float)
    w = grid.cell_volume
    inv_pw = 1.0 / (p * w)
    expo = 1.0 / (p - 1.0)
    lam = np.zeros(len(family))
    s = np.zeros(A.shape[1])

    history: list[float] = []
    best = (math.inf, None, 0.0)
    converged = False
    it = 0
    violation = 1.0
    for it in range(1, max_iter + 1):
        _sweep(indptr, indices, data, lam, s, inv_pw, expo, 0.1 * tol)
        rho = (s * inv_pw) ** expo
        vals = A @ rho
        vmin = float(vals.min())
        violation = max(0.0, 1.0 - vmin)
        admissible = w * float(np.sum(rho**p)) / vmin**p if vmin > 0 else math.inf
        if admissible < best[0]:
            best = (admissible, rho / vmin, _dual_value(lam, s, rho, p))
        history.append(admissible)
        dual = max(best[2], _dual_value(lam, s, rho, p))
        best = (best[0], best[1], dual)
        gap = (best[0] - dual) / best[0] if np.isfinite(best[0]) and best[0] > 0 else math.inf
        stalled = len(history) > window and abs(history[-1] - history[-1 - window]) <= rtol * history[-1]
        if violation <= tol and (gap <= rtol or stalled):
            converged = True
            break

    value, rho_best, dual = best
    rho_grid = grid.with_values(rho_best) if rho_best is not None else None
    gap = (value - dual) / value if value > 0 and np.isfinite(value) else math.inf
    vmin = float((A @ rho_best).min()) if rho_best is not None else 0.0
    cert = ModulusCertificate(converged, it, violation, vmin, value, dual, gap)
    return ModulusResult(value, rho_grid, cert)


def _sphere_directions(n: int, k: int) -> np.ndarray:
    """Quasi-uniform unit vectors: equal angles in the plane, a Fibonacci lattice in 3-D."""
    j = np.arange(k) + 0.5
    if n == 2:
        ang = 2.0 * np.pi * j / k
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        z = 1.0 - 2.0 * j / k
        phi = np.pi * (1.0 + 5**0.5) * j
        rad = np.sqrt(1.0 - z * z)
        return np.column_stack([rad * np.cos(phi), rad * np.sin(phi), z])
    raise ValueError("curve families are supported for n <= 3 only")


def sample_ring_family(
    ring: SphericalRing,
    k: int,
    mode: str = "radial",
    seed: int = 0,
    vertices: int = 2,
    amplitude: float = 0.25,
) -> CurveFamily:
    """k curves joining the inner and outer boundary spheres of ``ring``.

    ``random_joining`` wiggles each radial curve tangentially by at most
    ``amplitude`` times the angular spacing of the family, keeping the end
    points on the two spheres.
    """
    if k < 1:
        raise ValueError("k must be positive")
    n = ring.n
    c = ring.center_array()
    dirs = _sphere_directions(n, k)
    if mode == "radial":
        radii = np.linspace(ring.r1, ring.r2, max(vertices, 2))
        curves = [Polyline(c + radii[:, None] * d) for d in dirs]
        return CurveFamily(curves, label=f"radial{k}")
    if mode != "random_joining":
        raise ValueError(f"unknown family mode {mode!r}")
    rng = np.random.default_rng(seed)
    m = max(vertices, 16)
    radii = np.linspace(ring.r1, ring.r2, m)
    spacing = (2.0 * np.pi / k) if n == 2 else np.sqrt(4.0 * np.pi / k)
    curves = []
    for d in dirs:
        noise = rng.uniform(-1.0, 1.0, size=(m, n)) * amplitude * spacing
        noise -= (noise @ d)[:, None] * d  # tangential only
        noise[0] = noise[-1] = 0.0
        u = d + noise
        u /= np.linalg.norm(u, axis=1)[:, None]
        curves.append(Polyline(c + radii[:, None] * u))
    return CurveFamily(curves, label=f"random{k}")


def refine_polyline(gamma: Polyline, refine: int) -> Polyline:
    """Insert ``refine`` equally spaced points inside every segment."""
    if refine <= 0:
        return gamma
    v = gamma.vertices
    t = np.arange(refine + 1) / (refine + 1)
    seg = np.diff(v, axis=0)
    pts = (v[:-1, None, :] + t[None, :, None] * seg[:, None, :]).reshape(-1, v.shape[1])
    return Polyline(np.vstack([pts, v[-1:]]))


def image_family(mapping, family: CurveFamily, refine: int = 8) -> CurveFamily:
    """Refine each polyline, then push its vertices through ``mapping``."""
    curves = []
    for gamma in family:
        fine = refine_polyline(gamma, refine)
        curves.append(Polyline(mapping.evaluate(fine.vertices)))
    return CurveFamily(curves, label=f"{getattr(mapping, 'name', 'map')}({family.label})")
