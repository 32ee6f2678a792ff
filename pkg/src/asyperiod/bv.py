"""Bounded variation in two variables, computed along curves.

``cvar(f, gamma, sigma)`` is the supremum of ``sum |f(gamma(t_{j+1})) -
f(gamma(t_j))|`` over increasing parameters with ``gamma(t_j)`` in
``sigma``.  For a polyline and a field whose restriction to every segment
is piecewise monotone with known turning points, the supremum is attained
on a finite node set: the endpoints of every piece of ``gamma`` inside
``sigma`` plus the turning points.  That makes cvar exact for
piecewise-affine fields, their products and cell-constant fields.  Smooth
fields fall back to adaptive refinement, which gives a lower bound.

``vf(gamma, c)`` counts the connected components of ``gamma^{-1}(c)`` for
a convex closed curve ``c``; each component starts with one entry point.
``Var`` is only ever estimated from below over a finite curve family.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError, DegenerateGeometryError
from .transfer import DensityVector, Grid, UlamOperator, apply

__all__ = [
    "Polyline",
    "ParametricCurve",
    "Box",
    "ConvexPolygon",
    "RegionUnion",
    "PiecewiseAffineField",
    "ProductField",
    "CellField",
    "SmoothField",
    "CircleProbe",
    "PolygonProbe",
    "EntryCount",
    "VfEstimate",
    "cvar",
    "entry_points",
    "vf_estimate",
    "vf_upper_bound",
    "var_lower_bound",
    "axis_segments",
    "random_polylines",
    "circle_curves",
    "default_family",
    "default_probes",
    "PropertyReport",
    "property_suite",
    "ContractionReport",
    "contraction_probe",
]

_EPS = 1e-12
PARAM_TOL = 1e-9


# --------------------------------------------------------------------- curves

@dataclass(frozen=True)
class Polyline:
    """Piecewise-linear curve through ``vertices``, uniformly parametrized.

    Segment ``i`` covers ``t`` in ``[i/m, (i+1)/m]``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise InvalidInputError("polyline needs at least 2 vertices of shape (n, 2)")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("polyline vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    kind = "polyline"

    @property
    def n_segments(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def closed(self) -> bool:
        return bool(np.allclose(self.vertices[0], self.vertices[-1]))

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Start points ``P`` and direction vectors ``D`` per segment."""
        v = self.vertices
        return v[:-1], v[1:] - v[:-1]

    def __call__(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        m = self.n_segments
        i = np.minimum((t * m).astype(int), m - 1)
        s = t * m - i
        P, D = self.segments()
        return P[i] + s[..., None] * D[i]

    def map(self, fn: Callable) -> "Polyline":
        """Image polyline under a map that is affine on each segment."""
        x, y = fn(self.vertices[:, 0], self.vertices[:, 1])
        return Polyline(np.column_stack([x, y]))

    def split(self, k: int) -> tuple["Polyline", "Polyline"]:
        """The two subcurves meeting at vertex ``k`` (0 < k < n_vertices - 1)."""
        if not 0 < k < self.vertices.shape[0] - 1:
            raise InvalidInputError("split vertex must be interior")
        return Polyline(self.vertices[:k + 1]), Polyline(self.vertices[k:])

    def length(self) -> float:
        _, D = self.segments()
        return float(np.hypot(D[:, 0], D[:, 1]).sum())

    def l1_length(self) -> float:
        _, D = self.segments()
        return float(np.abs(D).sum())


@dataclass(frozen=True)
class ParametricCurve:
    """Continuous curve given by ``func(t) -> (x, y)`` on ``[0, 1]``.

    ``breaks`` lists the parameters where the derivative may jump.
    """

    func: Callable
    breaks: tuple = ()

    kind = "parametric"

    def to_polyline(self, n: int) -> Polyline:
        t = np.union1d(np.linspace(0.0, 1.0, n + 1), np.asarray(self.breaks, float))
        x, y = self.func(t)
        return Polyline(np.column_stack([x, y]))


# -------------------------------------------------------------------- regions

def _hull_lines(vertices: np.ndarray):
    """Outward normals and offsets of a counter-clockwise convex polygon."""
    e = np.roll(vertices, -1, axis=0) - vertices
    normals = np.column_stack([e[:, 1], -e[:, 0]])
    offsets = np.einsum("ij,ij->i", normals, vertices)
    return normals, offsets


def _convexity_sign(v: np.ndarray) -> int:
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    scale = np.abs(e).max() ** 2
    if np.all(cross > _EPS * scale):
        return 1
    if np.all(cross < -_EPS * scale):
        return -1
    return 0


class _ConvexRegion:
    normals: np.ndarray
    offsets: np.ndarray

    def contains(self, x, y, tol: float = 1e-12):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        lhs = np.multiply.outer(x, self.normals[:, 0]) + np.multiply.outer(y, self.normals[:, 1])
        scale = 1.0 + np.abs(self.offsets)
        return np.all(lhs <= self.offsets + tol * scale, axis=-1)

    def clip(self, P: np.ndarray, D: np.ndarray):
        """Cyrus-Beck clip of segments ``P + s D`` to the closed region.

        Returns ``(s0, s1, ok)`` arrays over segments.
        """
        n, c = self.normals, self.offsets
        nP = P @ n.T
        nD = D @ n.T
        slack = c[None, :] - nP + _EPS * (1.0 + np.abs(c))[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = slack / nD
        up = np.where(nD > 0, ratio, np.inf)
        lo = np.where(nD < 0, ratio, -np.inf)
        parallel_out = (nD == 0) & (slack < 0)
        s0 = np.maximum(0.0, lo.max(axis=1))
        s1 = np.minimum(1.0, up.min(axis=1))
        ok = (s0 <= s1) & ~parallel_out.any(axis=1)
        return np.clip(s0, 0, 1), np.clip(s1, 0, 1), ok

    def intervals(self, P, D):
        s0, s1, ok = self.clip(P, D)
        seg = np.flatnonzero(ok)
        return seg, s0[ok], s1[ok]


@dataclass(frozen=True)
class Box(_ConvexRegion):
    """Closed rectangle ``[x0, x1] x [y0, y1]``."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise InvalidInputError("box must have positive width and height")
        n = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        c = np.array([self.x1, -self.x0, self.y1, -self.y0])
        object.__setattr__(self, "normals", n)
        object.__setattr__(self, "offsets", c)

    @property
    def bbox(self):
        return (self.x0, self.x1, self.y0, self.y1)

    @property
    def vertices(self) -> np.ndarray:
        return np.array([[self.x0, self.y0], [self.x1, self.y0],
                         [self.x1, self.y1], [self.x0, self.y1]])

    def map(self, M, t) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices @ np.asarray(M, float).T + np.asarray(t, float))


@dataclass(frozen=True)
class ConvexPolygon(_ConvexRegion):
    """Closed convex polygon; vertex order may be either orientation."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidInputError("polygon needs at least 3 vertices")
        sign = _convexity_sign(v)
        if sign == 0:
            raise DegenerateGeometryError("polygon is not strictly convex")
        if sign < 0:
            v = v[::-1].copy()
        v.setflags(write=False)
        n, c = _hull_lines(v)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "normals", n)
        object.__setattr__(self, "offsets", c)

    @property
    def bbox(self):
        v = self.vertices
        return (v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())

    def map(self, M, t) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices @ np.asarray(M, float).T + np.asarray(t, float))


@dataclass(frozen=True)
class RegionUnion:
    """Union of convex pieces; parameter intervals are merged."""

    parts: tuple

    def contains(self, x, y):
        out = self.parts[0].contains(x, y)
        for p in self.parts[1:]:
            out = out | p.contains(x, y)
        return out

    @property
    def bbox(self):
        b = np.array([p.bbox for p in self.parts])
        return (b[:, 0].min(), b[:, 1].max(), b[:, 2].min(), b[:, 3].max())

    def intervals(self, P, D):
        segs, lo, hi = [], [], []
        for part in self.parts:
            s, a, b = part.intervals(P, D)
            segs.append(s)
            lo.append(a)
            hi.append(b)
        seg = np.concatenate(segs)
        lo = np.concatenate(lo)
        hi = np.concatenate(hi)
        order = np.lexsort((lo, seg))
        seg, lo, hi = seg[order], lo[order], hi[order]
        out_s, out_a, out_b = [], [], []
        for s, a, b in zip(seg, lo, hi):
            if out_s and out_s[-1] == s and a <= out_b[-1] + _EPS:
                out_b[-1] = max(out_b[-1], b)
            else:
                out_s.append(s)
                out_a.append(a)
                out_b.append(b)
        return (np.array(out_s, dtype=int), np.array(out_a, dtype=float),
                np.array(out_b, dtype=float))


# --------------------------------------------------------------------- fields

@dataclass(frozen=True)
class PiecewiseAffineField:
    """``e x + g y + h + sum_k c_k |a_k x + b_k y + d_k|``.

    Closed under addition, scaling and composition with affine maps, so
    every identity of the property suite stays inside the class.
    """

    e: float = 0.0
    g: float = 0.0
    h: float = 0.0
    kinks: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))

    exact = True
    piecewise_constant = False

    def __post_init__(self):
        k = np.array(self.kinks, dtype=float).reshape(-1, 4)
        k.setflags(write=False)
        object.__setattr__(self, "kinks", k)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = self.e * x + self.g * y + self.h
        for c, a, b, d in self.kinks:
            out = out + c * np.abs(a * x + b * y + d)
        return out

    def __add__(self, other: "PiecewiseAffineField") -> "PiecewiseAffineField":
        if not isinstance(other, PiecewiseAffineField):
            return NotImplemented
        return PiecewiseAffineField(self.e + other.e, self.g + other.g, self.h + other.h,
                                    np.vstack([self.kinks, other.kinks]))

    def scale(self, k: float) -> "PiecewiseAffineField":
        kk = self.kinks.copy()
        kk[:, 0] *= k
        return PiecewiseAffineField(k * self.e, k * self.g, k * self.h, kk)

    def compose_affine(self, M, t) -> "PiecewiseAffineField":
        """``f(M p + t)``."""
        M = np.asarray(M, dtype=float)
        t = np.asarray(t, dtype=float)
        lin = np.array([self.e, self.g]) @ M
        h = self.h + self.e * t[0] + self.g * t[1]
        kk = []
        for c, a, b, d in self.kinks:
            ab = np.array([a, b]) @ M
            kk.append([c, ab[0], ab[1], d + a * t[0] + b * t[1]])
        return PiecewiseAffineField(lin[0], lin[1], h, np.array(kk).reshape(-1, 4))

    def critical(self, P: np.ndarray, D: np.ndarray) -> np.ndarray:
        """Kink parameters per segment, shape ``(m, K)``; NaN if none."""
        if self.kinks.shape[0] == 0:
            return np.zeros((P.shape[0], 0))
        a, b, d = self.kinks[:, 1], self.kinks[:, 2], self.kinks[:, 3]
        base = np.multiply.outer(P[:, 0], a) + np.multiply.outer(P[:, 1], b) + d
        slope = np.multiply.outer(D[:, 0], a) + np.multiply.outer(D[:, 1], b)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -base / slope
        return np.where((slope != 0) & (s > 0) & (s < 1), s, np.nan)

    def gradient_bound(self) -> float:
        """Bound on ``|f_x|`` and ``|f_y|`` away from the kinks."""
        c = np.abs(self.kinks[:, 0])
        return max(abs(self.e) + float(c @ np.abs(self.kinks[:, 1])),
                   abs(self.g) + float(c @ np.abs(self.kinks[:, 2])))


@dataclass(frozen=True)
class ProductField:
    """Pointwise product of two piecewise-affine fields (exact cvar)."""

    f: PiecewiseAffineField
    g: PiecewiseAffineField

    exact = True
    piecewise_constant = False

    def __call__(self, x, y):
        return self.f(x, y) * self.g(x, y)

    def critical(self, P, D):
        kinks = np.concatenate([self.f.critical(P, D), self.g.critical(P, D)], axis=1)
        m = P.shape[0]
        bounds = np.sort(np.concatenate([np.zeros((m, 1)), kinks, np.ones((m, 1))], axis=1),
                         axis=1)
        sa, sb = bounds[:, :-1], bounds[:, 1:]
        valid = np.isfinite(sa) & np.isfinite(sb) & (sb > sa)
        sa = np.where(valid, sa, 0.0)
        sb = np.where(valid, sb, 0.0)

        def at(fld, s):
            pts = P[:, None, :] + s[..., None] * D[:, None, :]
            return fld(pts[..., 0], pts[..., 1])

        u0, u1 = at(self.f, sa), at(self.f, sb)
        v0, v1 = at(self.g, sa), at(self.g, sb)
        du, dv = u1 - u0, v1 - v0
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = -(u0 * dv + v0 * du) / (2 * du * dv)
        ok = valid & (du * dv != 0) & (lam > 0) & (lam < 1)
        vert = np.where(ok, sa + lam * (sb - sa), np.nan)
        return np.concatenate([kinks, vert], axis=1)


@dataclass(frozen=True)
class CellField:
    """Piecewise-constant field on a 2D grid, zero outside it."""

    grid: Grid
    values: np.ndarray

    exact = True
    piecewise_constant = True

    def __post_init__(self):
        if self.grid.ndim != 2:
            raise InvalidInputError("CellField needs a 2D grid")
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.n_cells:
            raise InvalidInputError("values do not match the grid")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_density(cls, f: DensityVector) -> "CellField":
        return cls(f.grid, f.values)

    def __call__(self, x, y):
        idx = self.grid.index(np.asarray(x, float), np.asarray(y, float))
        return np.where(idx >= 0, self.values[np.maximum(idx, 0)], 0.0)

    def critical(self, P, D):
        x0, x1, y0, y1 = self.grid.bounds
        xs = np.linspace(x0, x1, self.grid.nx + 1)
        ys = np.linspace(y0, y1, self.grid.ny + 1)
        rows = []
        for p, d in zip(P, D):
            parts = []
            if d[0] != 0:
                parts.append((xs - p[0]) / d[0])
            if d[1] != 0:
                parts.append((ys - p[1]) / d[1])
            s = np.concatenate(parts) if parts else np.zeros(0)
            rows.append(s[(s > 0) & (s < 1)])
        width = max((r.size for r in rows), default=0)
        out = np.full((len(rows), width), np.nan)
        for i, r in enumerate(rows):
            out[i, :r.size] = r
        return out


@dataclass(frozen=True)
class SmoothField:
    """Vectorized callable with an optional known gradient bound."""

    func: Callable
    grad_bound: float | None = None

    exact = False
    piecewise_constant = False

    def __call__(self, x, y):
        return self.func(np.asarray(x, float), np.asarray(y, float))


# ----------------------------------------------------------------------- cvar

def _as_polyline(gamma, n_param: int = 256) -> Polyline:
    if isinstance(gamma, Polyline):
        return gamma
    if isinstance(gamma, ParametricCurve):
        return gamma.to_polyline(n_param)
    return Polyline(gamma)


def _nodes(fld, gamma: Polyline, sigma):
    """Sorted node parameters ``(seg, s, interval_id)`` for exact evaluation."""
    P, D = gamma.segments()
    seg, s0, s1 = sigma.intervals(P, D)
    if seg.size == 0:
        return seg, np.zeros(0), seg
    crit = fld.critical(P, D)[seg] if getattr(fld, "exact", False) else np.zeros((seg.size, 0))
    inside = (crit > s0[:, None]) & (crit < s1[:, None])
    crit = np.where(inside, crit, np.nan)
    rows = np.sort(np.concatenate([s0[:, None], crit, s1[:, None]], axis=1), axis=1)
    if getattr(fld, "piecewise_constant", False):
        mids = 0.5 * (rows[:, 1:] + rows[:, :-1])
        rows = np.sort(np.concatenate([rows, mids], axis=1), axis=1)
    keep = np.isfinite(rows)
    seg_rep = np.broadcast_to(seg[:, None], rows.shape)[keep]
    ivl = np.broadcast_to(np.arange(seg.size)[:, None], rows.shape)[keep]
    return seg_rep, rows[keep], ivl


def _values(fld, gamma: Polyline, seg, s):
    P, D = gamma.segments()
    pts = P[seg] + s[:, None] * D[seg]
    v = np.asarray(fld(pts[:, 0], pts[:, 1]), dtype=float)
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("field is not finite on the curve")
    return v


def cvar(f, gamma, sigma, refine_tol: float = 1e-9, max_levels: int = 16,
         initial: int = 16, return_nodes: bool = False):
    """Variation of ``f`` along ``gamma`` restricted to ``sigma``.

    Exact for :class:`PiecewiseAffineField`, :class:`ProductField` and
    :class:`CellField` on polylines.  Other fields are refined by bisecting
    every interval until the sum grows by less than ``refine_tol``; the
    result is then a lower bound, nondecreasing in the refinement.

    Parameters
    ----------
    f : field
    gamma : Polyline, ParametricCurve or vertex array
    sigma : Box, ConvexPolygon or RegionUnion
    """
    gamma = _as_polyline(gamma)
    seg, s, ivl = _nodes(f, gamma, sigma)
    if s.size == 0:
        return (0.0, s) if return_nodes else 0.0
    if not getattr(f, "exact", False):
        seg, s, ivl = _seed_nodes(seg, s, ivl, initial)
    vals = _values(f, gamma, seg, s)
    total = float(np.abs(np.diff(vals)).sum())
    if not getattr(f, "exact", False):
        quiet = 0
        for _ in range(max_levels):
            seg, s, ivl, vals = _bisect(f, gamma, seg, s, ivl, vals)
            new = float(np.abs(np.diff(vals)).sum())
            quiet = quiet + 1 if new - total < refine_tol else 0
            total = new
            # one level can miss a peak entirely, so wait for two
            if quiet >= 2:
                break
        seg, s, ivl, vals = _polish_extrema(f, gamma, seg, s, ivl, vals)
        total = float(np.abs(np.diff(vals)).sum())
    return (total, s) if return_nodes else total


def _seed_nodes(seg, s, ivl, n):
    # each interval gets n uniform nodes between its endpoints
    out_seg, out_s, out_i = [], [], []
    for j in np.unique(ivl):
        m = ivl == j
        a, b = s[m].min(), s[m].max()
        out_s.append(np.linspace(a, b, n + 1) if b > a else np.array([a]))
        out_seg.append(np.full(out_s[-1].size, seg[m][0]))
        out_i.append(np.full(out_s[-1].size, j))
    return np.concatenate(out_seg), np.concatenate(out_s), np.concatenate(out_i)


def _polish_extrema(f, gamma, seg, s, ivl, vals, iters: int = 80):
    """Add the local optimum next to every discrete turning node.

    All turning nodes are refined together by golden-section search on the
    bracket formed by their two neighbours.
    """
    d = np.diff(vals)
    turn = np.flatnonzero((d[:-1] * d[1:] < 0) & (ivl[:-2] == ivl[2:]) & (seg[:-2] == seg[2:])) + 1
    if turn.size == 0:
        return seg, s, ivl, vals
    sign = np.where(d[turn - 1] > 0, 1.0, -1.0)
    sg = seg[turn]
    lo, hi = s[turn - 1].copy(), s[turn + 1].copy()
    r = (math.sqrt(5.0) - 1.0) / 2.0
    u1, u2 = hi - r * (hi - lo), lo + r * (hi - lo)
    v1 = sign * _values(f, gamma, sg, u1)
    v2 = sign * _values(f, gamma, sg, u2)
    for _ in range(iters):
        left = v1 >= v2
        hi = np.where(left, u2, hi)
        lo = np.where(left, lo, u1)
        keep_u, keep_v = np.where(left, u1, u2), np.where(left, v1, v2)
        probe = np.where(left, hi - r * (hi - lo), lo + r * (hi - lo))
        pv = sign * _values(f, gamma, sg, probe)
        u1, v1 = np.where(left, probe, keep_u), np.where(left, pv, keep_v)
        u2, v2 = np.where(left, keep_u, probe), np.where(left, keep_v, pv)
    best_u = np.where(v1 >= v2, u1, u2)
    best_v = np.maximum(v1, v2)
    gain = best_v > sign * vals[turn]
    if not gain.any():
        return seg, s, ivl, vals
    seg = np.concatenate([seg, sg[gain]])
    ivl = np.concatenate([ivl, ivl[turn][gain]])
    s = np.concatenate([s, best_u[gain]])
    vals = np.concatenate([vals, (sign * best_v)[gain]])
    order = np.lexsort((s, ivl))
    return seg[order], s[order], ivl[order], vals[order]


def _bisect(f, gamma, seg, s, ivl, vals):
    same = (ivl[1:] == ivl[:-1]) & (s[1:] > s[:-1])
    k = np.flatnonzero(same)
    mid_s = 0.5 * (s[k] + s[k + 1])
    mid_v = _values(f, gamma, seg[k], mid_s)
    pos = np.arange(s.size, dtype=float)
    order = np.argsort(np.concatenate([pos, k + 0.5]), kind="stable")
    cat = lambda a, b: np.concatenate([a, b])[order]  # noqa: E731
    return cat(seg, seg[k]), cat(s, mid_s), cat(ivl, ivl[k]), cat(vals, mid_v)


# ----------------------------------------------------------------- vf / probes

@dataclass(frozen=True)
class CircleProbe:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInputError("radius must be positive")

    def implicit(self, x, y):
        cx, cy = self.center
        return np.hypot(x - cx, y - cy) - self.radius


@dataclass(frozen=True)
class PolygonProbe:
    """Boundary of a convex polygon (convexity checked by cross products)."""

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_poly", ConvexPolygon(self.vertices))
        object.__setattr__(self, "vertices", self._poly.vertices)

    def implicit(self, x, y):
        n, c = self._poly.normals, self._poly.offsets
        norm = np.hypot(n[:, 0], n[:, 1])
        d = (np.multiply.outer(x, n[:, 0]) + np.multiply.outer(y, n[:, 1]) - c) / norm
        return d.max(axis=-1)


@dataclass(frozen=True)
class EntryCount:
    count: int
    uncertain: bool


def _circle_hits(P, D, probe: CircleProbe, tol):
    hits, flag = [], False
    c = np.asarray(probe.center, dtype=float)
    r = probe.radius
    for i, (p, d) in enumerate(zip(P, D)):
        w = p - c
        A = d @ d
        B = 2 * d @ w
        C = w @ w - r * r
        if A == 0:
            if abs(C) <= tol * r * r:
                hits.append((i, i + 1.0))
            continue
        disc = B * B - 4 * A * C
        scale = max(B * B, abs(4 * A * C), A * r * r)
        if abs(disc) <= 1e-12 * scale:
            s = -B / (2 * A)
            if -tol <= s <= 1 + tol:
                hits.append((i + s, i + s))
                flag = True
            continue
        if disc < 0:
            continue
        sq = math.sqrt(disc)
        for s in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)):
            if -tol <= s <= 1 + tol:
                s = min(max(s, 0.0), 1.0)
                hits.append((i + s, i + s))
    return hits, flag


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _polygon_hits(P, D, probe: PolygonProbe, tol):
    hits, flag = [], False
    V = probe.vertices
    E = np.roll(V, -1, axis=0) - V
    for i, (p, d) in enumerate(zip(P, D)):
        for v, e in zip(V, E):
            den = _cross(d, e)
            w = v - p
            scale = (np.linalg.norm(d) * np.linalg.norm(e)) or 1.0
            if abs(den) > 1e-12 * scale:
                s = _cross(w, e) / den
                u = _cross(w, d) / den
                if -tol <= s <= 1 + tol and -tol <= u <= 1 + tol:
                    s = min(max(s, 0.0), 1.0)
                    hits.append((i + s, i + s))
                continue
            if abs(_cross(w, d)) > 1e-12 * (scale + np.linalg.norm(w) ** 2):
                continue  # parallel, not collinear
            flag = flag or abs(den) > 0
            dd = d @ d
            if dd == 0:
                u = (w * -1) @ e / (e @ e)
                if -tol <= u <= 1 + tol:
                    hits.append((i, i + 1.0))
                continue
            a = (v - p) @ d / dd
            b = (v + e - p) @ d / dd
            lo, hi = max(min(a, b), 0.0), min(max(a, b), 1.0)
            if lo <= hi + tol:
                hits.append((i + lo, i + min(max(hi, lo), 1.0)))
    return hits, flag


def entry_points(gamma, probe, tol: float = PARAM_TOL) -> EntryCount:
    """Number of entry points of a polyline on one convex probe.

    Hits (points or collinear overlaps) are merged when closer than
    ``tol`` in parameter space; each merged component holds exactly one
    entry point.  A near-tangent touch counts once and sets ``uncertain``.
    """
    gamma = _as_polyline(gamma)
    P, D = gamma.segments()
    if isinstance(probe, CircleProbe):
        hits, flag = _circle_hits(P, D, probe, tol)
    elif isinstance(probe, PolygonProbe):
        hits, flag = _polygon_hits(P, D, probe, tol)
    else:
        raise InvalidInputError(f"unsupported probe {type(probe).__name__}")
    if not hits:
        return EntryCount(0, flag)
    hits.sort()
    count, end = 1, hits[0][1]
    for a, b in hits[1:]:
        if a > end + tol:
            count += 1
        end = max(end, b)
    return EntryCount(count, flag)


@dataclass(frozen=True)
class VfEstimate:
    """Best per-probe entry count; ``uncertain`` flags a tangency."""

    count: int
    uncertain: bool
    probe_index: int | None

    def __int__(self) -> int:
        return self.count


def vf_estimate(gamma, probes: Sequence) -> VfEstimate:
    """Maximum entry count over the probes: a lower bound for vf."""
    if not probes:
        raise InvalidInputError("need at least one probe")
    best, idx, unsure = -1, None, False
    for k, pr in enumerate(probes):
        ec = entry_points(gamma, pr)
        unsure = unsure or ec.uncertain
        if ec.count > best:
            best, idx = ec.count, k
    return VfEstimate(best, unsure, idx)


def vf_upper_bound(gamma) -> int:
    """Two entry points per segment: a line meets a convex curve in at most
    two points or one segment."""
    return 2 * _as_polyline(gamma).n_segments


def var_lower_bound(f, sigma, family: Sequence, probes: Sequence | None = None,
                    normalizer: str = "certified", **cvar_kw) -> float:
    """``max cvar(f, gamma, sigma) / vf(gamma)`` over a curve family.

    ``normalizer="certified"`` divides by :func:`vf_upper_bound`, which
    keeps the result a lower bound for ``Var``.  ``"probes"`` divides by
    the probe count instead (sharper, but only as good as the probe set).
    """
    if not family:
        raise InvalidInputError("empty curve family")
    best = 0.0
    for gamma in family:
        gamma = _as_polyline(gamma)
        v = cvar(f, gamma, sigma, **cvar_kw)
        if v == 0.0:
            continue
        if normalizer == "certified":
            den = vf_upper_bound(gamma)
        elif normalizer == "probes":
            if probes is None:
                raise InvalidInputError("normalizer 'probes' needs probes")
            den = max(vf_estimate(gamma, probes).count, 1)
        else:
            raise InvalidInputError(f"unknown normalizer {normalizer!r}")
        best = max(best, v / den)
    return best


# ------------------------------------------------------------------- families

def _bbox(sigma):
    return sigma.bbox


def _diagonal(sigma) -> Polyline:
    x0, x1, y0, y1 = _bbox(sigma)
    return Polyline([[x0, y0], [x1, y1]])


def axis_segments(sigma, n: int = 8) -> list[Polyline]:
    """Horizontal and vertical chords across the bounding box, plus its diagonal."""
    x0, x1, y0, y1 = _bbox(sigma)
    out = [_diagonal(sigma)]
    for u in (np.arange(n) + 0.5) / n:
        y = y0 + u * (y1 - y0)
        x = x0 + u * (x1 - x0)
        out.append(Polyline([[x0, y], [x1, y]]))
        out.append(Polyline([[x, y0], [x, y1]]))
    return out


def random_polylines(sigma, n: int = 8, rng=None, max_vertices: int = 32) -> list[Polyline]:
    """Random polylines with vertices in the bounding box, plus the diagonal."""
    rng = np.random.default_rng(rng)
    x0, x1, y0, y1 = _bbox(sigma)
    out = [_diagonal(sigma)]
    for _ in range(n):
        k = int(rng.integers(2, max_vertices + 1))
        out.append(Polyline(np.column_stack([rng.uniform(x0, x1, k), rng.uniform(y0, y1, k)])))
    return out


def circle_curves(sigma, n: int = 4, rng=None, sides: int = 64) -> list[Polyline]:
    """Closed regular ``sides``-gons inscribed in the bounding box, plus the diagonal."""
    rng = np.random.default_rng(rng)
    x0, x1, y0, y1 = _bbox(sigma)
    out = [_diagonal(sigma)]
    th = np.linspace(0.0, 2 * np.pi, sides + 1)
    for _ in range(n):
        cx, cy = rng.uniform(x0, x1), rng.uniform(y0, y1)
        r = rng.uniform(0.05, 0.5) * min(x1 - x0, y1 - y0)
        pts = np.column_stack([cx + r * np.cos(th), cy + r * np.sin(th)])
        pts[-1] = pts[0]
        out.append(Polyline(pts))
    return out


def default_family(sigma, seed: int = 0, n: int = 8) -> list[Polyline]:
    rng = np.random.default_rng(seed)
    fam = axis_segments(sigma, n)
    fam += random_polylines(sigma, n, rng)[1:]
    fam += circle_curves(sigma, max(1, n // 2), rng)[1:]
    return fam


def default_probes(sigma, n: int = 16, seed: int = 0) -> list:
    """Circles and random convex quadrilaterals over the bounding box."""
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = _bbox(sigma)
    w, h = x1 - x0, y1 - y0
    out = []
    for _ in range(n):
        out.append(CircleProbe((rng.uniform(x0, x1), rng.uniform(y0, y1)),
                               rng.uniform(0.05, 0.7) * max(w, h)))
        cx, cy = rng.uniform(x0, x1), rng.uniform(y0, y1)
        ang = np.sort(rng.uniform(0, 2 * np.pi, 4))
        rad = rng.uniform(0.1, 0.6) * max(w, h)
        out.append(PolygonProbe(np.column_stack([cx + rad * np.cos(ang),
                                                 cy + rad * np.sin(ang)])))
    return out


# ------------------------------------------------------------- property suite

PROPERTIES = ("subadditivity", "product_rule", "homogeneity", "concatenation",
              "subcurve", "region_monotone", "adjacency", "adjacency_subadditive",
              "change_of_variables", "gradient_bound")


@dataclass
class PropertyReport:
    trials: int
    seed: int
    passes: dict
    failures: dict
    worst_margin: dict
    counterexamples: dict

    @property
    def violations(self) -> int:
        return sum(self.failures.values())

    def ok(self, names: Sequence[str] | None = None) -> bool:
        names = PROPERTIES if names is None else names
        return all(self.failures.get(n, 0) == 0 for n in names)

    def to_dict(self) -> dict:
        return {"schema": "bv-property-report/1", "trials": self.trials, "seed": self.seed,
                "passes": self.passes, "failures": self.failures,
                "worst_margin": self.worst_margin, "counterexamples": self.counterexamples}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _rand_field(rng, n_kinks: int | None = None) -> PiecewiseAffineField:
    k = int(rng.integers(0, 5)) if n_kinks is None else n_kinks
    kinks = np.column_stack([rng.normal(size=k), rng.normal(size=k), rng.normal(size=k),
                             rng.uniform(-1, 1, k)])
    e, g, h = rng.normal(size=3)
    return PiecewiseAffineField(e, g, h, kinks)


def _rand_box(rng) -> Box:
    x0, y0 = rng.uniform(-1, 0, 2)
    return Box(x0, x0 + rng.uniform(0.5, 2), y0, y0 + rng.uniform(0.5, 2))


def _rand_curve(rng, box, spill: float = 0.3, max_vertices: int = 32) -> Polyline:
    x0, x1, y0, y1 = box.bbox
    k = int(rng.integers(2, max_vertices + 1))
    w, h = x1 - x0, y1 - y0
    return Polyline(np.column_stack([rng.uniform(x0 - spill * w, x1 + spill * w, k),
                                     rng.uniform(y0 - spill * h, y1 + spill * h, k)]))


def _field_dict(f: PiecewiseAffineField) -> dict:
    return {"e": f.e, "g": f.g, "h": f.h, "kinks": f.kinks.tolist()}


def _sup_on_nodes(f, gamma, sigma) -> float:
    seg, s, _ = _nodes(f, gamma, sigma)
    if s.size == 0:
        return 0.0
    return float(np.abs(_values(f, gamma, seg, s)).max())


def property_suite(trials: int = 1000, seed: int = 0, tol: float = 1e-10,
                   max_counterexamples: int = 3, fault: str | None = None) -> PropertyReport:
    """Randomized checks of the algebraic properties of cvar and Var.

    Each trial draws fresh piecewise-affine fields, regions and polylines
    and evaluates every property with exact cvar.  Equalities are compared
    to ``tol`` relative to the size of the terms; inequalities allow the
    same slack.  The C1 gradient bound uses a smooth field and a curve
    family that contains the region diagonal.

    ``fault="homogeneity"`` perturbs the scaled field on purpose; it exists
    to check that the harness reports failures.
    """
    if fault not in (None, "homogeneity"):
        raise InvalidInputError(f"unknown fault {fault!r}")
    rng = np.random.default_rng(seed)
    passes = {p: 0 for p in PROPERTIES}
    failures = {p: 0 for p in PROPERTIES}
    worst = {p: math.inf for p in PROPERTIES}
    examples: dict = {p: [] for p in PROPERTIES}

    def record(name, margin, scale, ctx):
        # margin >= 0 means the property holds
        m = margin / max(1.0, scale)
        worst[name] = min(worst[name], m)
        if m >= -tol:
            passes[name] += 1
        else:
            failures[name] += 1
            if len(examples[name]) < max_counterexamples:
                examples[name].append({"margin": margin, **ctx})

    for _ in range(trials):
        f, g = _rand_field(rng), _rand_field(rng)
        box = _rand_box(rng)
        gam = _rand_curve(rng, box)
        ctx = {"f": _field_dict(f), "g": _field_dict(g), "sigma": list(box.bbox),
               "gamma": gam.vertices.tolist()}
        cf, cg = cvar(f, gam, box), cvar(g, gam, box)

        lhs = cvar(f + g, gam, box)
        record("subadditivity", cf + cg - lhs, cf + cg, ctx)

        lhs = cvar(ProductField(f, g), gam, box)
        rhs = _sup_on_nodes(f, gam, box) * cg + _sup_on_nodes(g, gam, box) * cf
        record("product_rule", rhs - lhs, rhs, ctx)

        k = float(rng.normal() * 3)
        lhs = cvar(f.scale(k * (1.001 if fault else 1.0)), gam, box)
        record("homogeneity", -abs(lhs - abs(k) * cf), lhs, {**ctx, "k": k})

        # concatenation needs the junction inside sigma
        x0, x1, y0, y1 = box.bbox
        cut = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        g1 = _rand_curve(rng, box, max_vertices=16)
        g2 = _rand_curve(rng, box, max_vertices=16)
        whole = Polyline(np.vstack([g1.vertices, cut, g2.vertices]))
        a, b = whole.split(g1.vertices.shape[0])
        c_whole, c_a, c_b = cvar(f, whole, box), cvar(f, a, box), cvar(f, b, box)
        cctx = {**ctx, "gamma": whole.vertices.tolist(), "junction": cut.tolist()}
        record("concatenation", -abs(c_whole - c_a - c_b), c_whole, cctx)
        record("subcurve", c_whole - c_a, c_whole, cctx)

        inner = Box(*_shrink(box.bbox, rng))
        record("region_monotone", cf - cvar(f, gam, inner), cf,
               {**ctx, "sigma1": list(inner.bbox)})

        xm = rng.uniform(x0 + 0.1 * (x1 - x0), x1 - 0.1 * (x1 - x0))
        s1, s2 = Box(x0, xm, y0, y1), Box(xm, x1, y0, y1)
        union = RegionUnion((s1, s2))
        # curves that leave the union would add jumps seen by neither part
        inside = _rand_curve(rng, box, spill=0.0)
        cu, c1, c2 = cvar(f, inside, union), cvar(f, inside, s1), cvar(f, inside, s2)
        actx = {**ctx, "gamma": inside.vertices.tolist(),
                "sigma1": list(s1.bbox), "sigma2": list(s2.bbox),
                "cvar_union": cu, "cvar_1": c1, "cvar_2": c2}
        record("adjacency", -abs(cu - c1 - c2), cu, actx)
        record("adjacency_subadditive", c1 + c2 - cu, cu, actx)

        th = rng.uniform(0, 2 * np.pi)
        M = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        M = M @ np.diag(rng.uniform(0.5, 2.0, 2))
        t = rng.normal(size=2)
        left = cvar(f.compose_affine(M, t), gam, box)
        img = gam.map(lambda x, y: (M[0, 0] * x + M[0, 1] * y + t[0],
                                    M[1, 0] * x + M[1, 1] * y + t[1]))
        right = cvar(f, img, box.map(M, t))
        record("change_of_variables", -abs(left - right), max(left, right),
               {**ctx, "M": M.tolist(), "t": t.tolist()})

        sm, C = _rand_smooth(rng)
        fam = [_diagonal(box), _rand_curve(rng, box, spill=0.0, max_vertices=8),
               Polyline([[x0, y0], [x1, y0]]), Polyline([[x0, y0], [x0, y1]])]
        lhs = var_lower_bound(sm, box, fam, refine_tol=1e-8, max_levels=10)
        ref = var_lower_bound(PiecewiseAffineField(1.0, 1.0), box, fam)
        record("gradient_bound", C * ref - lhs, C * ref,
               {"sigma": list(box.bbox), "C": C})

    worst = {k: (v if math.isfinite(v) else None) for k, v in worst.items()}
    return PropertyReport(trials, seed, passes, failures, worst, examples)


def _shrink(bbox, rng):
    x0, x1, y0, y1 = bbox
    a, b = np.sort(rng.uniform(x0, x1, 2))
    c, d = np.sort(rng.uniform(y0, y1, 2))
    if b - a < 1e-6:
        b = a + 1e-6
    if d - c < 1e-6:
        d = c + 1e-6
    return a, b, c, d


def _rand_smooth(rng):
    a, kx, ky, ph, b, c = rng.normal(size=6)
    f = SmoothField(lambda x, y: a * np.sin(kx * x + ky * y + ph) + b * x + c * y)
    C = max(abs(a * kx) + abs(b), abs(a * ky) + abs(c))
    return f, C


# ----------------------------------------------------------- contraction probe

@dataclass(frozen=True)
class ContractionReport:
    variations: tuple
    bounded: bool
    envelope: tuple  # (a, b, rho): v_k <= a + b rho^k
    growth_tol: float


def _envelope(v: np.ndarray):
    n = v.size
    a = float(v[n // 2:].max()) if n else 0.0
    k = np.arange(n)
    excess = v - a
    pos = excess > 0
    if pos.sum() >= 2:
        slope = np.polyfit(k[pos], np.log(excess[pos]), 1)[0]
        rho = float(min(max(math.exp(slope), 0.0), 1.0))
    else:
        rho = 0.0
    b = 0.0
    if pos.any():
        with np.errstate(divide="ignore"):
            b = float(np.max(excess[pos] / np.power(max(rho, 1e-300), k[pos])))
    return a, b, rho


def contraction_probe(P: UlamOperator, f0: DensityVector, n: int,
                      family: Sequence | None = None, sigma=None,
                      growth_tol: float = 1.5) -> ContractionReport:
    """``var_lower_bound(P^k f0)`` for ``k = 0..n`` on the Ulam realization.

    The density is cell-constant, so every cvar is exact.  ``bounded``
    reports whether the second half of the sequence stays within
    ``growth_tol`` times the maximum of the first half; this is a
    qualitative check, not a rate.
    """
    if n < 1:
        raise InvalidInputError("n must be positive")
    g = P.grid
    if sigma is None:
        x0, x1, y0, y1 = g.bounds
        sigma = Box(x0, x1, y0, y1)
    if family is None:
        family = default_family(sigma)
    f = f0
    out = []
    for k in range(n + 1):
        out.append(var_lower_bound(CellField.from_density(f), sigma, family))
        if k < n:
            f = apply(P, f)
    v = np.array(out)
    half = max(1, (n + 1) // 2)
    bounded = bool(v[half:].max(initial=0.0) <= growth_tol * max(v[:half].max(), 1e-300))
    return ContractionReport(tuple(out), bounded, _envelope(v), growth_tol)
