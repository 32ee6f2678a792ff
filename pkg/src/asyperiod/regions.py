"""Divergence chain, trapping region and the alpha threshold solver.

Geometry used throughout (``S_R`` is the right branch of S~ extended to
the whole plane, ``A x + b`` its inverse):

* ``D_0`` is the part of the closed left quadrant below the stable line of
  the left saddle; every point of ``D_0`` diverges.
* ``P_i = S_R^{-i}(0, c)`` where ``(0, c)`` is where that line meets x = 0.
  ``ell`` is the first index with ``y(P_i) > 0``.
* ``D_i = S_R^{-i}(D_0)`` cut to ``y <= 0`` and ``C`` is the lower half
  plane with ``D_0 .. D_ell`` removed.
* ``p`` is where the chord from ``P_ell`` to the right fixed point meets
  ``y = 0``; ``q`` is where the chord from ``P_ell`` to ``P_{ell-1}`` does.
  ``q >= 1`` makes ``C`` forward invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (BracketingError, DegenerateGeometryError, NoSaddleError,
                     PreimageChainError, UnsupportedRegimeError)
from .maps import MapParams, Point2, inverse_matrix_A

__all__ = [
    "HalfPlaneD0",
    "RegionDecomposition",
    "ProbeReport",
    "compute_c",
    "preimage_chain",
    "compute_p_q",
    "classify_case",
    "is_conservative",
    "decompose",
    "alpha_threshold",
    "trapping_region_probe",
    "THRESHOLD_BETAS",
]

# beta grid of the reference threshold rows
THRESHOLD_BETAS = (1.01, 1.02, 1.03, 1.04, 1.05, 1.06, 1.07, 1.08, 1.09, 1.1,
                1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0)


def _lambda_l_minus(params: MapParams) -> float:
    a, b = params.alpha, params.beta
    return (a - math.sqrt(a * a + 4 * b)) / 2


def _left_fixed(params: MapParams) -> Point2:
    if not params.has_left_fixed:
        raise NoSaddleError(
            f"alpha + beta = {params.alpha + params.beta} <= 1: no left saddle")
    x = 1.0 / (1.0 - params.alpha - params.beta)
    return Point2(x, params.beta * x)


def _right_fixed(params: MapParams) -> Point2:
    x = 1.0 / (1.0 - params.alpha + params.beta)
    return Point2(x, -params.beta * x)


@dataclass(frozen=True)
class HalfPlaneD0:
    """``{x <= 0, y < 0, y - y_L < slope (x - x_L)}``."""

    anchor: Point2
    slope: float

    def contains(self, x, y):
        ax, ay = self.anchor
        return (x <= 0) & (y < 0) & (y - ay < self.slope * (x - ax))


def compute_c(params: MapParams) -> float:
    """y-intercept of the stable line through the left saddle."""
    xl, _ = _left_fixed(params)
    return params.beta * xl * (1.0 - 1.0 / _lambda_l_minus(params))


def preimage_chain(params: MapParams, max_iter: int = 200):
    """Preimages ``P_i = S_R^{-i}(0, c)`` up to the first one above y = 0.

    Uses ``P_i = A^i P_0 + (I - A)^{-1} (I - A^i) b`` with ``A^i`` advanced
    by the trace/determinant recurrence.

    Returns
    -------
    ell : int
        First index with positive y coordinate.
    points : list of Point2
        ``P_0 .. P_ell``.
    """
    if not params.complex_right_eigs:
        raise UnsupportedRegimeError("preimage chain needs alpha**2 < 4 beta")
    c = compute_c(params)
    A, b = inverse_matrix_A(params)
    eye = np.eye(2)
    g = np.linalg.inv(eye - A)
    p0 = np.array([0.0, c])
    t, d = params.alpha / params.beta, 1.0 / params.beta
    s, r = 0.0, 1.0
    points = [Point2(0.0, c)]
    for i in range(1, max_iter + 1):
        s, r = t * s + r, -d * s
        an = s * A + r * eye
        v = an @ p0 + g @ (eye - an) @ b
        points.append(Point2(float(v[0]), float(v[1])))
        if v[1] > 0:
            return i, points
    raise PreimageChainError(
        f"no preimage above y=0 within {max_iter} steps at "
        f"alpha={params.alpha}, beta={params.beta}")


def _x_intercept(p1: Point2, p2: Point2) -> float:
    dy = p2.y - p1.y
    if dy == 0.0 or not math.isfinite(dy):
        raise DegenerateGeometryError(f"chord {p1} -> {p2} is parallel to y=0")
    return p1.x - p1.y * (p2.x - p1.x) / dy


def compute_p_q(params: MapParams, max_iter: int = 200) -> tuple[float, float]:
    """Intercepts ``(p, q)`` of the two chords through ``P_ell``."""
    ell, pts = preimage_chain(params, max_iter)
    p = _x_intercept(pts[ell], _right_fixed(params))
    q = _x_intercept(pts[ell], pts[ell - 1])
    return p, q


def classify_case(p: float, q: float) -> str:
    """Case label ``a``, ``b`` or ``c``; ``unclassified`` when p == 1."""
    if p == 1.0:
        return "unclassified"
    if p > 1.0:
        return "c"
    return "b" if q >= 1.0 else "a"


def is_conservative(case: str) -> bool:
    return case in ("b", "c")


@dataclass(frozen=True)
class RegionDecomposition:
    params: MapParams
    c: float
    ell: int
    preimage_points: tuple
    p: float
    q: float
    case: str
    fixed_L: Point2
    fixed_R: Point2
    d0: HalfPlaneD0

    def in_D(self, i: int, x, y):
        """Membership in ``D_i`` via ``S_R^i`` applied to the point."""
        a, b = self.params.alpha, self.params.beta
        u, v = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        below = v <= 0
        for _ in range(i):
            u, v = a * u + v + 1.0, -b * u
        return below & self.d0.contains(u, v)

    def in_C(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = y <= 0
        for i in range(self.ell + 1):
            out = out & ~self.in_D(i, x, y)
        return out


def decompose(params: MapParams, max_iter: int = 200) -> RegionDecomposition:
    """Full geometric data for one parameter pair."""
    fl = _left_fixed(params)
    c = compute_c(params)
    ell, pts = preimage_chain(params, max_iter)
    p, q = compute_p_q(params, max_iter)
    d0 = HalfPlaneD0(fl, params.beta / _lambda_l_minus(params))
    return RegionDecomposition(params, c, ell, tuple(pts), p, q,
                               classify_case(p, q), fl, _right_fixed(params), d0)


def _q_holds(alpha: float, beta: float, max_iter: int):
    """``(passes, ell)``: chain defined and ``q >= 1``."""
    try:
        params = MapParams(alpha, beta)
        ell, pts = preimage_chain(params, max_iter)
        q = _x_intercept(pts[ell], pts[ell - 1])
    except (PreimageChainError, DegenerateGeometryError, NoSaddleError,
            UnsupportedRegimeError):
        return False, None, None
    return q >= 1.0, ell, q


def alpha_threshold(beta: float, tol: float = 1e-10, step: float = 0.01,
                    fine_step: float = 1e-4, max_iter: int = 200):
    """First alpha (scanning up from 0) where ``q >= 1`` stops holding.

    A coarse scan with ``step`` brackets the first failure, a scan with
    ``fine_step`` inside that bracket isolates it, and bisection refines it
    to ``tol``.  ``ell`` is re-derived at every evaluation and reported at
    the last passing point of the bisection.

    Returns
    -------
    alpha_star : float
    ell : int
    """
    params = MapParams(0.0, beta)  # validates beta
    alpha_max = min(2.0 * math.sqrt(params.beta), 1.0 + params.beta)
    n_coarse = int(math.floor(alpha_max / step))
    profile = []
    ok0, ell0, q0 = _q_holds(0.0, beta, max_iter)
    profile.append((0.0, q0))
    if not ok0:
        if ell0 is None:
            raise BracketingError(f"chain undefined at alpha=0, beta={beta}", profile)
        return 0.0, ell0
    last_ok = 0.0
    fail = None
    for k in range(1, n_coarse + 1):
        a = round(k * step, 12)
        ok, ell, q = _q_holds(a, beta, max_iter)
        profile.append((a, q))
        if not ok:
            fail = a
            break
        last_ok = a
    if fail is None:
        raise BracketingError(f"q >= 1 holds on the whole scan for beta={beta}", profile)
    lo, hi = last_ok, fail
    n_fine = int(round((hi - lo) / fine_step))
    for k in range(1, n_fine):
        a = lo + k * fine_step
        if not _q_holds(a, beta, max_iter)[0]:
            hi = a
            break
        lo = a
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _q_holds(mid, beta, max_iter)[0]:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), _q_holds(lo, beta, max_iter)[1]


@dataclass(frozen=True)
class ProbeReport:
    case: str
    region: str
    n_points: int
    steps: int
    fraction_in_C: float
    escaped_fraction: float


def _sample(mask_fn, box, n, rng):
    x0, x1, y0, y1 = box
    xs, ys = [], []
    have = 0
    for _ in range(1000):
        x = rng.uniform(x0, x1, 4 * n)
        y = rng.uniform(y0, y1, 4 * n)
        m = mask_fn(x, y)
        xs.append(x[m])
        ys.append(y[m])
        have += int(m.sum())
        if have >= n:
            break
    if have < n:
        raise DegenerateGeometryError(f"region too thin to sample inside box {box}")
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


def trapping_region_probe(params: MapParams, n_points: int = 10_000,
                          steps: int = 100, region: str = "C",
                          box=(-6.0, 6.0, -6.0, 0.0), seed: int = 0,
                          escape_bound: float = 1e6) -> ProbeReport:
    """Sample a region, iterate S~ and report what stays in C.

    Parameters
    ----------
    region : {"C", "D0"}
        Sample the trapping region or the first divergence set.
    box : tuple
        Clip box ``(x0, x1, y0, y1)`` used for rejection sampling.
    """
    dec = decompose(params)
    rng = np.random.default_rng(seed)
    if region == "C":
        mask = dec.in_C
    elif region == "D0":
        mask = lambda x, y: dec.in_D(0, x, y)  # noqa: E731
    else:
        raise ValueError(f"unknown region {region!r}")
    x, y = _sample(mask, box, n_points, rng)
    a, b = params.alpha, params.beta
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            x, y = a * x + y + 1.0, np.where(x < 0, b * x, -b * x)
        gone = ~(np.isfinite(x) & np.isfinite(y)) | (np.abs(x) > escape_bound) \
            | (np.abs(y) > escape_bound)
        inside = dec.in_C(np.where(gone, 0.0, x), np.where(gone, 1.0, y)) & ~gone
    return ProbeReport(dec.case, region, n_points, steps,
                       float(inside.mean()), float(gone.mean()))
