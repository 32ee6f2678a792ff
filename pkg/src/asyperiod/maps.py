"""Piecewise-linear map family, branch inverses and fixed-point data.

The central object is the two-branch map

    S~(x, y) = (a x + y + 1,  b x)   for x < 0
    S~(x, y) = (a x + y + 1, -b x)   for x >= 0

together with its delayed-form twin S(x, y) = (y, a y + T(x)) and the
tent function T.  Every other module reaches the maps through this file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, InvalidInputError, UnsupportedRegimeError

__all__ = [
    "MapParams",
    "Point2",
    "AffineMap",
    "Branch",
    "PiecewiseMap2D",
    "FixedPointReport",
    "StildeKernel",
    "TentMap1D",
    "HatMap1D",
    "tent_T",
    "hat_map",
    "map_S",
    "map_Stilde",
    "conjugacy_h",
    "fixed_points",
    "classify_eigenvalues",
    "inverse_matrix_A",
    "matrix_power_closed_form",
    "delay_step",
    "counterexample_map",
    "stilde",
    "s_delay",
    "counterexample",
]


def _finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"non-finite input {v!r}")


@dataclass(frozen=True)
class MapParams:
    """Parameter pair of the map family.

    Parameters
    ----------
    alpha : float
        Linear feedback coefficient, any finite real.
    beta : float
        Slope of the tent, restricted to ``(1, 2]``.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        _finite(self.alpha, self.beta)
        if not (1.0 < self.beta <= 2.0):
            raise InvalidInputError(f"beta must lie in (1, 2], got {self.beta}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def has_left_fixed(self) -> bool:
        return self.alpha + self.beta > 1.0

    @property
    def has_right_fixed(self) -> bool:
        return self.alpha - self.beta < 1.0

    @property
    def complex_right_eigs(self) -> bool:
        return self.alpha ** 2 < 4.0 * self.beta


class Point2(NamedTuple):
    x: float
    y: float


def _point(p: Sequence[float]) -> Point2:
    x, y = float(p[0]), float(p[1])
    _finite(x, y)
    return Point2(x, y)


@dataclass(frozen=True)
class AffineMap:
    """``v -> matrix @ v + offset`` acting on coordinate arrays."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(2, 2)
        o = np.array(self.offset, dtype=float).reshape(2)
        m.flags.writeable = False
        o.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", o)

    def __call__(self, x, y):
        m, o = self.matrix, self.offset
        return m[0, 0] * x + m[0, 1] * y + o[0], m[1, 0] * x + m[1, 1] * y + o[1]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def inverse(self) -> "AffineMap":
        minv = np.linalg.inv(self.matrix)
        return AffineMap(minv, -minv @ self.offset)


@dataclass(frozen=True)
class Branch:
    """One affine piece of a piecewise map, valid for ``lo <= x < hi``."""

    id: str
    forward: AffineMap
    lo: float = -math.inf
    hi: float = math.inf
    inverse: AffineMap = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "inverse", self.forward.inverse())

    def contains(self, x):
        return (x >= self.lo) & (x < self.hi)


@dataclass(frozen=True)
class PiecewiseMap2D:
    """Branch list acting on coordinate arrays.

    Points not covered by any branch map to NaN, which the operator
    builder reports as a build error.
    """

    branches: tuple
    name: str = "map"

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ox = np.full(np.broadcast(x, y).shape, np.nan)
        oy = np.full_like(ox, np.nan)
        for br in self.branches:
            m = br.contains(x)
            if np.any(m):
                u, v = br.forward(x[m], y[m])
                ox[m] = u
                oy[m] = v
        return ox, oy

    def branch_of(self, x: float) -> Branch:
        for br in self.branches:
            if br.contains(x):
                return br
        raise DomainError(f"x={x} is not covered by any branch of {self.name}")

    def point(self, p: Sequence[float]) -> Point2:
        p = _point(p)
        u, v = self.branch_of(p.x).forward(p.x, p.y)
        return Point2(float(u), float(v))

    def jacobian_det(self, x: float) -> float:
        return self.branch_of(x).forward.det


@dataclass(frozen=True)
class StildeKernel:
    """Fused array form of S~ used for large point clouds."""

    alpha: float
    beta: float

    @classmethod
    def of(cls, params: MapParams) -> "StildeKernel":
        return cls(params.alpha, params.beta)

    def __call__(self, x, y):
        b = self.beta
        return self.alpha * x + y + 1.0, np.where(x < 0, b * x, -b * x)


@dataclass(frozen=True)
class TentMap1D:
    """Vectorized tent function T for a fixed slope."""

    beta: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, self.beta * x, -self.beta * x) + self.beta + 1.0


@dataclass(frozen=True)
class HatMap1D:
    """Vectorized hat map on [0, 1]; points outside map to NaN."""

    a: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= 0.5, self.a * x, self.a * (1.0 - x))
        return np.where((x >= 0) & (x <= 1), out, np.nan)


def tent_T(x: float, params: MapParams) -> float:
    """Tent function with peak ``beta + 1`` at the origin."""
    _finite(x)
    b = params.beta
    return b * x + b + 1.0 if x < 0 else -b * x + b + 1.0


def hat_map(x: float, a: float) -> float:
    """Hat map ``a x`` on [0, 1/2] and ``a (1 - x)`` on (1/2, 1]."""
    _finite(x, a)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"hat map needs x in [0, 1], got {x}")
    if not (1.0 < a <= 2.0):
        raise InvalidInputError(f"hat map needs a in (1, 2], got {a}")
    return a * x if x <= 0.5 else a * (1.0 - x)


def map_S(p: Sequence[float], params: MapParams) -> Point2:
    """Delayed-form map ``(x, y) -> (y, alpha y + T(x))``."""
    p = _point(p)
    return Point2(p.y, params.alpha * p.y + tent_T(p.x, params))


def map_Stilde(p: Sequence[float], params: MapParams) -> Point2:
    """Conjugate form; x = 0 belongs to the right branch."""
    p = _point(p)
    a, b = params.alpha, params.beta
    y = b * p.x if p.x < 0 else -b * p.x
    return Point2(a * p.x + p.y + 1.0, y)


def conjugacy_h(p: Sequence[float], params: MapParams) -> Point2:
    """Change of coordinates taking S to S~ (``S~ o h = h o S``)."""
    p = _point(p)
    b = params.beta
    s = b if p.x < 0 else -b
    return Point2(p.y / (b + 1.0), s * p.x / (b + 1.0))


def delay_step(x_prev: float, x_curr: float, params: MapParams) -> float:
    """One step of ``x[n+1] = alpha x[n] + T(x[n-1])``."""
    _finite(x_prev, x_curr)
    return params.alpha * x_curr + tent_T(x_prev, params)


def counterexample_map(p: Sequence[float]) -> Point2:
    """``(4x mod 1, y/2 mod 1)`` on the unit square."""
    p = _point(p)
    if not (0.0 <= p.x < 1.0 and 0.0 <= p.y < 1.0):
        raise DomainError(f"counterexample map needs p in [0,1)^2, got {tuple(p)}")
    return Point2((4.0 * p.x) % 1.0, (p.y / 2.0) % 1.0)


def stilde(params: MapParams) -> PiecewiseMap2D:
    """S~ as a two-branch affine map."""
    a, b = params.alpha, params.beta
    left = Branch("L", AffineMap([[a, 1.0], [b, 0.0]], [1.0, 0.0]), hi=0.0)
    right = Branch("R", AffineMap([[a, 1.0], [-b, 0.0]], [1.0, 0.0]), lo=0.0)
    return PiecewiseMap2D((left, right), name=f"Stilde(a={a},b={b})")


def s_delay(params: MapParams) -> PiecewiseMap2D:
    """S as a two-branch affine map."""
    a, b = params.alpha, params.beta
    left = Branch("L", AffineMap([[0.0, 1.0], [b, a]], [0.0, b + 1.0]), hi=0.0)
    right = Branch("R", AffineMap([[0.0, 1.0], [-b, a]], [0.0, b + 1.0]), lo=0.0)
    return PiecewiseMap2D((left, right), name=f"S(a={a},b={b})")


def counterexample() -> PiecewiseMap2D:
    """The mod-1 map as four affine branches on [0, 1)^2."""
    branches = tuple(
        Branch(f"K{k}", AffineMap([[4.0, 0.0], [0.0, 0.5]], [-float(k), 0.0]),
               lo=k / 4.0, hi=(k + 1) / 4.0)
        for k in range(4)
    )
    return PiecewiseMap2D(branches, name="counterexample")


@dataclass(frozen=True)
class FixedPointReport:
    """Location, eigenvalues and stability label of one fixed point.

    ``location`` is None when the fixed point does not exist.
    """

    side: str
    location: Point2 | None
    eigenvalues: tuple
    classification: str


def classify_eigenvalues(l1: complex, l2: complex) -> str:
    """Stability label from a pair of Jacobian eigenvalues.

    Complex pairs are labelled by the sign of the real part (focus or
    center).  Real pairs of equal sign with a modulus above one count as an
    unstable node; pairs of opposite sign are a saddle when the moduli
    straddle one.  Repeated eigenvalues or a modulus of exactly one give
    ``"degenerate"``.
    """
    l1, l2 = complex(l1), complex(l2)
    if not all(math.isfinite(v) for v in (l1.real, l1.imag, l2.real, l2.imag)):
        return "degenerate"
    if l1.imag != 0.0 or l2.imag != 0.0:
        re = l1.real
        if re > 0:
            return "unstable-focus"
        if re < 0:
            return "stable-focus"
        return "center"
    r1, r2 = l1.real, l2.real
    if r1 == r2:
        return "degenerate"
    m_lo, m_hi = sorted((abs(r1), abs(r2)))
    if m_lo == 1.0 or m_hi == 1.0:
        return "degenerate"
    if r1 * r2 < 0:
        if m_lo < 1.0 < m_hi:
            return "saddle"
        return "unstable-node" if m_lo > 1.0 else "stable-node"
    return "unstable-node" if m_hi > 1.0 else "stable-node"


def _eig_pair(alpha: float, disc: float) -> tuple:
    if disc >= 0:
        s = math.sqrt(disc)
        return (complex((alpha + s) / 2), complex((alpha - s) / 2))
    s = math.sqrt(-disc)
    return (complex(alpha / 2, s / 2), complex(alpha / 2, -s / 2))


def fixed_points(params: MapParams) -> list[FixedPointReport]:
    """Reports for the left and right fixed points of S~ (in that order)."""
    a, b = params.alpha, params.beta
    lam_l = _eig_pair(a, a * a + 4 * b)
    lam_r = _eig_pair(a, a * a - 4 * b)
    out = []
    if params.has_left_fixed:
        x = 1.0 / (1.0 - a - b)
        out.append(FixedPointReport("L", Point2(x, b * x), lam_l,
                                    classify_eigenvalues(*lam_l)))
    else:
        out.append(FixedPointReport("L", None, lam_l, "absent"))
    if params.has_right_fixed:
        x = 1.0 / (1.0 - a + b)
        out.append(FixedPointReport("R", Point2(x, -b * x), lam_r,
                                    classify_eigenvalues(*lam_r)))
    else:
        out.append(FixedPointReport("R", None, lam_r, "absent"))
    return out


def inverse_matrix_A(params: MapParams) -> tuple[np.ndarray, np.ndarray]:
    """Linear part and offset of the inverse right branch, ``x -> A x + b``."""
    a, b = params.alpha, params.beta
    return np.array([[0.0, -1.0 / b], [1.0, a / b]]), np.array([0.0, -1.0])


def matrix_power_closed_form(n: int, params: MapParams) -> np.ndarray:
    """``A**n`` from the two-term Cayley-Hamilton recurrence.

    With ``t = tr A`` and ``d = det A`` one has ``A**k = s_k A + r_k I`` where
    ``s_{k+1} = t s_k + r_k`` and ``r_{k+1} = -d s_k``.  This is the real
    form of the eigenvalue expression and avoids complex round-off.

    Raises
    ------
    UnsupportedRegimeError
        If ``alpha**2 >= 4 beta`` (eigenvalues of A not a complex pair).
    """
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise InvalidInputError(f"n must be a non-negative integer, got {n!r}")
    if not params.complex_right_eigs:
        raise UnsupportedRegimeError("closed form needs alpha**2 < 4 beta")
    A, _ = inverse_matrix_A(params)
    t = params.alpha / params.beta
    d = 1.0 / params.beta
    s, r = 0.0, 1.0
    for _ in range(int(n)):
        s, r = t * s + r, -d * s
    return s * A + r * np.eye(2)
