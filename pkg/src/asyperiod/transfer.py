"""Ulam discretization of the Frobenius-Perron operator.

Rows of the transition matrix are source cells: ``P[i, j]`` is the
fraction of cell ``i`` mapped into cell ``j``.  Densities are pushed
forward by the left action on cell measures followed by division by the
cell area.  Mass mapped outside the grid is tracked per row and carried
along with every density as ``escaped``; nothing is renormalized behind
the caller's back.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (BuildError, ConvergenceError, CycleNotClosedError,
                     EigenSolverError, InvalidInputError)

__all__ = [
    "Grid",
    "UlamOperator",
    "DensityVector",
    "PeripheralSpectrum",
    "ConvergenceReport",
    "build_ulam",
    "apply",
    "stationary_density",
    "peripheral_spectrum",
    "match_roots_of_unity",
    "spectral_cycle",
    "tent_expected_period",
    "tent_interval",
    "tent_operator",
    "convergence_diagnostics",
    "l1_distance",
    "permutation_operator",
    "save_operator",
    "load_operator",
]

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Grid:
    """Uniform cell grid on an interval or a rectangle.

    Parameters
    ----------
    bounds : tuple
        ``(x0, x1)`` in 1D or ``(x0, x1, y0, y1)`` in 2D.
    nx, ny : int
        Cell counts; ``ny`` is None for a 1D grid and defaults to ``nx``
        in 2D.

    Notes
    -----
    Flat cell index is ``ix * ny + iy``.  Points on the upper edges belong
    to the last cell.
    """

    bounds: tuple
    nx: int
    ny: int | None = None

    def __post_init__(self):
        b = tuple(float(v) for v in self.bounds)
        if len(b) not in (2, 4) or not all(math.isfinite(v) for v in b):
            raise InvalidInputError(f"bad grid bounds {self.bounds!r}")
        if len(b) == 2 and self.ny is not None:
            raise InvalidInputError("1D bounds must omit ny")
        if len(b) == 4 and self.ny is None:
            object.__setattr__(self, "ny", self.nx)
        if b[1] <= b[0] or (len(b) == 4 and b[3] <= b[2]):
            raise InvalidInputError(f"empty grid bounds {b}")
        if self.nx < 2 or (self.ny is not None and self.ny < 2):
            raise InvalidInputError("grids need at least 2 cells per axis")
        object.__setattr__(self, "bounds", b)

    @property
    def ndim(self) -> int:
        return 1 if self.ny is None else 2

    @property
    def n_cells(self) -> int:
        return self.nx * (self.ny or 1)

    @property
    def dx(self) -> float:
        return (self.bounds[1] - self.bounds[0]) / self.nx

    @property
    def dy(self) -> float:
        return 1.0 if self.ny is None else (self.bounds[3] - self.bounds[2]) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple:
        return (self.nx,) if self.ny is None else (self.nx, self.ny)

    def index(self, x, y=None):
        """Flat cell index of each point, -1 outside the grid."""
        x = np.asarray(x, dtype=float)
        x0, x1 = self.bounds[0], self.bounds[1]
        ix = np.floor((x - x0) / self.dx)
        ix = np.where(x == x1, self.nx - 1, ix)
        ok = (x >= x0) & (x <= x1)
        if self.ny is None:
            return np.where(ok, ix, -1).astype(np.int64)
        y = np.asarray(y, dtype=float)
        y0, y1 = self.bounds[2], self.bounds[3]
        iy = np.floor((y - y0) / self.dy)
        iy = np.where(y == y1, self.ny - 1, iy)
        ok &= (y >= y0) & (y <= y1)
        return np.where(ok, ix * self.ny + iy, -1).astype(np.int64)

    def centers(self):
        xs = self.bounds[0] + (np.arange(self.nx) + 0.5) * self.dx
        if self.ny is None:
            return xs
        ys = self.bounds[2] + (np.arange(self.ny) + 0.5) * self.dy
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return X.ravel(), Y.ravel()

    def to_dict(self) -> dict:
        return {"bounds": list(self.bounds), "nx": self.nx, "ny": self.ny}


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class UlamOperator:
    """Row-stochastic (up to escape) cell transition matrix."""

    grid: Grid
    matrix: sp.csr_matrix
    escaped_mass: np.ndarray
    samples_per_cell: int = 0
    seed: int | None = None

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=float)
        m.sum_duplicates()
        m.data.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "escaped_mass",
                           _readonly(np.asarray(self.escaped_mass, dtype=float)))
        n = self.grid.n_cells
        if m.shape != (n, n) or self.escaped_mass.shape != (n,):
            raise InvalidInputError("operator shape does not match its grid")
        if m.nnz and m.data.min() < 0:
            raise InvalidInputError("negative transition weight")

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    def transitions(self, i: int) -> list[tuple[int, float]]:
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return list(zip(self.matrix.indices[lo:hi].tolist(),
                        self.matrix.data[lo:hi].tolist()))

    def row_defect(self) -> float:
        """Largest ``|sum_j P[i, j] + escaped[i] - 1|``."""
        rows = np.asarray(self.matrix.sum(axis=1)).ravel()
        return float(np.max(np.abs(rows + self.escaped_mass - 1.0)))


def permutation_operator(perm: Sequence[int]) -> UlamOperator:
    """Operator on a 1D grid of ``len(perm)`` cells sending cell i to perm[i]."""
    k = len(perm)
    if sorted(perm) != list(range(k)):
        raise InvalidInputError("not a permutation")
    grid = Grid((0.0, float(k)), max(k, 2))
    if k == 1:
        raise InvalidInputError("permutation operator needs at least 2 cells")
    m = sp.csr_matrix((np.ones(k), (np.arange(k), np.asarray(perm))), shape=(k, k))
    return UlamOperator(grid, m, np.zeros(k))


def _stratified_offsets(s: int, ndim: int, n_cells: int, rng) -> tuple:
    """Jittered sample positions in unit-cell coordinates, shape (n_cells, s**ndim)."""
    base = np.arange(s, dtype=float)
    if ndim == 1:
        u = (base[None, :] + rng.random((n_cells, s))) / s
        return (u,)
    gx, gy = np.meshgrid(base, base, indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    u = (gx[None, :] + rng.random((n_cells, s * s))) / s
    v = (gy[None, :] + rng.random((n_cells, s * s))) / s
    return u, v


def build_ulam(fmap: Callable, grid: Grid, samples_per_cell: int = 4,
               seed: int = 0, chunk_samples: int = 1 << 21) -> UlamOperator:
    """Ulam matrix from stratified jittered sampling.

    Parameters
    ----------
    fmap : callable
        Vectorized map: ``fmap(x)`` in 1D, ``fmap(x, y) -> (u, v)`` in 2D.
    samples_per_cell : int
        Strata per axis, so a 2D cell receives ``samples_per_cell**2`` points.
    seed : int
        Seed for the jitter; builds are deterministic given the seed.
    """
    s = int(samples_per_cell)
    if s < 1:
        raise InvalidInputError("samples_per_cell must be >= 1")
    rng = np.random.default_rng(seed)
    n = grid.n_cells
    m = s ** grid.ndim
    per_chunk = max(1, chunk_samples // m)
    keys, counts = [], []
    outside = np.zeros(n, dtype=np.int64)
    for start in range(0, n, per_chunk):
        cells = np.arange(start, min(n, start + per_chunk))
        offs = _stratified_offsets(s, grid.ndim, len(cells), rng)
        if grid.ndim == 1:
            x = grid.bounds[0] + (cells[:, None] + offs[0]) * grid.dx
            with np.errstate(all="ignore"):
                u = np.asarray(fmap(x.ravel()), dtype=float)
            bad = ~np.isfinite(u)
            j = grid.index(np.where(bad, grid.bounds[0], u))
        else:
            ix, iy = cells // grid.ny, cells % grid.ny
            x = grid.bounds[0] + (ix[:, None] + offs[0]) * grid.dx
            y = grid.bounds[2] + (iy[:, None] + offs[1]) * grid.dy
            with np.errstate(all="ignore"):
                u, v = fmap(x.ravel(), y.ravel())
            u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
            bad = ~(np.isfinite(u) & np.isfinite(v))
            j = grid.index(np.where(bad, grid.bounds[0], u),
                           np.where(bad, grid.bounds[2], v))
        if np.any(bad):
            cell = int(np.repeat(cells, m)[np.argmax(bad)])
            raise BuildError(f"map returned a non-finite image for cell {cell}", cell)
        rows = np.repeat(cells, m)
        out = j < 0
        np.add.at(outside, rows[out], 1)
        key = rows[~out].astype(np.int64) * n + j[~out]
        uk, uc = np.unique(key, return_counts=True)
        keys.append(uk)
        counts.append(uc)
    key = np.concatenate(keys) if keys else np.zeros(0, dtype=np.int64)
    cnt = np.concatenate(counts) if counts else np.zeros(0, dtype=np.int64)
    mat = sp.csr_matrix((cnt / m, (key // n, key % n)), shape=(n, n))
    return UlamOperator(grid, mat, outside / m, s, seed)


@dataclass(frozen=True)
class DensityVector:
    """Per-cell density values plus the mass lost through the grid edge.

    ``sum(values) * cell_area + escaped`` equals one for every density
    produced by this module.
    """

    grid: Grid
    values: np.ndarray
    escaped: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.shape != (self.grid.n_cells,):
            raise InvalidInputError(
                f"density has {v.size} entries, grid has {self.grid.n_cells} cells")
        if not np.all(np.isfinite(v)) or (v.size and v.min() < 0):
            raise InvalidInputError("density values must be finite and non-negative")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    @classmethod
    def from_values(cls, grid: Grid, values) -> "DensityVector":
        """Normalize arbitrary non-negative cell weights to a density."""
        v = np.asarray(values, dtype=float).ravel()
        tot = v.sum() * grid.cell_area
        if not tot > 0:
            raise InvalidInputError("cannot normalize a zero density")
        return cls(grid, v / tot)

    @classmethod
    def uniform(cls, grid: Grid, mask=None) -> "DensityVector":
        v = np.ones(grid.n_cells) if mask is None else np.asarray(mask, dtype=float).ravel()
        return cls.from_values(grid, v)

    @classmethod
    def point_mass(cls, grid: Grid, cell: int) -> "DensityVector":
        v = np.zeros(grid.n_cells)
        v[cell] = 1.0
        return cls.from_values(grid, v)

    def normalized(self) -> "DensityVector":
        return DensityVector.from_values(self.grid, self.values)


def _check_grid(P: UlamOperator, f: DensityVector) -> None:
    if f.grid.n_cells != P.n_cells:
        raise InvalidInputError(
            f"density has {f.grid.n_cells} cells, operator has {P.n_cells}")


def _push(P: UlamOperator, values: np.ndarray) -> np.ndarray:
    return P.matrix.T @ values


def apply(P: UlamOperator, f: DensityVector) -> DensityVector:
    """One application of the operator; lost mass is added to ``escaped``."""
    _check_grid(P, f)
    area = P.grid.cell_area
    lost = float(f.values @ P.escaped_mass) * area
    return DensityVector(P.grid, _push(P, f.values), f.escaped + lost)


def l1_distance(f, g, grid: Grid | None = None) -> float:
    """``int |f - g|`` for two densities (or raw value arrays on ``grid``)."""
    if isinstance(f, DensityVector):
        grid = f.grid
        f = f.values
    if isinstance(g, DensityVector):
        grid = g.grid
        g = g.values
    return float(np.abs(np.asarray(f) - np.asarray(g)).sum() * grid.cell_area)


def stationary_density(P: UlamOperator, tol: float = 1e-5, max_iter: int = 2**18,
                       f0: DensityVector | None = None,
                       min_iter: int = 64) -> DensityVector:
    """Cesaro average of the orbit of ``f0`` over its second half.

    The orbit length doubles until the normalized average ``f`` satisfies
    ``||P f - f||_1 < tol``.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` iterations do not reach ``tol``; the last residual
        is attached.
    """
    f = DensityVector.uniform(P.grid) if f0 is None else f0
    _check_grid(P, f)
    area = P.grid.cell_area
    v = f.values.copy()
    n = 0
    target = max(2, int(min_iter))
    residual = math.inf
    while True:
        while n < target // 2:
            v = _push(P, v)
            n += 1
        acc = np.zeros_like(v)
        while n < target:
            acc += v
            v = _push(P, v)
            n += 1
        tot = acc.sum() * area
        if not tot > 0:
            raise ConvergenceError("all mass escaped the grid", math.inf, n)
        avg = acc / tot
        residual = float(np.abs(_push(P, avg) - avg).sum() * area)
        if residual < tol:
            break
        if 2 * target > max_iter:
            raise ConvergenceError(
                f"Cesaro residual {residual:.3e} above tol {tol:.1e} after {n} steps",
                residual, n)
        target *= 2
    leak = avg * P.escaped_mass
    if np.any(leak[avg > 0] > 0) and np.max(P.escaped_mass[avg > 0]) > 1e-6:
        warnings.warn("stationary density sits on cells that leak mass", RuntimeWarning,
                      stacklevel=2)
    return DensityVector(P.grid, avg)


@dataclass(frozen=True)
class PeripheralSpectrum:
    """Eigenvalues near the unit circle and the period they encode.

    ``orders[i]`` is the root-of-unity order assigned to ``eigenvalues[i]``
    or None.  Only orders whose full group of roots is present count
    towards ``detected_period`` and ``detected_r``; the rest are listed in
    ``unmatched``.
    """

    eigenvalues: np.ndarray
    orders: tuple
    complete_orders: tuple
    detected_r: int
    detected_period: int
    unmatched: tuple
    tolerance: float


def _circ_dist(a, b):
    d = np.abs(a - b) % 1.0
    return np.minimum(d, 1.0 - d)


def match_roots_of_unity(eigenvalues, max_order: int = 100, tol: float | None = None,
                         coherence: float = 0.02):
    """Assign each eigenvalue the smallest root-of-unity order within ``tol``.

    Parameters
    ----------
    tol : float, optional
        Angular tolerance in radians; default ``pi / (4 max_order)``.
    coherence : float
        A group of ``q`` roots is complete only if every root is matched
        and the largest matching moduli differ by at most this much.  This
        keeps a slowly decaying mode at a rotated angle from posing as part
        of a larger cycle.

    Returns
    -------
    orders : list
        Order per eigenvalue, None if no root is close enough.
    complete : list of int
        Orders whose every root is matched by some eigenvalue.
    """
    if tol is None:
        tol = math.pi / (4 * max_order)
    turns_tol = tol / (2 * math.pi)
    theta = (np.angle(np.asarray(eigenvalues, dtype=complex)) / (2 * math.pi)) % 1.0
    orders = []
    for t in theta:
        found = None
        for q in range(1, max_order + 1):
            k = round(t * q)
            if _circ_dist(t, k / q) < turns_tol:
                found = q
                break
        orders.append(found)
    mod = np.abs(np.asarray(eigenvalues, dtype=complex))
    complete = []
    for q in sorted({o for o in orders if o is not None}):
        best = []
        for r in np.arange(q) / q:
            hit = _circ_dist(theta, r) < turns_tol
            if not np.any(hit):
                break
            best.append(mod[hit].max())
        else:
            if max(best) - min(best) <= coherence:
                complete.append(q)
    return orders, complete


def _eigs(P: UlamOperator, k: int | None, dense_threshold: int, seed: int) -> np.ndarray:
    n = P.n_cells
    mt = P.matrix.T.tocsr()
    if n <= dense_threshold:
        return np.linalg.eigvals(mt.toarray())
    k = min(n - 2, 48 if k is None else int(k))
    v0 = np.random.default_rng(seed).random(n) + 0.5
    try:
        return spla.eigs(mt, k=k, which="LM", tol=1e-12, maxiter=50_000,
                         v0=v0, return_eigenvectors=False)
    except (spla.ArpackNoConvergence, spla.ArpackError) as exc:
        raise EigenSolverError(f"Krylov eigensolver failed: {exc}") from exc


def peripheral_spectrum(P: UlamOperator, modulus_floor: float = 0.95,
                        max_order: int = 100, n_eigs: int | None = None,
                        dense_threshold: int = 800, seed: int = 0,
                        coherence: float = 0.02) -> PeripheralSpectrum:
    """Largest-modulus eigenvalues matched against roots of unity.

    Small operators use a dense solver; larger ones use restarted Arnoldi
    (``n_eigs`` eigenvalues, default 48).  An order ``q`` is accepted only
    when all ``q`` of its roots appear among the retained eigenvalues.
    """
    if not (0.8 < modulus_floor < 1.0):
        raise InvalidInputError("modulus_floor must lie in (0.8, 1)")
    ev = _eigs(P, n_eigs, dense_threshold, seed)
    keep = ev[np.abs(ev) >= modulus_floor]
    keep = keep[np.argsort(-np.abs(keep), kind="stable")]
    orders, complete = match_roots_of_unity(keep, max_order, coherence=coherence)
    in_group = [o is not None and o in complete for o in orders]
    period = 1
    for q in complete:
        period = math.lcm(period, q)
    unmatched = tuple(complex(z) for z, g in zip(keep, in_group) if not g)
    return PeripheralSpectrum(
        eigenvalues=_readonly(keep), orders=tuple(orders), complete_orders=tuple(complete),
        detected_r=int(sum(in_group)), detected_period=period, unmatched=unmatched,
        tolerance=math.pi / (4 * max_order))


def spectral_cycle(P: UlamOperator, r: int, f0: DensityVector | None = None,
                   burn_in: int = 500, n_periods: int | None = None,
                   cycle_tol: float = 0.05) -> list[DensityVector]:
    """Limit cycle ``g_k = lim P^(n r + k) f0`` by averaging subsequences.

    Each ``g_k`` is normalized; the check is ``||P g_k - g_(k+1)||_1`` on
    normalized densities.

    Raises
    ------
    CycleNotClosedError
        If some defect exceeds ``cycle_tol``.
    """
    if r < 1:
        raise InvalidInputError("r must be positive")
    f = DensityVector.uniform(P.grid) if f0 is None else f0
    _check_grid(P, f)
    if n_periods is None:
        n_periods = max(50, 4000 // r)
    area = P.grid.cell_area
    v = f.values.copy()
    for _ in range(r * math.ceil(burn_in / r)):
        v = _push(P, v)
    acc = np.zeros((r, v.size))
    for _ in range(n_periods):
        for k in range(r):
            acc[k] += v
            v = _push(P, v)
    gs = []
    for k in range(r):
        tot = acc[k].sum() * area
        if not tot > 0:
            raise CycleNotClosedError("all mass escaped the grid", [math.inf])
        gs.append(acc[k] / tot)
    defects = []
    for k in range(r):
        img = _push(P, gs[k])
        tot = img.sum() * area
        img = img / tot if tot > 0 else img
        defects.append(float(np.abs(img - gs[(k + 1) % r]).sum() * area))
    if max(defects) > cycle_tol:
        raise CycleNotClosedError(
            f"cycle defect {max(defects):.3g} > {cycle_tol}; "
            "try a finer grid or more iterations", defects)
    return [DensityVector(P.grid, g) for g in gs]


def tent_expected_period(beta: float) -> int:
    """``2**n`` for the band ``2**(1/2**(n+1)) < beta <= 2**(1/2**n)``."""
    beta = float(beta)
    if not (math.isfinite(beta) and 1.0 < beta <= 2.0):
        raise InvalidInputError(f"beta must lie in (1, 2], got {beta}")
    for n in range(0, 64):
        if 2.0 ** (1.0 / 2 ** (n + 1)) < beta:
            return 2 ** n
    raise InvalidInputError(f"beta={beta} too close to 1 for double precision")


def tent_interval(beta: float) -> tuple[float, float]:
    """Forward-invariant interval ``[1 - beta**2, 1 + beta]`` of T."""
    return 1.0 - beta * beta, 1.0 + beta


def tent_operator(beta: float, nx: int = 2000, samples_per_cell: int = 8,
                  seed: int = 0) -> UlamOperator:
    """1D Ulam operator of the tent function on its invariant interval."""
    from .maps import TentMap1D

    return build_ulam(TentMap1D(float(beta)), Grid(tent_interval(beta), nx),
                      samples_per_cell, seed)


@dataclass(frozen=True)
class ConvergenceReport:
    """Exactness and Cesaro probes plus the concentration probe.

    ``max_density`` lists the largest stationary cell density of each
    operator passed as a refinement, in the order given.
    """

    exactness: tuple
    cesaro: tuple
    max_density: tuple


def convergence_diagnostics(P: UlamOperator, f0: DensityVector, n: int,
                            f_star: DensityVector | None = None,
                            refinements: Sequence[UlamOperator] = (),
                            tol: float = 1e-6) -> ConvergenceReport:
    """Distances ``||P^k f0 - f*||`` and ``||mean_{j<=k} P^j f0 - f*||``."""
    _check_grid(P, f0)
    if f_star is None:
        f_star = stationary_density(P, tol=tol)
    area = P.grid.cell_area
    v = f0.values.copy()
    acc = np.zeros_like(v)
    ex, ce = [], []
    for k in range(int(n)):
        acc += v
        ex.append(float(np.abs(v - f_star.values).sum() * area))
        ce.append(float(np.abs(acc / (k + 1) - f_star.values).sum() * area))
        v = _push(P, v)
    dens = tuple(float(stationary_density(Q, tol=tol).values.max()) for Q in refinements)
    return ConvergenceReport(tuple(ex), tuple(ce), dens)


def _header(P: UlamOperator) -> dict:
    return {"format": "ulam-operator", "version": FORMAT_VERSION,
            "grid": P.grid.to_dict(), "samples_per_cell": P.samples_per_cell,
            "seed": P.seed}


def _grid_from(h: dict) -> Grid:
    g = h["grid"]
    return Grid(tuple(g["bounds"]), g["nx"], g["ny"])


def save_operator(P: UlamOperator, path: str) -> None:
    """Write ``.npz`` (binary) or ``.csv`` (JSON header line + triples)."""
    coo = P.matrix.tocoo()
    h = _header(P)
    if str(path).endswith(".npz"):
        np.savez_compressed(path, row=coo.row, col=coo.col, weight=coo.data,
                            escaped=P.escaped_mass, header=json.dumps(h))
        return
    h["escaped"] = [float(v) for v in P.escaped_mass]
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(h, sort_keys=True) + "\n")
        fh.write("row,col,weight\n")
        for i, j, w in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i},{j},{float(w)!r}\n")


def load_operator(path: str) -> UlamOperator:
    if str(path).endswith(".npz"):
        with np.load(path) as z:
            h = json.loads(str(z["header"]))
            grid = _grid_from(h)
            n = grid.n_cells
            mat = sp.csr_matrix((z["weight"], (z["row"], z["col"])), shape=(n, n))
            esc = z["escaped"]
    else:
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise InvalidInputError("missing JSON header line")
            h = json.loads(first[2:])
            fh.readline()
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        grid = _grid_from(h)
        n = grid.n_cells
        if data.size:
            mat = sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                                shape=(n, n))
        else:
            mat = sp.csr_matrix((n, n))
        esc = np.asarray(h["escaped"])
    if h.get("format") != "ulam-operator":
        raise InvalidInputError("not an operator file")
    return UlamOperator(grid, mat, esc, h.get("samples_per_cell", 0), h.get("seed"))
