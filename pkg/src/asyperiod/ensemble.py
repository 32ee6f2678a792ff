"""Point-cloud estimates of density supports and their period.

A large uniform cloud is pushed forward; after the burn-in the occupied
cells of a grid approximate the support of ``P^n f0``.  Connected pieces
of that support are the supports of the cycle densities, and the way one
map step moves them gives the period.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _scc

from .errors import (AmbiguousPermutationError, DivergenceError,
                     EmptySupportError, InvalidInputError)
from .maps import MapParams, StildeKernel
from .transfer import Grid

__all__ = [
    "PointCloud",
    "OccupancyGrid",
    "Components",
    "SupportCycle",
    "DetectionSettings",
    "SupportReport",
    "ScanRow",
    "initial_cloud",
    "iterate_cloud",
    "cloud_grid",
    "occupancy",
    "connected_components",
    "component_permutation",
    "cyclic_class_period",
    "analyze_support",
    "detect_period",
    "period_scan",
    "farey_check",
    "attractor_grid",
    "write_pgm",
    "write_occupancy_csv",
]


@dataclass(frozen=True)
class PointCloud:
    """Surviving points plus a tally of the ones that left the box."""

    x: np.ndarray
    y: np.ndarray
    escaped_count: int = 0
    initial_count: int | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise InvalidInputError("x and y must have the same length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.initial_count is None:
            object.__setattr__(self, "initial_count", x.size + self.escaped_count)

    def __len__(self) -> int:
        return self.x.size

    @property
    def escaped_fraction(self) -> float:
        return self.escaped_count / self.initial_count if self.initial_count else 0.0


def initial_cloud(n_side: int = 1000, box: float = 5.0, seed: int = 0) -> PointCloud:
    """``n_side**2`` points drawn uniformly from ``[-box, box]**2``."""
    rng = np.random.default_rng(seed)
    n = int(n_side) ** 2
    return PointCloud(rng.uniform(-box, box, n), rng.uniform(-box, box, n))


def iterate_cloud(cloud: PointCloud, fmap: Callable, steps: int,
                  bound: float = 50.0) -> PointCloud:
    """Advance every point ``steps`` times, dropping points that leave the box.

    Points with a coordinate outside ``[-bound, bound]`` (or non-finite)
    after any step are removed and counted in ``escaped_count``.
    """
    if steps < 0 or not bound > 0:
        raise InvalidInputError("steps must be >= 0 and bound > 0")
    x, y = cloud.x, cloud.y
    gone = cloud.escaped_count
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(int(steps)):
            x, y = fmap(x, y)
            keep = (np.abs(x) <= bound) & (np.abs(y) <= bound)
            if not keep.all():
                gone += int(keep.size - keep.sum())
                x, y = x[keep], y[keep]
    return PointCloud(x, y, gone, cloud.initial_count)


def cloud_grid(cloud: PointCloud, nx: int, ny: int | None = None,
               pad: float = 0.01) -> Grid:
    """Grid over the bounding box of the cloud, padded by a fraction."""
    if len(cloud) == 0:
        raise EmptySupportError("cannot fit a grid to an empty cloud")
    x0, x1 = float(cloud.x.min()), float(cloud.x.max())
    y0, y1 = float(cloud.y.min()), float(cloud.y.max())
    wx = max(x1 - x0, 1e-9)
    wy = max(y1 - y0, 1e-9)
    return Grid((x0 - pad * wx, x1 + pad * wx, y0 - pad * wy, y1 + pad * wy),
                nx, ny or nx)


@dataclass(frozen=True)
class OccupancyGrid:
    grid: Grid
    counts: np.ndarray
    min_count: int = 1

    @property
    def occupied(self) -> np.ndarray:
        return self.counts >= self.min_count


def occupancy(cloud: PointCloud, grid: Grid, min_count: int = 1) -> OccupancyGrid:
    """Per-cell point tallies; points outside the grid are ignored."""
    if min_count < 1:
        raise InvalidInputError("min_count must be >= 1")
    idx = grid.index(cloud.x, cloud.y)
    idx = idx[idx >= 0]
    counts = np.bincount(idx, minlength=grid.n_cells).reshape(grid.shape)
    return OccupancyGrid(grid, counts, int(min_count))


@dataclass(frozen=True)
class Components:
    """Labelled support pieces: ``labels`` holds 1..k, 0 for empty cells."""

    labels: np.ndarray
    sizes: tuple
    masses: tuple
    occupancy: OccupancyGrid

    @property
    def k(self) -> int:
        return len(self.sizes)

    def cells(self, i: int) -> np.ndarray:
        """Flat cell indices of component ``i`` (1-based)."""
        return np.flatnonzero(self.labels.ravel() == i)


def connected_components(occ: OccupancyGrid, connectivity: int = 8,
                         min_cells: int = 20, min_mass: float = 0.0) -> Components:
    """Flood-fill labelling of occupied cells with size filters.

    Parameters
    ----------
    connectivity : {4, 8}
    min_cells : int
        Components with fewer cells are dropped as sampling noise.
    min_mass : float
        Components holding less than this fraction of all tallied points
        are dropped too.
    """
    if connectivity == 4:
        structure = ndimage.generate_binary_structure(2, 1)
    elif connectivity == 8:
        structure = np.ones((3, 3), dtype=bool)
    else:
        raise InvalidInputError("connectivity must be 4 or 8")
    occupied = occ.occupied
    if occupied.ndim == 1:
        occupied = occupied[:, None]
    raw, n = ndimage.label(occupied, structure=structure)
    total = occ.counts.sum()
    labels = np.zeros_like(raw)
    sizes, masses = [], []
    if n:
        cell_sizes = np.bincount(raw.ravel(), minlength=n + 1)
        point_mass = np.bincount(raw.ravel(), weights=occ.counts.ravel().astype(float),
                                 minlength=n + 1)
        for lab in range(1, n + 1):
            if cell_sizes[lab] < min_cells or point_mass[lab] < min_mass * total:
                continue
            labels[raw == lab] = len(sizes) + 1
            sizes.append(int(cell_sizes[lab]))
            masses.append(int(point_mass[lab]))
    if not sizes:
        raise EmptySupportError("no component survives the size filters")
    return Components(labels.reshape(occ.counts.shape), tuple(sizes), tuple(masses), occ)


@dataclass(frozen=True)
class SupportCycle:
    """How one map step moves the support components.

    ``permutation[i]`` is the image of component ``i + 1`` (1-based labels)
    when a clear bijection was found; it is None when the period came
    from the transition graph instead.  ``cycles`` lists the component
    cycles (permutation method) or the closed classes with their cyclic
    period (graph method).
    """

    components: Components
    permutation: tuple | None
    period: int
    cycles: tuple
    method: str
    votes: np.ndarray = field(repr=False, default=None)


def _label_points(comps: Components, x, y) -> np.ndarray:
    idx = comps.occupancy.grid.index(x, y)
    flat = comps.labels.ravel()
    return np.where(idx >= 0, flat[np.maximum(idx, 0)], 0)


def _representatives(comps: Components, cloud: PointCloud | None):
    if cloud is not None:
        return cloud.x, cloud.y
    cx, cy = comps.occupancy.grid.centers()
    m = comps.labels.ravel() > 0
    return cx[m], cy[m]


def _vote_matrix(comps: Components, fmap: Callable, cloud: PointCloud | None) -> np.ndarray:
    """``votes[i, j]``: points of component i landing in component j (0 = none)."""
    x, y = _representatives(comps, cloud)
    src = _label_points(comps, x, y)
    m = src > 0
    with np.errstate(over="ignore", invalid="ignore"):
        u, v = fmap(x[m], y[m])
    dst = _label_points(comps, u, v)
    k = comps.k
    votes = np.bincount(src[m] * (k + 1) + dst, minlength=(k + 1) ** 2)
    return votes.reshape(k + 1, k + 1)


def _cycles_of(perm: Sequence[int]) -> list[list[int]]:
    seen, cycles = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, j = [], start
        while j not in seen:
            seen.add(j)
            cyc.append(j + 1)
            j = perm[j] - 1
        cycles.append(cyc)
    return cycles


def component_permutation(comps: Components, fmap: Callable,
                          cloud: PointCloud | None = None,
                          majority: float = 0.9) -> SupportCycle:
    """Majority-vote map from components to components.

    Each component's points (the cloud if given, else its cell centres)
    are advanced one step; the component receiving at least ``majority``
    of them is its image.

    Raises
    ------
    AmbiguousPermutationError
        If a vote is below ``majority`` or the result is not a bijection.
    """
    votes = _vote_matrix(comps, fmap, cloud)
    k = comps.k
    perm = []
    for i in range(1, k + 1):
        row = votes[i]
        tot = row.sum()
        j = int(np.argmax(row[1:])) + 1
        if tot == 0 or row[j] < majority * tot:
            share = row[j] / tot if tot else 0.0
            raise AmbiguousPermutationError(
                f"component {i}: best destination {j} holds {share:.1%} < {majority:.0%}",
                votes)
        perm.append(j)
    if sorted(perm) != list(range(1, k + 1)):
        raise AmbiguousPermutationError(f"vote {perm} is not a bijection", votes)
    cycles = _cycles_of(perm)
    period = 1
    for c in cycles:
        period = math.lcm(period, len(c))
    return SupportCycle(comps, tuple(perm), period, tuple(tuple(c) for c in cycles),
                        "permutation", votes)


def _class_period(nodes: list[int], adj: np.ndarray) -> int:
    """Cyclicity of a strongly connected class: gcd of level differences."""
    level = {nodes[0]: 0}
    order = [nodes[0]]
    node_set = set(nodes)
    g = 0
    for u in order:
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v not in node_set:
                continue
            if v not in level:
                level[v] = level[u] + 1
                order.append(v)
            else:
                g = math.gcd(g, abs(level[u] + 1 - level[v]))
    return g or 1


def cyclic_class_period(comps: Components, fmap: Callable,
                        cloud: PointCloud | None = None,
                        edge_threshold: float = 0.05) -> SupportCycle:
    """Period from the component transition graph.

    An edge ``i -> j`` exists when at least ``edge_threshold`` of the
    points of component ``i`` land in ``j``.  Each closed strongly
    connected class contributes its cyclicity (gcd of cycle lengths); the
    period is the lcm over classes.  This tolerates components that are
    split or merged by the grid, where a strict bijection is not visible.
    """
    votes = _vote_matrix(comps, fmap, cloud)[1:, 1:].astype(float)
    k = comps.k
    tot = votes.sum(axis=1, keepdims=True)
    adj = (votes >= edge_threshold * np.maximum(tot, 1)) & (votes > 0)
    n_cls, lab = _scc(csr_matrix(adj), directed=True, connection="strong")
    classes = []
    period = 1
    for c in range(n_cls):
        nodes = [int(i) for i in np.flatnonzero(lab == c)]
        sub = adj[np.ix_(nodes, nodes)]
        leaves = adj[nodes][:, lab != c].any()
        if leaves or not sub.any():
            continue
        per = _class_period(nodes, adj)
        classes.append((tuple(i + 1 for i in nodes), per))
        period = math.lcm(period, per)
    if not classes:
        raise AmbiguousPermutationError("transition graph has no closed class",
                                        votes)
    return SupportCycle(comps, None, period, tuple(classes), "transition-graph",
                        votes)


@dataclass(frozen=True)
class DetectionSettings:
    """Knobs of the support pipeline; defaults are the desk settings."""

    n_side: int = 1000
    box: float = 5.0
    burn_in: int = 500
    resolution: int = 512
    min_count: int = 1
    min_cells: int = 20
    min_mass: float = 0.002
    connectivity: int = 8
    majority: float = 0.9
    edge_threshold: float = 0.05
    escape_bound: float = 50.0
    divergence_fraction: float = 0.99
    pad: float = 0.01
    seed: int = 0
    fallback: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class SupportReport:
    params: MapParams
    period: int
    n_components: int
    escaped_fraction: float
    cycle: SupportCycle
    occupancy: OccupancyGrid
    method: str
    settings: DetectionSettings


def analyze_support(params: MapParams,
                    settings: DetectionSettings = DetectionSettings()) -> SupportReport:
    """Cloud, burn-in, occupancy, components, then the period.

    The strict permutation vote is tried first; if it is ambiguous and
    ``settings.fallback`` is set, the transition-graph cyclicity is used.

    Raises
    ------
    DivergenceError
        When more than ``settings.divergence_fraction`` of the points escape.
    """
    s = settings
    fmap = StildeKernel.of(params)
    cloud = iterate_cloud(initial_cloud(s.n_side, s.box, s.seed), fmap, s.burn_in,
                          s.escape_bound)
    if len(cloud) == 0 or cloud.escaped_fraction > s.divergence_fraction:
        raise DivergenceError(
            f"{cloud.escaped_fraction:.2%} of points escaped at "
            f"alpha={params.alpha}, beta={params.beta}", cloud.escaped_fraction)
    grid = cloud_grid(cloud, s.resolution, pad=s.pad)
    occ = occupancy(cloud, grid, s.min_count)
    comps = connected_components(occ, s.connectivity, s.min_cells, s.min_mass)
    try:
        cyc = component_permutation(comps, fmap, cloud, s.majority)
    except AmbiguousPermutationError:
        if not s.fallback:
            raise
        cyc = cyclic_class_period(comps, fmap, cloud, s.edge_threshold)
    return SupportReport(params, cyc.period, comps.k, cloud.escaped_fraction, cyc, occ,
                         cyc.method, s)


def detect_period(params: MapParams,
                  settings: DetectionSettings = DetectionSettings()) -> int:
    """Period of the support cycle (see :func:`analyze_support`)."""
    return analyze_support(params, settings).period


@dataclass(frozen=True)
class ScanRow:
    alpha: float
    period: int | None
    n_components: int | None
    escaped_fraction: float | None
    status: str


def _scan_one(args) -> ScanRow:
    alpha, beta, settings = args
    try:
        rep = analyze_support(MapParams(alpha, beta), settings)
    except DivergenceError as exc:
        return ScanRow(alpha, None, None, exc.escaped_fraction, "divergent")
    except AmbiguousPermutationError:
        return ScanRow(alpha, None, None, None, "ambiguous")
    except EmptySupportError:
        return ScanRow(alpha, None, None, None, "empty")
    return ScanRow(alpha, rep.period, rep.n_components, rep.escaped_fraction, "ok")


def scan_alphas(alpha_from: float, alpha_to: float, step: float) -> list[float]:
    if not step > 0:
        raise InvalidInputError("step must be positive")
    if alpha_to < alpha_from:
        return []
    n = int(math.floor((alpha_to - alpha_from) / step + 1e-9)) + 1
    return [round(alpha_from + k * step, 10) for k in range(n)]


def period_scan(beta: float, alpha_from: float, alpha_to: float, step: float,
                settings: DetectionSettings = DetectionSettings(),
                workers: int = 1, alphas: Sequence[float] | None = None) -> list[ScanRow]:
    """Detect the period on an alpha grid; failures become row markers.

    Rows are independent; ``workers > 1`` runs them in separate processes.
    An explicit ``alphas`` list overrides the range.
    """
    MapParams(0.0, beta)
    grid = list(alphas) if alphas is not None else scan_alphas(alpha_from, alpha_to, step)
    jobs = [(a, beta, settings) for a in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_scan_one, jobs))
    return [_scan_one(j) for j in jobs]


def farey_check(rows: Sequence[ScanRow]) -> list[bool]:
    """Mark rows whose period is the sum of the nearest flanking periods.

    Flanks are the closest rows on each side with a detected period other
    than 1 and other than the row's own period; period-1 rows are the
    stable background between windows and are skipped.
    """
    per = [r.period for r in rows]
    out = []
    for i, p in enumerate(per):
        if p is None or p == 1:
            out.append(False)
            continue
        left = next((q for q in reversed(per[:i]) if q not in (None, 1, p)), None)
        right = next((q for q in per[i + 1:] if q not in (None, 1, p)), None)
        out.append(left is not None and right is not None and p == left + right)
    return out


def attractor_grid(params: MapParams, res: int = 200, n_side: int = 300,
                   burn_in: int = 500, pad: float = 0.05, seed: int = 0,
                   box: float = 5.0, bound: float = 50.0) -> Grid:
    """Grid over the bounding box of a burnt-in cloud, for Ulam operators."""
    fmap = StildeKernel.of(params)
    cloud = iterate_cloud(initial_cloud(n_side, box, seed), fmap, burn_in, bound)
    if len(cloud) == 0:
        raise DivergenceError("all points escaped", 1.0)
    return cloud_grid(cloud, res, pad=pad)


def write_pgm(occ: OccupancyGrid, path: str, header: str | None = None) -> None:
    """Plain-text graymap, y increasing upwards, log-scaled counts."""
    c = occ.counts.astype(float)
    top = c.max()
    img = np.zeros_like(c) if top <= 0 else np.rint(255 * np.log1p(c) / np.log1p(top))
    img = img.astype(int).T[::-1]
    with open(path, "w") as fh:
        fh.write("P2\n")
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"{img.shape[1]} {img.shape[0]}\n255\n")
        for row in img:
            fh.write(" ".join(map(str, row)) + "\n")


def write_occupancy_csv(occ: OccupancyGrid, path: str, labels: np.ndarray | None = None) -> None:
    """Non-empty cells as ``ix,iy,x,y,count[,component]`` rows."""
    g = occ.grid
    cx, cy = g.centers()
    flat = occ.counts.ravel()
    lab = None if labels is None else labels.ravel()
    with open(path, "w") as fh:
        fh.write("ix,iy,x,y,count" + (",component" if lab is not None else "") + "\n")
        for i in np.flatnonzero(flat):
            row = f"{i // g.ny},{i % g.ny},{float(cx[i])!r},{float(cy[i])!r},{int(flat[i])}"
            if lab is not None:
                row += f",{lab[i]}"
            fh.write(row + "\n")
