from __future__ import annotations

import numpy as np
import pytest

from asyperiod.ensemble import (DetectionSettings, OccupancyGrid, PointCloud, ScanRow,
                                analyze_support, cloud_grid, component_permutation,
                                connected_components, cyclic_class_period, farey_check,
                                initial_cloud, iterate_cloud, occupancy, scan_alphas,
                                write_occupancy_csv, write_pgm)
from asyperiod.errors import DivergenceError, EmptySupportError, InvalidInputError
from asyperiod.maps import MapParams, StildeKernel
from asyperiod.transfer import Grid

SMALL = DetectionSettings(n_side=300, burn_in=300, resolution=256)


def _occ(mask):
    mask = np.asarray(mask, dtype=bool)
    g = Grid((0, 1, 0, 1), mask.shape[0], mask.shape[1])
    return OccupancyGrid(g, mask.astype(int))


class TestCloud:
    def test_initial(self):
        c = initial_cloud(10, 2.0, seed=1)
        assert len(c) == 100 and c.escaped_count == 0
        assert np.all(np.abs(c.x) <= 2) and np.all(np.abs(c.y) <= 2)

    def test_zero_steps(self):
        c = initial_cloud(5)
        d = iterate_cloud(c, StildeKernel.of(MapParams(0.57, 1.1)), 0)
        assert np.array_equal(c.x, d.x) and np.array_equal(c.y, d.y)

    def test_origin(self):
        c = PointCloud(np.array([0.0]), np.array([0.0]))
        d = iterate_cloud(c, StildeKernel.of(MapParams(0.57, 1.1)), 1)
        assert (d.x[0], d.y[0]) == pytest.approx((1.0, 0.0))

    def test_escape(self):
        c = iterate_cloud(initial_cloud(100), StildeKernel.of(MapParams(2.5, 1.2)), 100)
        assert c.escaped_fraction > 0.99
        assert len(c) + c.escaped_count == c.initial_count

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            iterate_cloud(initial_cloud(2), lambda x, y: (x, y), -1)
        with pytest.raises(InvalidInputError):
            PointCloud(np.zeros(2), np.zeros(3))

    def test_deterministic(self):
        a, b = initial_cloud(20, seed=7), initial_cloud(20, seed=7)
        assert np.array_equal(a.x, b.x)


class TestOccupancy:
    def test_empty_cloud(self):
        with pytest.raises(EmptySupportError):
            cloud_grid(PointCloud(np.zeros(0), np.zeros(0)), 8)
        occ = occupancy(PointCloud(np.zeros(0), np.zeros(0)), Grid((0, 1, 0, 1), 4))
        assert occ.counts.sum() == 0

    def test_single_point(self):
        c = PointCloud(np.array([0.3]), np.array([0.6]))
        occ = occupancy(c, cloud_grid(c, 8))
        assert occ.counts.sum() == 1 and occ.occupied.sum() == 1

    def test_outside_ignored(self):
        c = PointCloud(np.array([0.5, 3.0]), np.array([0.5, 0.5]))
        assert occupancy(c, Grid((0, 1, 0, 1), 4)).counts.sum() == 1

    def test_min_count(self):
        with pytest.raises(InvalidInputError):
            occupancy(initial_cloud(2), Grid((0, 1, 0, 1), 4), min_count=0)


class TestComponents:
    def test_full_grid(self):
        comps = connected_components(_occ(np.ones((10, 10))), min_cells=1)
        assert comps.k == 1 and comps.sizes == (100,)

    def test_diagonal_connectivity(self):
        m = np.zeros((6, 6))
        m[0, 0] = m[1, 1] = 1
        assert connected_components(_occ(m), 8, min_cells=1).k == 1
        assert connected_components(_occ(m), 4, min_cells=1).k == 2

    def test_filters(self):
        m = np.zeros((20, 20))
        m[:5, :5] = 1
        m[15, 15] = 1
        comps = connected_components(_occ(m), min_cells=2)
        assert comps.k == 1 and comps.sizes == (25,)
        with pytest.raises(EmptySupportError):
            connected_components(_occ(m), min_cells=30)
        with pytest.raises(InvalidInputError):
            connected_components(_occ(m), connectivity=6)


class TestPeriod:
    def test_single_component(self):
        m = np.zeros((10, 10))
        m[2:8, 2:8] = 1
        comps = connected_components(_occ(m), min_cells=1)
        cyc = component_permutation(comps, lambda x, y: (x, y))
        assert cyc.period == 1 and cyc.permutation == (1,)

    def test_swap(self):
        m = np.zeros((10, 10))
        m[0:3, :] = 1
        m[7:10, :] = 1
        comps = connected_components(_occ(m), min_cells=1)
        swap = lambda x, y: (1 - x, y)
        assert component_permutation(comps, swap).period == 2
        assert cyclic_class_period(comps, swap).period == 2

    def test_five_cycle(self):
        rep = analyze_support(MapParams(0.57, 1.1), SMALL)
        assert rep.period == 5 and rep.n_components == 5
        assert rep.method == "permutation"

    def test_divergent(self):
        with pytest.raises(DivergenceError):
            analyze_support(MapParams(2.5, 1.2), SMALL)

    def test_deterministic(self):
        a = analyze_support(MapParams(0.57, 1.1), SMALL)
        b = analyze_support(MapParams(0.57, 1.1), SMALL)
        assert np.array_equal(a.occupancy.counts, b.occupancy.counts)


class TestScan:
    def test_alphas(self):
        assert scan_alphas(0.0, 0.3, 0.1) == [0.0, 0.1, 0.2, 0.3]
        assert scan_alphas(1.0, 0.0, 0.1) == []
        with pytest.raises(InvalidInputError):
            scan_alphas(0, 1, 0)

    def test_farey(self):
        rows = [ScanRow(a, p, None, 0.0, "ok")
                for a, p in zip(range(7), [13, 1, 35, 1, 22, None, 9])]
        assert farey_check(rows) == [False, False, True, False, False, False, False]


class TestWriters:
    def test_pgm(self, tmp_path):
        occ = _occ(np.eye(4))
        path = tmp_path / "a.pgm"
        write_pgm(occ, str(path), header="alpha=0.5")
        lines = path.read_text().splitlines()
        assert lines[0] == "P2" and lines[1] == "# alpha=0.5" and lines[2] == "4 4"
        assert lines[3] == "255" and len(lines) == 8

    def test_csv(self, tmp_path):
        occ = _occ(np.eye(3))
        path = tmp_path / "a.csv"
        write_occupancy_csv(occ, str(path), labels=np.eye(3, dtype=int))
        lines = path.read_text().splitlines()
        assert lines[0] == "ix,iy,x,y,count,component" and len(lines) == 4
        assert "np." not in path.read_text()
