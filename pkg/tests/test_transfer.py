from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asyperiod.errors import (BuildError, ConvergenceError, CycleNotClosedError,
                              InvalidInputError)
from asyperiod.maps import HatMap1D, MapParams, stilde
from asyperiod.transfer import (DensityVector, Grid, apply, build_ulam, l1_distance,
                                load_operator, match_roots_of_unity, peripheral_spectrum,
                                permutation_operator, save_operator, spectral_cycle,
                                stationary_density, tent_expected_period, tent_operator,
                                convergence_diagnostics)


def identity(x, y=None):
    return x if y is None else (x, y)


class TestGrid:
    def test_validation(self):
        with pytest.raises(InvalidInputError):
            Grid((0, 1, 0, 1), 1)
        with pytest.raises(InvalidInputError):
            Grid((1, 0, 0, 1), 4)

    def test_index(self):
        g = Grid((0, 1, 0, 1), 4, 2)
        assert g.index(np.array([0.0]), np.array([0.0]))[0] == 0
        assert g.index(np.array([1.0]), np.array([1.0]))[0] == g.n_cells - 1
        assert g.index(np.array([1.5]), np.array([0.5]))[0] == -1


class TestBuild:
    def test_identity(self):
        g = Grid((0, 1, 0, 1), 5)
        P = build_ulam(identity, g)
        assert np.allclose(P.matrix.toarray(), np.eye(25))
        assert P.escaped_mass.max() == 0

    def test_hat_two_cells(self):
        P = build_ulam(HatMap1D(2.0), Grid((0, 1), 2), samples_per_cell=64)
        assert np.allclose(P.matrix.toarray(), 0.5)
        assert P.escaped_mass.max() == 0

    def test_row_sums(self):
        g = Grid((-5, 5, -5, 5), 30)
        P = build_ulam(stilde(MapParams(0.57, 1.1)), g)
        assert P.row_defect() < 1e-12
        assert np.all(P.matrix.data >= 0)

    def test_deterministic(self):
        g = Grid((-5, 5, -5, 5), 20)
        a = build_ulam(stilde(MapParams(0.57, 1.1)), g, seed=3)
        b = build_ulam(stilde(MapParams(0.57, 1.1)), g, seed=3)
        assert (a.matrix != b.matrix).nnz == 0

    def test_nonfinite(self):
        def bad(x, y):
            return np.where(x > 0.5, np.nan, x), y
        with pytest.raises(BuildError) as err:
            build_ulam(bad, Grid((0, 1, 0, 1), 4))
        assert err.value.cell is not None

    def test_immutable(self):
        P = build_ulam(identity, Grid((0, 1, 0, 1), 3))
        with pytest.raises(ValueError):
            P.escaped_mass[0] = 1.0


class TestApply:
    def test_identity(self):
        g = Grid((0, 1, 0, 1), 4)
        P = build_ulam(identity, g)
        f = DensityVector.uniform(g)
        assert np.allclose(apply(P, f).values, f.values)

    def test_hat_uniform_invariant(self):
        g = Grid((0, 1), 2)
        P = build_ulam(HatMap1D(2.0), g, samples_per_cell=64)
        f = DensityVector.uniform(g)
        assert np.allclose(apply(P, f).values, f.values)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_mass_conserved(self, seed):
        g = Grid((0, 1), 16)
        P = build_ulam(HatMap1D(2.0), g)
        v = np.random.default_rng(seed).random(16)
        f = DensityVector.from_values(g, v)
        assert abs(apply(P, f).mass - f.mass) < 1e-12

    def test_escape_reported(self):
        g = Grid((0, 1, 0, 1), 4)
        P = build_ulam(lambda x, y: (x + 0.5, y), g)
        out = apply(P, DensityVector.uniform(g))
        assert out.mass + out.escaped == pytest.approx(1.0)
        assert out.escaped == pytest.approx(0.5)


class TestStationary:
    def test_identity(self):
        g = Grid((0, 1, 0, 1), 4)
        f = stationary_density(build_ulam(identity, g))
        assert np.allclose(f.values, 1.0)

    def test_hat(self):
        g = Grid((0, 1), 64)
        f = stationary_density(build_ulam(HatMap1D(2.0), g))
        assert np.allclose(f.values, 1.0, atol=1e-5)

    def test_nonconvergence(self):
        P = permutation_operator([1, 2, 0])
        with pytest.raises(ConvergenceError) as err:
            stationary_density(P, tol=1e-30, max_iter=256,
                               f0=DensityVector.point_mass(P.grid, 0))
        assert np.isfinite(err.value.residual)

    def test_leak_warning(self):
        g = Grid((0, 1, 0, 1), 4)
        # a sliver of the top row escapes while the uniform density stays stationary
        P = build_ulam(lambda x, y: (x, y * 1.00001), g, samples_per_cell=64)
        assert P.escaped_mass.max() > 0
        with pytest.warns(RuntimeWarning):
            stationary_density(P)


class TestSpectrum:
    def test_identity(self):
        spec = peripheral_spectrum(permutation_operator([0, 1, 2, 3]))
        assert spec.detected_period == 1 and spec.detected_r == 4

    @pytest.mark.parametrize("k", range(2, 9))
    def test_cycle(self, k):
        spec = peripheral_spectrum(permutation_operator([(i + 1) % k for i in range(k)]))
        assert spec.detected_period == k
        assert np.allclose(sorted(np.angle(spec.eigenvalues) % (2 * np.pi)),
                           2 * np.pi * np.arange(k) / k, atol=1e-9)

    def test_two_cycles(self):
        spec = peripheral_spectrum(permutation_operator([1, 0, 3, 4, 2]))
        assert spec.detected_period == 6

    def test_floor(self):
        with pytest.raises(InvalidInputError):
            peripheral_spectrum(permutation_operator([1, 0]), modulus_floor=0.5)

    def test_unmatched_flagged(self):
        orders, complete = match_roots_of_unity([1.0, np.exp(2j * np.pi * 0.1234567)],
                                                max_order=3)
        assert orders[1] is None and complete == [1]

    def test_incomplete_group_ignored(self):
        _, complete = match_roots_of_unity([1.0, 1j])
        assert complete == [1]

    def test_incoherent_group_ignored(self):
        _, complete = match_roots_of_unity([1.0, -0.9], coherence=0.02)
        assert complete == [1]

    def test_stilde_period(self):
        prm = MapParams(0.57, 1.1)
        from asyperiod.ensemble import attractor_grid
        P = build_ulam(stilde(prm), attractor_grid(prm))
        assert peripheral_spectrum(P).detected_period == 5


class TestCycle:
    def test_three_cycle(self):
        P = permutation_operator([1, 2, 0])
        gs = spectral_cycle(P, 3, DensityVector.point_mass(P.grid, 0))
        for k, g in enumerate(gs):
            assert np.argmax(g.values) == k

    def test_r1_is_stationary(self):
        g = Grid((0, 1), 32)
        P = build_ulam(HatMap1D(2.0), g)
        gs = spectral_cycle(P, 1)
        assert l1_distance(gs[0], stationary_density(P)) < 1e-6

    def test_not_closed(self):
        P = permutation_operator([1, 2, 0])
        with pytest.raises(CycleNotClosedError):
            spectral_cycle(P, 2, DensityVector.point_mass(P.grid, 0), burn_in=0, n_periods=1)


class TestTent:
    @pytest.mark.parametrize("beta,n", [(2.0, 1), (1.5, 1), (1.3, 2), (1.15, 4), (1.05, 8)])
    def test_band(self, beta, n):
        assert tent_expected_period(beta) == n

    def test_detect(self):
        assert peripheral_spectrum(tent_operator(1.3)).detected_period == 2


class TestDiagnostics:
    def test_hat_exact(self):
        g = Grid((0, 1), 64)
        P = build_ulam(HatMap1D(2.0), g)
        f0 = DensityVector.point_mass(g, 5)
        rep = convergence_diagnostics(P, f0, 64)
        assert rep.exactness[-1] < 1e-6


class TestIO:
    @pytest.mark.parametrize("suffix", [".npz", ".csv"])
    def test_round_trip(self, tmp_path, suffix):
        g = Grid((-5, 5, -5, 5), 12, 10)
        P = build_ulam(stilde(MapParams(0.57, 1.1)), g, seed=4)
        path = tmp_path / f"op{suffix}"
        save_operator(P, str(path))
        Q = load_operator(str(path))
        assert Q.grid.to_dict() == g.to_dict()
        assert np.allclose(Q.matrix.toarray(), P.matrix.toarray(), rtol=0, atol=1e-15)
        assert np.allclose(Q.escaped_mass, P.escaped_mass, rtol=0, atol=1e-15)
