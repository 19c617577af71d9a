"""Tests for telegraph fluctuators and 1/f noise synthesis."""

import numpy as np
import pytest
from scipy import signal

from opendyn.bath import FluctuatorEnsemble, sample_fluctuator_path


def lorentzian_sum(ens: FluctuatorEnsemble, omega: np.ndarray) -> np.ndarray:
    """Two-sided PSD of Σ bᵢ·RTNᵢ: each term bᵢ²·4γᵢ/(4γᵢ² + ω²)."""
    b2 = ens.amplitudes[:, None] ** 2
    g = ens.rates[:, None]
    return np.sum(b2 * 4 * g / (4 * g**2 + omega[None, :] ** 2), axis=0)


def log_log_slope(f: np.ndarray, psd: np.ndarray) -> float:
    return float(np.polyfit(np.log(f), np.log(psd), 1)[0])


# ============================================
# ENSEMBLES
# ============================================

class TestFluctuatorEnsemble:
    def test_grid_spacing_is_log_uniform(self):
        ens = FluctuatorEnsemble.log_uniform(0.1, 0.01, 1.0, n=5)
        np.testing.assert_allclose(ens.rates, [0.01, 0.01 * 10**0.5, 0.1, 0.1 * 10**0.5, 1.0])
        assert len(ens) == 5
        assert np.all(ens.amplitudes == 0.1)

    def test_random_spacing_is_seeded(self):
        a = FluctuatorEnsemble.log_uniform(0.1, 0.01, 1.0, n=8, spacing="random", seed=3)
        b = FluctuatorEnsemble.log_uniform(0.1, 0.01, 1.0, n=8, spacing="random", seed=3)
        np.testing.assert_array_equal(a.rates, b.rates)
        assert np.all((a.rates >= 0.01) & (a.rates <= 1.0))

    @pytest.mark.parametrize("bounds", [(0.0, 1.0), (1.0, 0.5), (-1.0, 1.0)])
    def test_bad_band(self, bounds):
        with pytest.raises(ValueError):
            FluctuatorEnsemble.log_uniform(0.1, *bounds)

    def test_silent(self):
        assert FluctuatorEnsemble.single(0.0, 1.0).silent
        assert not FluctuatorEnsemble.single(0.2, 1.0).silent

    def test_band_spectrum_slope(self):
        ens = FluctuatorEnsemble.log_uniform(0.05, 0.1, 10.0, n=10)
        omega = 2 * np.geomspace(3 * 0.1, 10.0 / 3, 40)
        assert log_log_slope(omega, lorentzian_sum(ens, omega)) == pytest.approx(-1.0, abs=0.15)


# ============================================
# SAMPLED PATHS
# ============================================

class TestTelegraphPath:
    def test_values_are_plus_minus_b(self):
        path = sample_fluctuator_path(FluctuatorEnsemble.single(0.3, 2.0), 10.0, seed=1)
        values = path.sample(np.linspace(0.0, 10.0, 501))
        assert set(np.round(np.abs(values), 12)) == {0.3}

    def test_switch_times_inside_horizon(self):
        path = sample_fluctuator_path(FluctuatorEnsemble.log_uniform(0.1, 0.5, 5.0, n=4), 20.0, seed=7)
        bp = path.breakpoints
        assert np.all((bp > 0) & (bp < 20.0))
        assert np.all(np.diff(bp) > 0)

    def test_segments_are_constant(self):
        path = sample_fluctuator_path(FluctuatorEnsemble.single(1.0, 1.0), 5.0, seed=11)
        for start, end, value in path.segments():
            mid = 0.5 * (start + end)
            assert path(mid) == value

    def test_same_seed_same_path(self):
        ens = FluctuatorEnsemble.log_uniform(0.1, 0.5, 5.0, n=3)
        a = sample_fluctuator_path(ens, 10.0, seed=np.random.SeedSequence(5, spawn_key=(2,)))
        b = sample_fluctuator_path(ens, 10.0, seed=np.random.SeedSequence(5, spawn_key=(2,)))
        np.testing.assert_array_equal(a.breakpoints, b.breakpoints)
        np.testing.assert_array_equal(a.initial_signs, b.initial_signs)

    def test_non_positive_horizon(self):
        with pytest.raises(ValueError):
            sample_fluctuator_path(FluctuatorEnsemble.single(1.0, 1.0), 0.0)

    def test_single_telegraph_autocorrelation(self):
        b, gamma, tau = 0.5, 1.0, 0.4
        rng = np.random.default_rng(2024)
        ens = FluctuatorEnsemble.single(b, gamma)
        products = []
        for _ in range(4000):
            path = sample_fluctuator_path(ens, 1.0, seed=rng)
            x0, x1 = path.sample([0.1, 0.1 + tau])
            products.append(x0 * x1)
        products = np.asarray(products)
        sigma = products.std(ddof=1) / np.sqrt(len(products))
        assert abs(products.mean() - b**2 * np.exp(-2 * gamma * tau)) < 4 * sigma

    @pytest.mark.slow
    def test_sampled_ensemble_has_one_over_f_spectrum(self):
        ens = FluctuatorEnsemble.log_uniform(0.05, 0.1, 10.0, n=10)
        fs, t_f = 100.0, 200.0
        times = np.arange(0.0, t_f, 1.0 / fs)
        rng = np.random.default_rng(17)
        psd = None
        for _ in range(200):
            x = sample_fluctuator_path(ens, t_f, seed=rng).sample(times)
            f, p = signal.welch(x, fs=fs, nperseg=4096)
            psd = p if psd is None else psd + p
        band = (f > 0.1) & (f < 1.0)
        assert log_log_slope(f[band], psd[band]) == pytest.approx(-1.0, abs=0.15)
