"""Tests for the adaptive integrator, forced stops, events and callbacks."""

import numpy as np
import pytest
from pydantic import ValidationError

from opendyn.errors import OpenDynWarning
from opendyn.ode import IntegratorConfig, OdeSolution, PositivityCallback, integrate, integrate_fixed

TIGHT = dict(reltol=1e-10, abstol=1e-12)


def decay(t, y):
    return -y


# ============================================
# ADAPTIVE STEPPING
# ============================================

class TestIntegrate:
    def test_scalar_exponential(self):
        sol = integrate(decay, np.array([1.0]), (0.0, 1.0), IntegratorConfig(**TIGHT))
        assert sol.success
        assert abs(sol.final_state[0] - np.exp(-1.0)) < 1e-8

    def test_complex_rotation(self):
        sol = integrate(lambda t, y: -1j * y, np.array([1.0 + 0j]), (0.0, 10.0), IntegratorConfig(**TIGHT))
        assert abs(sol.final_state[0] - np.exp(-10j)) < 1e-8

    def test_matrix_state_keeps_shape(self):
        a = np.array([[0.0, 1.0], [-1.0, 0.0]])
        sol = integrate(lambda t, y: a @ y, np.eye(2), (0.0, 1.0), IntegratorConfig(**TIGHT))
        assert sol.tag == "matrix"
        assert sol.states.shape[1:] == (2, 2)
        expected = np.array([[np.cos(1.0), np.sin(1.0)], [-np.sin(1.0), np.cos(1.0)]])
        np.testing.assert_allclose(sol.final_state, expected, atol=1e-8)

    def test_save_times_are_exact(self):
        saveat = np.linspace(0.0, 2.0, 21)
        sol = integrate(decay, np.array([1.0]), (0.0, 2.0), IntegratorConfig(saveat=saveat, **TIGHT))
        np.testing.assert_array_equal(sol.t, saveat)
        np.testing.assert_allclose(sol.states[:, 0].real, np.exp(-saveat), atol=1e-8)

    def test_single_save_at_the_end(self):
        sol = integrate(decay, np.array([1.0]), (0.0, 1.0), IntegratorConfig(saveat=[1.0]))
        assert len(sol) == 1
        assert sol.t[0] == 1.0

    def test_steps_land_on_forced_stops(self):
        stops = [0.3, 0.5, 0.75]
        sol = integrate(decay, np.array([1.0]), (0.0, 1.0), IntegratorConfig(tstops=stops))
        for s in stops:
            assert s in sol.t

    def test_discontinuous_derivative_with_stop(self):
        def step(t, y):
            return np.array([1.0 if t < 0.5 else 0.0])
        sol = integrate(step, np.array([0.0]), (0.0, 1.0), IntegratorConfig(tstops=[0.5], **TIGHT))
        assert sol.final_state[0].real == pytest.approx(0.5, abs=1e-12)

    def test_max_steps(self):
        sol = integrate(decay, np.array([1.0]), (0.0, 100.0), IntegratorConfig(max_steps=3, **TIGHT))
        assert sol.status == "max-steps"
        assert not sol.success

    def test_non_finite_start(self):
        sol = integrate(lambda t, y: np.full_like(y, np.nan), np.array([1.0]), (0.0, 1.0))
        assert sol.status == "non-finite"

    def test_terminal_event(self):
        cfg = IntegratorConfig(event=lambda t, y: y[0].real, **TIGHT)
        sol = integrate(lambda t, y: np.array([-1.0 + 0j]), np.array([1.0]), (0.0, 3.0), cfg)
        assert sol.status == "event"
        assert sol.success
        assert sol.t_event == pytest.approx(1.0, abs=1e-10)
        assert sol.t[-1] == pytest.approx(1.0, abs=1e-10)

    def test_reversed_span(self):
        with pytest.raises(ValueError):
            integrate(decay, np.array([1.0]), (1.0, 0.0))

    def test_unsorted_stops_rejected(self):
        with pytest.raises(ValidationError):
            IntegratorConfig(tstops=[0.5, 0.2])


class TestFixedStep:
    def test_rk4_exponential(self):
        cfg = IntegratorConfig(method="rk4", dt=0.01)
        sol = integrate(decay, np.array([1.0]), (0.0, 1.0), cfg)
        assert abs(sol.final_state[0] - np.exp(-1.0)) < 1e-9
        assert sol.n_accepted == 100

    def test_rk4_hits_save_and_stop_times(self):
        cfg = IntegratorConfig(method="rk4", dt=0.1, tstops=[0.25], saveat=[0.25, 0.5, 1.0])
        sol = integrate_fixed(decay, np.array([1.0]), (0.0, 1.0), cfg)
        np.testing.assert_array_equal(sol.t, [0.25, 0.5, 1.0])


# ============================================
# CALLBACKS
# ============================================

class TestPositivity:
    def test_abort_on_negative_eigenvalue(self):
        cb = PositivityCallback(threshold=1e-6)
        assert cb(0.0, np.diag([0.5, 0.5])) is None
        assert cb(1.0, np.diag([1.1, -0.1])) == "negative-state"
        assert cb.triggered_at == 1.0
        assert cb.report()["min_eigenvalue"] == pytest.approx(-0.1)

    def test_warn_mode(self):
        cb = PositivityCallback(threshold=1e-6, action="warn")
        with pytest.warns(OpenDynWarning):
            assert cb(0.2, np.diag([1.1, -0.1])) is None

    def test_needs_a_matrix(self):
        with pytest.raises(ValueError):
            PositivityCallback()(0.0, np.array([1.0, 0.0]))

    def test_integration_stops_when_state_turns_negative(self):
        drift = np.diag([1.0, -1.0]).astype(complex)
        cb = PositivityCallback(threshold=1e-6)
        cfg = IntegratorConfig(callbacks=[cb], max_step=0.01)
        sol = integrate(lambda t, y: drift, np.diag([0.5, 0.5]), (0.0, 2.0), cfg)
        assert sol.status == "negative-state"
        assert not sol.success
        assert 0.5 < cb.triggered_at < 0.52


class TestOdeSolution:
    def test_vector_states_become_density_matrices(self):
        psi = np.array([[1.0, 1.0j]]) / np.sqrt(2)
        sol = OdeSolution(t=np.array([0.0]), y=psi, shape=(2,), tag="vector")
        rho = sol.density_matrices()[0]
        np.testing.assert_allclose(rho, 0.5 * np.array([[1.0, -1.0j], [1.0j, 1.0]]))
        np.testing.assert_allclose(sol.populations()[0], [0.5, 0.5])
        z = np.diag([1.0, -1.0])
        assert sol.expectation(z)[0] == pytest.approx(0.0)
