"""Tests for the constant-channel Lindblad solver."""

import numpy as np
import pytest

from opendyn.ode import IntegratorConfig
from opendyn.operators import TimeDependentHamiltonian, pauli_string, sigma_minus
from opendyn.solvers import EvolutionProblem, LindbladChannel, solve_lindblad
from opendyn.utils.linalg import min_eigenvalue

GAMMA = 0.1
T_F = 20.0
TIMES = np.linspace(0.0, T_F, 101)
PLUS = np.full((2, 2), 0.5, dtype=complex)


def lindblad_problem(h_scale, operator, rho0, t_f=T_F):
    h = TimeDependentHamiltonian.constant(h_scale * pauli_string("Z"))
    return EvolutionProblem(
        hamiltonian=h, u0=rho0, t_f=t_f,
        lindblad=[LindbladChannel(rate=GAMMA, operator=operator)],
    )


@pytest.fixture
def tight():
    return IntegratorConfig(reltol=1e-10, abstol=1e-14, saveat=TIMES)


class TestAnalyticChannels:
    def test_dephasing_coherence(self, tight):
        sol = solve_lindblad(lindblad_problem(0.0, pauli_string("Z"), PLUS), tight)
        coherence = np.abs(sol.states[:, 0, 1])
        np.testing.assert_allclose(coherence, 0.5 * np.exp(-2 * GAMMA * TIMES), rtol=1e-6)

    def test_dephasing_with_precession(self, tight):
        sol = solve_lindblad(lindblad_problem(0.1, pauli_string("Z"), PLUS), tight)
        np.testing.assert_allclose(np.abs(sol.states[:, 0, 1]), 0.5 * np.exp(-2 * GAMMA * TIMES), rtol=1e-6)

    def test_amplitude_damping(self, tight):
        excited = np.diag([0.0, 1.0]).astype(complex)
        sol = solve_lindblad(lindblad_problem(0.1, sigma_minus(1, 1), excited), tight)
        np.testing.assert_allclose(sol.populations()[:, 1], np.exp(-GAMMA * TIMES), rtol=1e-6)

    def test_trace_and_positivity(self):
        excited = np.diag([0.0, 1.0]).astype(complex)
        long_run = lindblad_problem(0.1, sigma_minus(1, 1) + 0.5 * pauli_string("X"), excited, t_f=10.0 / GAMMA)
        sol = solve_lindblad(long_run, IntegratorConfig(reltol=1e-10, abstol=1e-12, saveat=np.linspace(0.0, 10.0 / GAMMA, 100)))
        traces = np.einsum("nii->n", sol.states)
        np.testing.assert_allclose(traces, 1.0, atol=1e-8)
        assert min(min_eigenvalue(rho) for rho in sol.states) >= -1e-8
        assert sol.metadata["channels"] == 1

    def test_needs_a_density_matrix(self):
        h = TimeDependentHamiltonian.constant(pauli_string("Z"))
        p = EvolutionProblem(hamiltonian=h, u0=[1.0, 0.0], t_f=1.0)
        with pytest.raises(ValueError):
            solve_lindblad(p)

    def test_operator_dimension_checked(self):
        with pytest.raises(ValueError, match="Lindblad operator"):
            lindblad_problem(0.0, pauli_string("ZZ"), PLUS)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            LindbladChannel(rate=-1.0, operator=pauli_string("Z"))
