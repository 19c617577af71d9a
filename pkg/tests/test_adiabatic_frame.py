"""Tests for closed-system evolution in the instantaneous eigenbasis."""

import numpy as np
import pytest

from opendyn.adiabatic import solve_in_adiabatic_frame, to_adiabatic_frame
from opendyn.ode import IntegratorConfig
from opendyn.operators import TimeDependentHamiltonian, constant_schedule, pauli_string
from opendyn.solvers import EvolutionProblem, solve_schrodinger, solve_von_neumann
from opendyn.utils.linalg import is_hermitian, ket_to_dm

X, Y, Z = pauli_string("X"), pauli_string("Y"), pauli_string("Z")
TIGHT = dict(reltol=1e-10, abstol=1e-12)
FINE_GRID = np.linspace(0.0, 1.0, 5001)


def landau_zener(gap, slope):
    """H(s) = gap·σˣ + slope·(2s − 1)·σᶻ in GHz."""
    return TimeDependentHamiltonian([(constant_schedule(gap), X), (lambda s: slope * (2 * s - 1), Z)])


def ground_problem(h, t_f, density=False):
    psi = h.eigendecompose(0.0, 1).vectors[:, 0]
    return EvolutionProblem(hamiltonian=h, u0=ket_to_dm(psi) if density else psi, t_f=t_f)


class TestFrameHamiltonian:
    def test_hermitian_with_ground_level_at_zero(self):
        frame = to_adiabatic_frame(landau_zener(0.5, 1.0), 10.0)
        for s in (0.0, 0.3, 0.5, 1.0):
            h = frame(s)
            assert is_hermitian(h, 1e-12)
            assert frame.diagonal(s)[0] == pytest.approx(0.0, abs=1e-9)
            assert frame.diagonal(s)[1] > 0

    def test_gap_scales_with_total_time(self):
        frame = to_adiabatic_frame(landau_zener(0.5, 1.0), 10.0)
        longer = frame.with_tf(20.0)
        np.testing.assert_allclose(longer.diagonal(0.4), 2 * frame.diagonal(0.4))
        np.testing.assert_array_equal(longer.geometric_at(0.4), frame.geometric_at(0.4))
        with pytest.raises(ValueError):
            frame.with_tf(0.0)

    def test_geometric_coupling_of_a_rotating_basis(self):
        # eigenvectors of gap·σˣ + b(s)σᶻ rotate by half the mixing angle
        gap, slope = 0.5, 1.0
        frame = to_adiabatic_frame(landau_zener(gap, slope), 1.0, s_grid=FINE_GRID)
        s = 0.5
        b = slope * (2 * s - 1)
        dtheta = 0.5 * gap * 2 * slope / (gap**2 + b**2)
        assert abs(frame.geometric_at(s)[0, 1]) == pytest.approx(dtheta, rel=1e-4)

    def test_complex_hamiltonian_rejected(self):
        h = TimeDependentHamiltonian([(constant_schedule(1.0), Y), (lambda s: s, Z)])
        with pytest.raises(ValueError, match="real"):
            to_adiabatic_frame(h, 1.0)

    @pytest.mark.parametrize("lvl", [0, 3])
    def test_level_count_checked(self, lvl):
        with pytest.raises(ValueError):
            to_adiabatic_frame(landau_zener(0.5, 1.0), 1.0, lvl=lvl)

    def test_grid_must_cover_unit_interval(self):
        with pytest.raises(ValueError):
            to_adiabatic_frame(landau_zener(0.5, 1.0), 1.0, s_grid=np.linspace(0.0, 0.9, 11))


class TestFrameEvolution:
    T_F = 2.0
    SAVES = list(np.linspace(0.0, 2.0, 21))

    def test_schrodinger_matches_the_lab_frame(self):
        p = ground_problem(landau_zener(0.5, 1.0), self.T_F)
        cfg = IntegratorConfig(saveat=self.SAVES, **TIGHT)
        lab = solve_schrodinger(p, cfg)
        frame = to_adiabatic_frame(p.hamiltonian, p.t_f, s_grid=FINE_GRID)
        rotated = solve_in_adiabatic_frame(p, "schrodinger", cfg, frame=frame)
        assert rotated.success
        np.testing.assert_allclose(rotated.t, self.SAVES)
        np.testing.assert_allclose(rotated.populations(), lab.populations(), atol=1e-5)
        np.testing.assert_allclose(rotated.states, lab.states, atol=1e-5)
        assert rotated.metadata["solver"] == "adiabatic_frame"
        assert rotated.metadata["frame_states"].shape == (21, 2)

    def test_von_neumann_matches_the_lab_frame(self):
        p = ground_problem(landau_zener(0.5, 1.0), self.T_F, density=True)
        cfg = IntegratorConfig(saveat=self.SAVES, **TIGHT)
        lab = solve_von_neumann(p, cfg)
        frame = to_adiabatic_frame(p.hamiltonian, p.t_f, s_grid=FINE_GRID)
        rotated = solve_in_adiabatic_frame(p, "von_neumann", cfg, frame=frame)
        np.testing.assert_allclose(rotated.states, lab.states, atol=1e-5)

    def test_frame_is_rescaled_to_the_problem(self):
        p = ground_problem(landau_zener(0.5, 1.0), self.T_F)
        frame = to_adiabatic_frame(p.hamiltonian, 50.0, s_grid=FINE_GRID)
        cfg = IntegratorConfig(saveat=[self.T_F], **TIGHT)
        direct = solve_in_adiabatic_frame(p, "schrodinger", cfg, frame=to_adiabatic_frame(p.hamiltonian, self.T_F, s_grid=FINE_GRID))
        reused = solve_in_adiabatic_frame(p, "schrodinger", cfg, frame=frame)
        np.testing.assert_allclose(reused.final_state, direct.final_state, atol=1e-9)

    def test_mixed_state_needs_von_neumann(self):
        p = EvolutionProblem(hamiltonian=landau_zener(0.5, 1.0), u0=np.eye(2) / 2, t_f=1.0)
        with pytest.raises(ValueError, match="von_neumann"):
            solve_in_adiabatic_frame(p, "schrodinger")

    @pytest.mark.slow
    def test_long_anneal_takes_fewer_steps(self):
        t_f = 1e4
        p = ground_problem(landau_zener(0.01, 0.1), t_f)
        cfg = IntegratorConfig(reltol=1e-8, abstol=1e-10, saveat=list(np.linspace(0.0, t_f, 11)))
        lab = solve_schrodinger(p, cfg)
        frame = to_adiabatic_frame(p.hamiltonian, t_f, s_grid=np.linspace(0.0, 1.0, 4001))
        rotated = solve_in_adiabatic_frame(p, "schrodinger", cfg, frame=frame)
        assert lab.success and rotated.success
        np.testing.assert_allclose(rotated.populations(), lab.populations(), atol=1e-5)
        assert rotated.n_accepted < lab.n_accepted
