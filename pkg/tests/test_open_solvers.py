"""Tests for the Redfield, CGME, ULE and adiabatic (Davies / one-sided) master equations."""

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from opendyn.bath import CustomBath, OhmicBath, timescales
from opendyn.errors import ExtrapolationError, OpenDynWarning
from opendyn.ode import IntegratorConfig
from opendyn.operators import CouplingSet, PolaronCouplingSet, TimeDependentHamiltonian, constant_schedule, pauli_string
from opendyn.solvers import (
    EvolutionProblem,
    PrecomputedLambShift,
    davies_terms,
    precompute_lamb_shift,
    solve_ame,
    solve_cgme,
    solve_onesided_ame,
    solve_redfield,
    solve_ule,
    solve_von_neumann,
)
from opendyn.solvers.lamb_shift import SpectrumCache
from opendyn.utils.linalg import gibbs_state, ket_to_dm, min_eigenvalue, trace_distance

X, Z = pauli_string("X"), pauli_string("Z")
EXCITED = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)


@pytest.fixture(scope="module")
def bath():
    """ηg² = 1e-3, f_c = 4 GHz, T = 16 mK."""
    return OhmicBath.from_physical(1e-3, 4.0, 16.0)


def qubit_problem(bath, rho0, t_f, **options):
    """H = 0.1σᶻ GHz with a transverse σˣ coupling."""
    h = TimeDependentHamiltonian.constant(0.1 * Z)
    return EvolutionProblem.build(h, rho0, t_f, CouplingSet.from_matrices([X]), bath, **options)


def annealing_problem(bath, t_f=20.0, **options):
    """Two-qubit anneal from −(σˣ₁ + σˣ₂) to a random Ising problem."""
    rng = np.random.default_rng(7)
    h1, h2, j = rng.uniform(-1.0, 1.0, 3)
    driver = -(pauli_string("XI") + pauli_string("IX"))
    problem = h1 * pauli_string("ZI") + h2 * pauli_string("IZ") + j * pauli_string("ZZ")
    h = TimeDependentHamiltonian([(lambda s: 1.0 - s, driver), (lambda s: s, problem)])
    ground = h.eigendecompose(0.0, 1).vectors[:, 0]
    couplings = CouplingSet.from_strings(["ZI", "IZ"], 2)
    return EvolutionProblem.build(h, ket_to_dm(ground), t_f, couplings, bath, **options)


def relaxation_rate(sol, t_index, p_inf):
    """Rate from the excited population at one save time: P(t) − P∞ ∝ e^{−Γt}."""
    p = sol.populations()[:, 0]
    return -np.log((p[t_index] - p_inf) / (p[0] - p_inf)) / sol.t[t_index]


# ============================================
# LIMITS AND INVARIANTS
# ============================================

class TestZeroCoupling:
    @pytest.mark.parametrize("solver", [solve_redfield, solve_cgme, solve_ule, solve_ame, solve_onesided_ame])
    def test_reduces_to_von_neumann(self, solver):
        h = TimeDependentHamiltonian([(lambda s: 1.0 - s, X), (lambda s: s, Z)])
        p = EvolutionProblem(hamiltonian=h, u0=EXCITED, t_f=5.0)
        cfg = IntegratorConfig(reltol=1e-10, abstol=1e-12, saveat=np.linspace(0.0, 5.0, 11))
        reference = solve_von_neumann(p, cfg)
        sol = solver(p, cfg)
        assert sol.success
        for rho, ref in zip(sol.states, reference.states):
            assert trace_distance(rho, ref) < 1e-8


class TestDaviesTerms:
    def test_rates_obey_detailed_balance(self, bath):
        p = qubit_problem(bath, EXCITED, 1.0)
        h_ls, channels = davies_terms(p, 0.0, lamb_shift=False)
        np.testing.assert_array_equal(h_ls, 0.0)
        rates = sorted(rate for rate, _ in channels)
        gap = 2 * np.pi * 0.2
        assert rates[-1] / rates[0] == pytest.approx(np.exp(bath.beta * gap), rel=1e-8)

    def test_lamb_shift_is_diagonal_in_the_eigenbasis(self, bath):
        p = qubit_problem(bath, EXCITED, 1.0)
        h_ls, _ = davies_terms(p, 0.5)
        assert abs(h_ls[0, 1]) < 1e-14
        assert h_ls[0, 0] != h_ls[1, 1]


class TestPrecomputedLambShift:
    def test_interpolant_matches_direct_quadrature(self, bath):
        table = precompute_lamb_shift(bath, (-15.0, 15.0), 200)
        assert isinstance(table, PrecomputedLambShift)
        scale = np.max(np.abs(table.values))
        for w in np.linspace(-14.3, 14.1, 9):
            assert abs(table(w) - bath.lamb_shift(w)) < 1e-4 * scale

    def test_out_of_range_query_raises(self, bath):
        table = precompute_lamb_shift(bath, (-1.0, 1.0), 8)
        with pytest.raises(ExtrapolationError):
            table(1.5)

    def test_needs_four_points(self, bath):
        with pytest.raises(ValueError, match="at least 4"):
            precompute_lamb_shift(bath, (-1.0, 1.0), 3)

    def test_ame_with_omega_hint(self, bath):
        cfg = IntegratorConfig(reltol=1e-10, abstol=1e-12, saveat=[20.0])
        direct = solve_ame(qubit_problem(bath, PLUS, 20.0), cfg)
        tabulated = solve_ame(qubit_problem(bath, PLUS, 20.0, omega_hint=(-15.0, 15.0, 200)), cfg)
        assert tabulated.success
        assert trace_distance(tabulated.final_state, direct.final_state) < 1e-5

    def test_gap_outside_the_grid_fails(self, bath):
        p = qubit_problem(bath, PLUS, 1.0, omega_hint=(-0.5, 0.5, 16))
        with pytest.raises(ExtrapolationError):
            solve_ame(p)


class CountingBath(OhmicBath):
    """Ohmic spectrum with a slow, recorded γ(ω) and a stand-in S(ω) = ω³."""

    def __init__(self, *args):
        super().__init__(*args)
        self.spectrum_calls = []
        self.shift_calls = []

    def spectrum(self, omega):
        self.spectrum_calls.append(omega)
        time.sleep(1e-3)
        return super().spectrum(omega)

    def lamb_shift(self, omega):
        self.shift_calls.append(omega)
        time.sleep(1e-3)
        return omega**3


class TestSpectrumCache:
    def test_concurrent_lookups_integrate_each_frequency_once(self):
        bath = CountingBath(1e-3, 2 * np.pi * 4.0, 5.0)
        reference = OhmicBath(1e-3, 2 * np.pi * 4.0, 5.0)
        cache = SpectrumCache(bath)
        omegas = [0.5, -0.5, 1.3] * 16
        with ThreadPoolExecutor(max_workers=8) as pool:
            gammas = list(pool.map(cache.gamma, omegas))
            shifts = list(pool.map(cache.shift, omegas))
        assert sorted(bath.spectrum_calls) == [-0.5, 0.5, 1.3]
        assert sorted(bath.shift_calls) == [-0.5, 0.5, 1.3]
        for w, g, s in zip(omegas, gammas, shifts):
            assert g == reference.spectrum(w)
            assert s == w**3


class TestGibbsFixedPoint:
    def test_ame_relaxes_to_gibbs(self, bath):
        t_f = 50.0 * timescales(bath).tau_sb
        p = qubit_problem(bath, PLUS, t_f)
        sol = solve_ame(p, IntegratorConfig(saveat=[t_f]))
        assert sol.success
        gibbs = gibbs_state(p.hamiltonian.evaluate(0.0), bath.beta)
        assert trace_distance(sol.final_state, gibbs) < 1e-3


class TestTraceAndPositivity:
    SAVES = np.linspace(0.0, 20.0, 100)

    def check(self, sol):
        assert sol.success, sol.message
        assert len(sol.t) == 100
        traces = np.einsum("nii->n", sol.states)
        assert np.max(np.abs(traces - 1.0)) < 1e-8
        assert min(min_eigenvalue(rho) for rho in sol.states) >= -1e-6

    def cfg(self):
        return IntegratorConfig(reltol=1e-8, abstol=1e-10, saveat=self.SAVES)

    def test_ame(self, ohmic_bath):
        self.check(solve_ame(annealing_problem(ohmic_bath, lamb_shift=False), self.cfg()))

    def test_ule(self, ohmic_bath):
        self.check(solve_ule(annealing_problem(ohmic_bath), self.cfg()))

    @pytest.mark.slow
    def test_cgme(self, ohmic_bath):
        self.check(solve_cgme(annealing_problem(ohmic_bath, cgme_grid=5), self.cfg()))

    @pytest.mark.parametrize("solver", [solve_redfield, solve_onesided_ame])
    def test_non_cp_solvers_report_positivity(self, ohmic_bath, solver):
        options = {} if solver is solve_redfield else {"lamb_shift": False}
        sol = solver(annealing_problem(ohmic_bath, **options), self.cfg())
        report = sol.metadata["positivity"]
        assert report["action"] == "abort"
        assert sol.status in ("success", "negative-state")
        if sol.status == "negative-state":
            assert report["triggered_at"] is not None
        traces = np.einsum("nii->n", sol.states)
        assert np.max(np.abs(traces - 1.0)) < 1e-8


# ============================================
# SOLVER-SPECIFIC BEHAVIOUR
# ============================================

class TestSolverOptions:
    def test_redfield_records_its_window(self, bath):
        sol = solve_redfield(qubit_problem(bath, EXCITED, 2.0), IntegratorConfig(saveat=[2.0]), t_a=0.5)
        assert sol.metadata["t_a"] == [0.5]

    def test_redfield_flags_an_ignored_lamb_shift_option(self, bath):
        with pytest.warns(OpenDynWarning, match="Lamb shift"):
            sol = solve_redfield(qubit_problem(bath, EXCITED, 1.0, lamb_shift=False), IntegratorConfig(saveat=[1.0]))
        assert any("lamb_shift=False ignored" in w for w in sol.metadata["warnings"])

    def test_redfield_without_lamb_shift_option_is_quiet(self, bath):
        sol = solve_redfield(qubit_problem(bath, EXCITED, 1.0), IntegratorConfig(saveat=[1.0]))
        assert sol.metadata["warnings"] == []

    def test_redfield_on_a_sampled_correlation(self):
        tau = np.linspace(0.0, 20.0, 1001)
        sampled = CustomBath.from_correlation(tau, 1e-3 * np.exp(-tau))
        saves = np.linspace(0.0, 5.0, 6)
        sol = solve_redfield(qubit_problem(sampled, EXCITED, 5.0, positivity="off"), IntegratorConfig(saveat=saves))
        assert sol.success
        assert sol.metadata["t_a"][0] <= 5.0
        traces = np.einsum("nii->n", sol.states)
        assert np.max(np.abs(traces - 1.0)) < 1e-8
        excited = sol.populations()[:, 0]
        assert np.all(np.diff(excited) < 0)
        assert 0.98 < excited[-1] < 1.0

    def test_short_ule_window_warns(self, bath):
        with pytest.warns(OpenDynWarning, match="ULE window"):
            sol = solve_ule(qubit_problem(bath, EXCITED, 2.0), IntegratorConfig(saveat=[2.0]), t_a=1e-3)
        assert sol.metadata["warnings"]

    @pytest.mark.parametrize("solver", [solve_cgme, solve_ule])
    def test_window_solvers_need_hermitian_couplings(self, bath, solver):
        h = TimeDependentHamiltonian.constant(0.1 * Z)
        couplings = PolaronCouplingSet([1], 1, constant_schedule(0.1))
        p = EvolutionProblem.build(h, EXCITED, 1.0, couplings, bath)
        with pytest.raises(ValueError, match="Hermitian"):
            solver(p)

    def test_master_equations_need_density_matrices(self, bath):
        h = TimeDependentHamiltonian.constant(0.1 * Z)
        p = EvolutionProblem.build(h, [1.0, 0.0], 1.0, CouplingSet.from_matrices([X]), bath)
        with pytest.raises(ValueError):
            solve_ame(p)


@pytest.mark.slow
class TestCrossSolverConsistency:
    """Weak coupling, constant H: every second-order equation sees the same T1."""

    T_F = 50.0

    def test_relaxation_rates_agree(self, bath):
        saves = np.linspace(0.0, self.T_F, 26)
        cfg = IntegratorConfig(saveat=saves)
        gap = 2 * np.pi * 0.2
        p_inf = 1.0 / (1.0 + np.exp(bath.beta * gap))
        rates = {
            "redfield": solve_redfield(qubit_problem(bath, EXCITED, self.T_F, positivity="off"), cfg),
            "ame": solve_ame(qubit_problem(bath, EXCITED, self.T_F), cfg),
            "ule": solve_ule(qubit_problem(bath, EXCITED, self.T_F), cfg),
            "cgme": solve_cgme(qubit_problem(bath, EXCITED, self.T_F, cgme_grid=1), cfg, t_a=20.0),
        }
        gammas = {name: relaxation_rate(sol, -1, p_inf) for name, sol in rates.items()}
        expected = bath.spectrum(gap) + bath.spectrum(-gap)
        assert gammas["ame"] == pytest.approx(expected, rel=1e-3)
        values = list(gammas.values())
        for a in values:
            for b in values:
                assert abs(a - b) <= 0.15 * min(a, b)
