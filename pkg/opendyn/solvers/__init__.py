"""Closed-system, Lindblad and second-order master-equation solvers."""
from opendyn.solvers.problem import EvolutionProblem, Interaction, LindbladChannel, SolverOptions
from opendyn.solvers.closed import solve_schrodinger, solve_unitary, solve_von_neumann
from opendyn.solvers.lindblad import solve_lindblad
from opendyn.solvers.propagator import PropagatorCache
from opendyn.solvers.redfield import RedfieldGenerator, redfield_rhs, solve_redfield
from opendyn.solvers.cgme import CGMEGenerator, solve_cgme
from opendyn.solvers.ule import ULEGenerator, solve_ule
from opendyn.solvers.lamb_shift import PrecomputedLambShift, precompute_lamb_shift
from opendyn.solvers.davies import davies_terms, solve_ame, solve_onesided_ame
from opendyn.solvers.ptre import build_polaron_problem, solve_ptre
from opendyn.solvers.registry import SOLVERS, get_solver, solver_names
