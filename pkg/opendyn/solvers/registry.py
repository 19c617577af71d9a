"""Solver names used by run configurations, mapped to their drivers."""

from typing import Callable, Dict, Optional

from opendyn.errors import ConfigError
from opendyn.ode import IntegratorConfig, OdeSolution
from opendyn.solvers.cgme import solve_cgme
from opendyn.solvers.closed import solve_schrodinger, solve_unitary, solve_von_neumann
from opendyn.solvers.davies import solve_ame, solve_onesided_ame
from opendyn.solvers.lindblad import solve_lindblad
from opendyn.solvers.problem import EvolutionProblem
from opendyn.solvers.ptre import solve_ptre
from opendyn.solvers.redfield import solve_redfield
from opendyn.solvers.ule import solve_ule

Driver = Callable[[EvolutionProblem, Optional[IntegratorConfig]], OdeSolution]


# ============================================
# DETERMINISTIC DRIVERS
# ============================================

SOLVERS: Dict[str, Driver] = {
    "schrodinger": solve_schrodinger,
    "von_neumann": solve_von_neumann,
    "unitary": solve_unitary,
    "lindblad": solve_lindblad,
    "redfield": solve_redfield,
    "cgme": solve_cgme,
    "ule": solve_ule,
    "ame": solve_ame,
    "onesided_ame": solve_onesided_ame,
    "ptre": lambda p, cfg=None: solve_ptre(p, "redfield", cfg),
    "ptre_lindblad": lambda p, cfg=None: solve_ptre(p, "lindblad", cfg),
    "ptre_onesided": lambda p, cfg=None: solve_ptre(p, "onesided", cfg),
}

# Names served by the trajectory and adiabatic-frame front ends rather than SOLVERS.
ENSEMBLE_SOLVERS = ("stochastic_schrodinger", "ame_trajectory", "hybrid")
FRAME_SOLVERS = ("adiabatic_frame",)


def solver_names() -> list:
    return sorted(SOLVERS) + list(ENSEMBLE_SOLVERS) + list(FRAME_SOLVERS)


def get_solver(name: str) -> Driver:
    try:
        return SOLVERS[name]
    except KeyError:
        raise ConfigError(f"unknown solver '{name}'", {"known": sorted(SOLVERS)}) from None
