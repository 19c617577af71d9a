"""Closed-system evolution: Schrödinger, von Neumann and the unitary itself."""

from typing import Optional

import numpy as np

from opendyn.ode import IntegratorConfig, OdeSolution
from opendyn.solvers.problem import EvolutionProblem, require_density_matrix, require_vector, run_integration


def solve_schrodinger(p: EvolutionProblem, cfg: Optional[IntegratorConfig] = None) -> OdeSolution:
    """|ψ̇⟩ = −iH(t/t_f)|ψ⟩."""
    require_vector(p, "solve_schrodinger")

    def rhs(t, psi):
        return -1j * (p.hamiltonian_at(t) @ psi)

    return run_integration("schrodinger", p, rhs, p.u0, cfg, "vector")


def solve_von_neumann(p: EvolutionProblem, cfg: Optional[IntegratorConfig] = None) -> OdeSolution:
    """ρ̇ = −i[H, ρ]."""
    require_density_matrix(p, "solve_von_neumann")

    def rhs(t, rho):
        h = p.hamiltonian_at(t)
        return -1j * (h @ rho - rho @ h)

    return run_integration("von_neumann", p, rhs, p.u0, cfg, "matrix")


def solve_unitary(p: EvolutionProblem, cfg: Optional[IntegratorConfig] = None) -> OdeSolution:
    """U̇ = −iHU from U(0) = I. The initial state of `p` is not used."""

    def rhs(t, u):
        return -1j * (p.hamiltonian_at(t) @ u)

    return run_integration("unitary", p, rhs, np.eye(p.dimension, dtype=complex), cfg, "unitary")
