"""Lindblad equation with constant jump operators."""

from typing import Optional

from opendyn.ode import IntegratorConfig, OdeSolution
from opendyn.solvers.problem import EvolutionProblem, require_density_matrix, run_integration
from opendyn.utils.linalg import dag


def solve_lindblad(p: EvolutionProblem, cfg: Optional[IntegratorConfig] = None) -> OdeSolution:
    """ρ̇ = −i[H, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})."""
    require_density_matrix(p, "solve_lindblad")
    channels = [(ch.rate, ch.operator, dag(ch.operator), dag(ch.operator) @ ch.operator) for ch in p.lindblad]

    def rhs(t, rho):
        h = p.hamiltonian_at(t)
        out = -1j * (h @ rho - rho @ h)
        for rate, l, ld, ldl in channels:
            out += rate * (l @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
        return out

    return run_integration("lindblad", p, rhs, p.u0, cfg, "matrix", metadata={"channels": len(channels)})
