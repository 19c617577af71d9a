"""
Polaron-transformed Redfield equation.

In the polaron frame of H = −a(s)Σᵢσˣᵢ + b(s)H_prob + Σᵢσᶻᵢ⊗Bᵢ the
transformed qubits see H̃_S = b(s)H_prob and couple to the bath through
a(s)(σ⁺ᵢ ⊗ Bᵢ + σ⁻ᵢ ⊗ Bᵢ†) with the polaron correlation K(t). The
resulting problem is handed to the Redfield solver or, in Lindblad mode,
to the adiabatic ME machinery with γ_P(ω).
"""

import logging
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from opendyn.bath.base import BathModel
from opendyn.bath.ohmic import OhmicBath
from opendyn.bath.polaron import HybridOhmicBath, PolaronBath, polaron_kappa
from opendyn.ode import IntegratorConfig, OdeSolution
from opendyn.operators.couplings import PolaronCouplingSet
from opendyn.operators.hamiltonian import ScheduleFn, TimeDependentHamiltonian
from opendyn.operators.pauli import pauli_operator
from opendyn.solvers.davies import solve_ame, solve_onesided_ame
from opendyn.solvers.problem import EvolutionProblem, Interaction, SolverOptions, caveat
from opendyn.solvers.redfield import solve_redfield
from opendyn.utils.linalg import ket_to_dm
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)

PtreMode = Literal["redfield", "lindblad", "onesided"]

_COHERENCE_TOL = 1e-10


def polaron_bath(bath: Union[OhmicBath, HybridOhmicBath, PolaronBath]) -> BathModel:
    """Bath whose correlation is K(t): Ohmic baths are wrapped, the others already are."""
    if isinstance(bath, OhmicBath):
        return PolaronBath(bath)
    if isinstance(bath, (HybridOhmicBath, PolaronBath)):
        return bath
    raise ValueError(f"no polaron frame for a bath of type '{bath.name}'")


def inhomogeneous_warning(rho0: np.ndarray) -> Optional[str]:
    """Message when ρ(0) has coherences in the σᶻ basis, where the dropped inhomogeneous term matters."""
    rho = ket_to_dm(rho0) if rho0.ndim == 1 else rho0
    off = rho - np.diag(np.diag(rho))
    size = float(np.max(np.abs(off)))
    if size > _COHERENCE_TOL:
        return f"initial state has sigma_z coherences up to {size:.2e}; the PTRE inhomogeneous term is ignored"
    return None


def build_polaron_problem(
    h_prob: np.ndarray,
    a: ScheduleFn,
    b: ScheduleFn,
    qubits: Sequence[int],
    n_qubits: int,
    bath: Union[OhmicBath, HybridOhmicBath, PolaronBath],
    u0,
    t_f: float,
    extra_terms: Sequence[Tuple[ScheduleFn, np.ndarray]] = (),
    **options,
) -> EvolutionProblem:
    """
    PTRE problem for the qubits in `qubits` whose driver a(s) is absorbed
    into the polaron coupling. `h_prob` and `extra_terms` are in linear GHz;
    `extra_terms` carries the untransformed qubits' Hamiltonian.
    """
    terms: List[Tuple[ScheduleFn, np.ndarray]] = [(b, h_prob)]
    terms.extend(extra_terms)
    frame_bath = polaron_bath(bath)
    kappa = polaron_kappa(bath.ohmic if isinstance(bath, PolaronBath) else bath)
    if kappa != 0.0:
        x_sum = sum(pauli_operator("x", q, n_qubits) for q in qubits)
        terms.append((lambda s: kappa * a(s), x_sum))
    else:
        logger.debug("reorganization term vanishes for %s", bath.name)

    couplings = PolaronCouplingSet(qubits, n_qubits, a)
    problem = EvolutionProblem(
        hamiltonian=TimeDependentHamiltonian(terms),
        u0=u0,
        t_f=t_f,
        interactions=[Interaction(couplings=couplings, bath=frame_bath)],
        options=SolverOptions(**options),
    )
    message = inhomogeneous_warning(problem.u0)
    if message:
        caveat(message, [])
    get_tracer().log_bath(frame_bath.name, frame_bath.describe())
    return problem


def solve_ptre(
    p: EvolutionProblem,
    mode: PtreMode = "redfield",
    cfg: Optional[IntegratorConfig] = None,
) -> OdeSolution:
    """
    Solve a polaron-frame problem.

    "redfield" uses the Redfield solver with C = K; "lindblad" the Davies
    form with γ_P(ω) on σ±-derived Lindblad operators; "onesided" the
    one-sided AME with Γ = γ_P/2 + iS_P.
    """
    if not any(isinstance(inter.couplings, PolaronCouplingSet) for inter in p.interactions):
        raise ValueError("solve_ptre needs a polaron-frame problem (see build_polaron_problem)")
    if mode == "redfield":
        sol = solve_redfield(p, cfg)
    elif mode == "lindblad":
        if p.options.omega_hint is None:
            logger.debug("no omega_hint for PTRE Lindblad mode; gamma_P is integrated at every new gap")
        sol = solve_ame(p, cfg)
    elif mode == "onesided":
        sol = solve_onesided_ame(p, cfg)
    else:
        raise ValueError(f"unknown PTRE mode '{mode}'")
    sol.metadata["delegate"] = sol.metadata.get("solver")
    sol.metadata["solver"] = "ptre"
    sol.metadata["mode"] = mode
    message = inhomogeneous_warning(p.u0)
    if message:
        sol.metadata["warnings"].append(message)
    return sol
