"""Turn validated run-config sections into library objects."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from opendyn.bath import BathModel, CustomBath, FluctuatorEnsemble, HybridOhmicBath, OhmicBath, temperature_to_beta
from opendyn.cli.schemas import (
    BathSection,
    CouplingSection,
    EnsembleSection,
    InitialStateSpec,
    LindbladSpec,
    RunConfig,
    ScheduleSpec,
    TermSpec,
    VECTOR_SOLVERS,
)
from opendyn.ode import IntegratorConfig
from opendyn.operators import (
    CouplingSet,
    ScheduleFn,
    TimeDependentHamiltonian,
    WitnessProtocol,
    build_witness_hamiltonian,
    local_field_term,
    pauli_string,
    sigma_minus,
    sigma_plus,
    two_local_term,
)
from opendyn.solvers.problem import EvolutionProblem, Interaction, LindbladChannel, SolverOptions
from opendyn.solvers.ptre import build_polaron_problem
from opendyn.trajectories import EnsembleSpec, FluctuatorNoise
from opendyn.utils.linalg import hermitize, ket_to_dm

logger = logging.getLogger(__name__)


def coupling_from_string(spec: str, n_qubits: int) -> np.ndarray:
    """
    "10ZII" → 10·σᶻ⊗I⊗I: an optional real prefix, then one Pauli letter
    per qubit. Raises ValueError for malformed strings or a length mismatch.
    """
    return pauli_string(spec, n_qubits)


# ============================================
# SCHEDULES
# ============================================

def build_schedule(spec: ScheduleSpec) -> ScheduleFn:
    kind = spec.kind
    if kind == "constant":
        value = spec.value
        return lambda s: value
    if kind == "linear":
        start, end = spec.start, spec.end
        return lambda s: start + (end - start) * s
    if kind == "piecewise_linear":
        xs, ys = (np.array(col, dtype=float) for col in zip(*spec.points))
        return lambda s: float(np.interp(s, xs, ys))
    if kind == "tabulated":
        xs, ys = (np.array(col, dtype=float) for col in zip(*spec.points))
        spline = CubicSpline(xs, ys)
        return lambda s: float(spline(s))
    if kind == "exponential":
        amplitude, rate = spec.amplitude, spec.rate
        return lambda s: amplitude * np.exp(-rate * s)
    if kind == "compose":
        outer, inner = build_schedule(spec.outer), build_schedule(spec.inner)
        return lambda s: outer(inner(s))
    if kind == "three_stage":
        protocol = WitnessProtocol(spec.tau1, spec.tau2, spec.s_star, spec.sp_star)
        stage = protocol.s_of_tau if spec.stage == "s" else protocol.sp_of_tau
        t_f = protocol.t_f
        return lambda s: stage(s * t_f)
    raise ValueError(f"unknown schedule kind '{kind}'")


# ============================================
# HAMILTONIAN AND STATE
# ============================================

@dataclass
class HamiltonianParts:
    """Terms of H(s) (linear GHz), run length and protocol stops."""

    terms: List[Tuple[ScheduleFn, np.ndarray]]
    t_f: float
    tstops: List[float] = field(default_factory=list)


def term_matrix(term: TermSpec, n_qubits: int) -> np.ndarray:
    if term.builder == "pauli_sum":
        return sum(coupling_from_string(p, n_qubits) for p in term.paulis)
    if term.builder == "local_field":
        return local_field_term(term.h, term.indices, n_qubits)
    if term.builder == "two_local":
        return two_local_term(term.j, term.pairs, n_qubits)
    raise ValueError(f"builder '{term.builder}' has no single matrix")


def build_hamiltonian_parts(config: RunConfig) -> HamiltonianParts:
    problem = config.problem
    n = problem.n_qubits
    terms: List[Tuple[ScheduleFn, np.ndarray]] = []
    t_f, tstops = problem.t_f, []
    for term in problem.hamiltonian:
        if term.builder == "witness":
            w = term.witness
            protocol = WitnessProtocol(w.tau1, w.tau2, w.s_star, w.sp_star)
            schedules = protocol.schedules(build_schedule(w.driver), build_schedule(w.problem))
            h = build_witness_hamiltonian(w.h_p, w.j_1p, w.j_s, *schedules)
            terms.extend(zip(h.schedules, h.matrices))
            if t_f is not None and not np.isclose(t_f, protocol.t_f):
                raise ValueError(f"t_f={t_f} conflicts with the witness protocol length {protocol.t_f}")
            t_f = protocol.t_f
            tstops.extend(protocol.discontinuities)
        else:
            terms.append((build_schedule(term.schedule), term_matrix(term, n)))
    return HamiltonianParts(terms, float(t_f), tstops)


def build_initial_state(spec: InitialStateSpec, n_qubits: int, h: TimeDependentHamiltonian) -> np.ndarray:
    d = 2**n_qubits
    if spec.kind == "basis":
        if len(spec.bits) != n_qubits:
            raise ValueError(f"basis state '{spec.bits}' needs {n_qubits} bits")
        state = np.zeros(d, dtype=complex)
        state[int(spec.bits, 2)] = 1.0
        return state
    if spec.kind == "plus":
        return np.full(d, 1.0 / np.sqrt(d), dtype=complex)
    if spec.kind == "ground":
        return h.eigendecompose(0.0, 1).vectors[:, 0]
    if spec.kind == "vector":
        state = np.array([complex(re, im) for re, im in spec.amplitudes])
        if state.shape != (d,):
            raise ValueError(f"initial vector needs {d} amplitudes")
        return state
    rho = np.array([[complex(re, im) for re, im in row] for row in spec.matrix])
    if rho.shape != (d, d):
        raise ValueError(f"initial density matrix must be {d}x{d}")
    return rho


def mixture_of(rho: np.ndarray) -> List[Tuple[float, np.ndarray]]:
    """Eigen-ensemble of ρ, used to start vector trajectories from a mixed state."""
    values, vectors = np.linalg.eigh(hermitize(rho))
    keep = values > 1e-12
    weights = values[keep] / values[keep].sum()
    return [(float(w), vectors[:, k]) for w, k in zip(weights, np.flatnonzero(keep))]


# ============================================
# ENVIRONMENT
# ============================================

def build_bath(section: BathSection, base_dir: Optional[Path] = None) -> BathModel:
    if section.type == "custom":
        path = Path(section.path)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        beta = temperature_to_beta(section.temperature_mk) if section.temperature_mk else None
        return CustomBath.from_csv(path, beta)
    ohmic = OhmicBath.from_physical(section.eta_g2, section.fc_ghz, section.temperature_mk)
    if section.type == "hybrid_ohmic":
        return HybridOhmicBath.from_physical(ohmic, section.w_ghz)
    return ohmic


def build_couplings(section: CouplingSection, n_qubits: int) -> CouplingSet:
    matrices = [coupling_from_string(spec, n_qubits) for spec in section.operators]
    return CouplingSet.from_matrices(matrices, list(section.operators), section.unit)


def build_lindblad(channels: List[LindbladSpec], n_qubits: int) -> List[LindbladChannel]:
    out = []
    for ch in channels:
        if ch.operator == "pauli":
            op = coupling_from_string(ch.pauli, n_qubits)
        elif ch.operator == "sigma_minus":
            op = sigma_minus(ch.qubit, n_qubits)
        else:
            op = sigma_plus(ch.qubit, n_qubits)
        out.append(LindbladChannel(rate=ch.rate, operator=op))
    return out


def solver_options(config: RunConfig) -> Dict[str, object]:
    s = config.solver
    return {
        "lamb_shift": s.lamb_shift,
        "t_a": s.t_a,
        "omega_digits": s.omega_digits,
        "lvl": s.lvl,
        "omega_hint": s.omega_hint,
        "positivity": s.positivity,
        "positivity_threshold": s.positivity_threshold,
        "gauss_order": s.gauss_order,
        "cgme_grid": s.cgme_grid,
        "ule_cutoff": s.ule_cutoff,
    }


# ============================================
# PROBLEM ASSEMBLY
# ============================================

@dataclass
class BuiltRun:
    """Everything a run needs, assembled from a validated config."""

    config: RunConfig
    problem: EvolutionProblem
    cfg: IntegratorConfig
    bath: Optional[BathModel] = None
    mixture: Optional[List[Tuple[float, np.ndarray]]] = None


def build_problem(config: RunConfig, base_dir: Optional[Path] = None) -> Tuple[EvolutionProblem, Optional[BathModel], List[float], Optional[list]]:
    """EvolutionProblem, the bath, protocol stops and (for mixed vector runs) the initial mixture."""
    n = config.problem.n_qubits
    name = config.solver.name
    parts = build_hamiltonian_parts(config)
    h = TimeDependentHamiltonian(parts.terms)
    u0 = build_initial_state(config.problem.initial_state, n, h)

    mixture = None
    if name in VECTOR_SOLVERS and u0.ndim == 2:
        if name == "schrodinger":
            raise ValueError("the schrodinger solver needs a pure initial state")
        mixture = mixture_of(u0)
    elif name not in VECTOR_SOLVERS and name not in ("unitary", "adiabatic_frame") and u0.ndim == 1:
        u0 = ket_to_dm(u0)

    bath = build_bath(config.bath, base_dir) if config.bath is not None else None
    options = solver_options(config)
    if config.polaron is not None:
        (b, h_prob), extra = parts.terms[0], parts.terms[1:]
        problem = build_polaron_problem(
            h_prob, build_schedule(config.polaron.driver), b, config.polaron.qubits, n, bath, u0,
            parts.t_f, extra_terms=extra, **options,
        )
        return problem, bath, parts.tstops, mixture

    interactions = []
    if bath is not None:
        interactions.append(Interaction(couplings=build_couplings(config.couplings, n), bath=bath))
    problem = EvolutionProblem(
        hamiltonian=h,
        u0=u0,
        t_f=parts.t_f,
        interactions=interactions,
        lindblad=build_lindblad(config.problem.lindblad, n),
        options=SolverOptions(**options),
    )
    return problem, bath, parts.tstops, mixture


def save_grid(config: RunConfig, t_f: float) -> Optional[List[float]]:
    s = config.solver
    if s.saveat is not None:
        if s.saveat[0] < 0 or s.saveat[-1] > t_f:
            raise ValueError(f"save times must lie in [0, {t_f}]")
        return list(s.saveat)
    if s.save_points is None:
        return None
    if s.save_points == 1:
        return [t_f]
    return list(np.linspace(0.0, t_f, s.save_points))


def build_integrator_config(config: RunConfig, t_f: float, protocol_stops: List[float]) -> IntegratorConfig:
    s = config.solver
    stops = sorted({float(t) for t in list(s.discontinuities) + list(protocol_stops) if 0.0 < t < t_f})
    return IntegratorConfig(
        reltol=s.reltol,
        abstol=s.abstol,
        max_steps=s.max_steps,
        max_step=s.max_step,
        method=s.method,
        dt=s.dt,
        tstops=stops,
        saveat=save_grid(config, t_f),
    )


def build_run(config: RunConfig, base_dir: Optional[Path] = None) -> BuiltRun:
    problem, bath, stops, mixture = build_problem(config, base_dir)
    cfg = build_integrator_config(config, problem.t_f, stops)
    logger.debug("built %s problem: d=%d, t_f=%s", config.solver.name, problem.dimension, problem.t_f)
    return BuiltRun(config=config, problem=problem, cfg=cfg, bath=bath, mixture=mixture)


# ============================================
# ENSEMBLES AND OBSERVABLES
# ============================================

def build_observables(names: List[str], n_qubits: int) -> Dict[str, np.ndarray]:
    return {name: coupling_from_string(name, n_qubits) for name in names}


def build_noise(section: EnsembleSection, n_qubits: int) -> List[FluctuatorNoise]:
    noise = []
    for fl in section.fluctuators:
        if fl.gamma is not None:
            if fl.n != 1:
                logger.debug("single-rate fluctuator spec ignores n=%d", fl.n)
            ensemble = FluctuatorEnsemble.single(fl.b, fl.gamma)
        else:
            ensemble = FluctuatorEnsemble.log_uniform(fl.b, fl.gamma_min, fl.gamma_max, fl.n, fl.spacing, fl.seed)
        noise.append(FluctuatorNoise(operator=coupling_from_string(fl.operator, n_qubits), ensemble=ensemble, unit=fl.unit))
    return noise


def build_ensemble_spec(run: BuiltRun) -> EnsembleSpec:
    config = run.config
    section = config.ensemble
    n = config.problem.n_qubits
    saveat = run.cfg.saveat
    return EnsembleSpec(
        problem=run.problem,
        trajectories=section.trajectories,
        seed=section.seed,
        noise=build_noise(section, n),
        kind=config.solver.name,
        backend=section.backend,
        observables=build_observables(config.output.observables, n),
        saveat=saveat,
        workers=section.workers,
        mixture=run.mixture,
        cfg=run.cfg.model_copy(update={"saveat": None}),
    )
