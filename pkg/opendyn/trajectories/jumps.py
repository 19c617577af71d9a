"""
Quantum-jump unraveling of the adiabatic master equation.

Between jumps |ψ⟩ follows H_eff = H + H_LS − (i/2)Σ_ω γ(ω)L_ω†L_ω without
renormalization. A jump fires when ‖ψ‖² falls to a uniform threshold u;
channel ω is picked with probability ∝ γ(ω)‖L_ω ψ‖². Telegraph noise, when
attached, adds Σδ_α(t)A_α to H and cuts the run into constant pieces.
"""

import logging
from typing import List, Optional

import numpy as np

from opendyn.solvers.davies import DaviesModel
from opendyn.trajectories.ensemble import (
    EnsembleSpec,
    TrajectoryResult,
    TrajectorySample,
    run_ensemble,
    trajectory_kind,
)
from opendyn.trajectories.fluctuator import (
    integrate_piece,
    noise_hamiltonian,
    path_segments,
    piece_end_state,
    sample_paths,
    to_density,
)
from opendyn.utils.linalg import dag

logger = logging.getLogger(__name__)

# jumps allowed inside one constant piece before the trajectory is abandoned
MAX_JUMPS_PER_PIECE = 100_000


def effective_hamiltonian(model: DaviesModel, t: float) -> np.ndarray:
    """H + H_LS − (i/2)Σγ L†L at time t."""
    p = model.p
    h = p.hamiltonian_at(t)
    if not p.interactions:
        return h
    h_ls, channels = model.terms(t)
    decay = sum((rate * (dag(l_op) @ l_op) for rate, l_op in channels), np.zeros_like(h))
    return h + h_ls - 0.5j * decay


def apply_jump(model: DaviesModel, t: float, psi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Collapse ψ by one channel drawn with weight γ‖Lψ‖²; returns the normalized state."""
    _, channels = model.terms(t)
    candidates = [l_op @ psi for _, l_op in channels]
    weights = np.array([rate * np.vdot(c, c).real for (rate, _), c in zip(channels, candidates)])
    total = weights.sum()
    if not total > 0:
        logger.debug("jump at t=%.6g with no open channel; renormalizing", t)
        return psi / np.linalg.norm(psi)
    pick = rng.choice(len(candidates), p=weights / total)
    out = candidates[pick]
    return out / np.linalg.norm(out)


@trajectory_kind("ame_trajectory")
def ame_trajectory_runner(spec: EnsembleSpec):
    p = spec.problem
    if spec.mixture is None and not p.is_vector:
        raise ValueError("the AME trajectory solver needs a state-vector initial state")
    lamb = True if p.options.lamb_shift is None else p.options.lamb_shift
    model = DaviesModel(p, lamb)
    grid = np.asarray(spec.saveat)
    noise_h = noise_hamiltonian(spec)

    def run_one(rng: np.random.Generator) -> TrajectorySample:
        psi = np.array(spec.initial_state(rng), dtype=complex)
        segments = path_segments(sample_paths(spec, rng), p.t_f)
        times: List[float] = []
        states: List[np.ndarray] = []
        jumps: List[float] = []
        threshold = rng.uniform()

        for k, (start, end, values) in enumerate(segments):
            extra = noise_h(values)

            def rhs(t, y):
                return -1j * ((effective_hamiltonian(model, t) + extra) @ y)

            t0, first = start, k == 0
            for _ in range(MAX_JUMPS_PER_PIECE):
                if not end > t0:
                    break
                cfg = spec.cfg.model_copy(update={"event": lambda t, y, u=threshold: np.vdot(y, y).real - u})
                sol, ts, ys = integrate_piece(rhs, psi, t0, end, grid, cfg, "vector", include_start=first)
                times.extend(ts)
                states.extend(ys)
                first = False
                if not sol.success:
                    return TrajectorySample(np.array(times), to_density(states), jumps, sol.status, sol.message)
                psi = piece_end_state(sol)
                if sol.status != "event":
                    break
                t0 = float(sol.t_event)
                psi = apply_jump(model, t0, psi, rng)
                jumps.append(t0)
                threshold = rng.uniform()
            else:
                return TrajectorySample(np.array(times), to_density(states), jumps, "max-jumps",
                                        f"more than {MAX_JUMPS_PER_PIECE} jumps in one piece")
        return TrajectorySample(np.array(times), to_density(states), jumps)

    return run_one


def solve_ame_trajectory(spec: EnsembleSpec, workers: Optional[int] = None) -> TrajectoryResult:
    """Ensemble of AME quantum-jump trajectories; the mean converges to solve_ame's ρ(t)."""
    return run_ensemble(spec.model_copy(update={"kind": "ame_trajectory"}), workers)
