"""
Spin-fluctuator trajectories: H(t) = H_S(t) + Σ_α δ_α(t) A_α.

Telegraph paths are piecewise constant, so every trajectory is integrated
one constant piece at a time; the integrator never steps across a switch.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from opendyn.bath.fluctuators import TelegraphPath, sample_fluctuator_path
from opendyn.ode import IntegratorConfig, OdeSolution, integrate
from opendyn.ode.solution import ShapeTag
from opendyn.trajectories.ensemble import (
    EnsembleSpec,
    TrajectoryResult,
    TrajectorySample,
    run_ensemble,
    trajectory_kind,
)
from opendyn.utils.linalg import ket_to_dm

logger = logging.getLogger(__name__)

Segment = Tuple[float, float, np.ndarray]
RhsFactory = Callable[[np.ndarray], Callable[[float, np.ndarray], np.ndarray]]


def sample_paths(spec: EnsembleSpec, rng: np.random.Generator) -> List[TelegraphPath]:
    return [sample_fluctuator_path(noise.ensemble, spec.problem.t_f, rng) for noise in spec.noise]


def path_segments(paths: Sequence[TelegraphPath], t_f: float) -> List[Segment]:
    """Constant pieces (start, end, δ per axis) of all paths together."""
    cuts = [p.breakpoints for p in paths if len(p.breakpoints)]
    inner = np.unique(np.concatenate(cuts)) if cuts else np.empty(0)
    edges = np.concatenate([[0.0], inner[(inner > 0.0) & (inner < t_f)], [t_f]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    values = np.stack([p.sample(mids) for p in paths], axis=1) if paths else np.zeros((len(mids), 0))
    return [(float(a), float(b), v) for a, b, v in zip(edges[:-1], edges[1:], values)]


def noise_hamiltonian(spec: EnsembleSpec) -> Callable[[np.ndarray], np.ndarray]:
    """δ values per axis → Σ_α δ_α A_α."""
    ops = np.stack([noise.scaled_operator() for noise in spec.noise]) if spec.noise else None
    d = spec.problem.dimension

    def build(values: np.ndarray) -> np.ndarray:
        if ops is None:
            return np.zeros((d, d), dtype=complex)
        return np.tensordot(values, ops, axes=1)

    return build


def integrate_piece(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    start: float,
    end: float,
    grid: np.ndarray,
    cfg: IntegratorConfig,
    tag: ShapeTag,
    include_start: bool = False,
) -> Tuple[OdeSolution, List[float], List[np.ndarray]]:
    """
    Integrate over [start, end] and return the solution plus the states on
    the save grid inside (start, end] (and at `start` when asked).

    `end` is always integrated to so the piece's final state is available
    from the solution even when it is not a save time.
    """
    lo = grid >= start if include_start else grid > start
    wanted = grid[lo & (grid <= end)]
    saves = sorted(set(wanted.tolist()) | {end})
    sol = integrate(rhs, y0, (start, end), cfg.model_copy(update={"saveat": saves}), tag=tag)
    keep_t, keep_y = [], []
    wanted_set = set(wanted.tolist())
    for t, y in zip(sol.t, sol.y):
        if t in wanted_set:
            keep_t.append(float(t))
            keep_y.append(y.reshape(sol.shape))
    return sol, keep_t, keep_y


def piece_end_state(sol: OdeSolution) -> np.ndarray:
    if sol.status == "event":
        return sol.y_event
    return sol.final_state


def to_density(states: Sequence[np.ndarray]) -> np.ndarray:
    out = []
    for y in states:
        if y.ndim == 1:
            rho = ket_to_dm(y)
            out.append(rho / np.real(np.trace(rho)))
        else:
            out.append(y)
    return np.array(out)


def run_segments(
    make_rhs: RhsFactory,
    y0: np.ndarray,
    segments: Sequence[Segment],
    grid: np.ndarray,
    cfg: IntegratorConfig,
    tag: ShapeTag,
) -> TrajectorySample:
    """Integrate piece by piece, carrying the state across switch times."""
    times: List[float] = []
    states: List[np.ndarray] = []
    y = np.array(y0, dtype=complex)
    for k, (start, end, values) in enumerate(segments):
        if not end > start:
            continue
        sol, ts, ys = integrate_piece(make_rhs(values), y, start, end, grid, cfg, tag, include_start=(k == 0))
        times.extend(ts)
        states.extend(ys)
        if not sol.success:
            return TrajectorySample(np.array(times), to_density(states), status=sol.status, message=sol.message)
        y = piece_end_state(sol)
    return TrajectorySample(np.array(times), to_density(states))


@trajectory_kind("stochastic_schrodinger")
def stochastic_schrodinger_runner(spec: EnsembleSpec):
    p = spec.problem
    if spec.mixture is None and not p.is_vector:
        raise ValueError("the stochastic Schrödinger solver needs a state-vector initial state")
    grid = np.asarray(spec.saveat)
    noise_h = noise_hamiltonian(spec)

    def make_rhs(values):
        extra = noise_h(values)

        def rhs(t, psi):
            return -1j * ((p.hamiltonian_at(t) + extra) @ psi)
        return rhs

    def run_one(rng: np.random.Generator) -> TrajectorySample:
        psi0 = spec.initial_state(rng)
        segments = path_segments(sample_paths(spec, rng), p.t_f)
        return run_segments(make_rhs, psi0, segments, grid, spec.cfg, "vector")

    return run_one


def solve_stochastic_schrodinger(spec: EnsembleSpec, workers: Optional[int] = None) -> TrajectoryResult:
    """Average of |Φ⟩⟨Φ| over Schrödinger trajectories driven by telegraph noise."""
    if not spec.noise:
        logger.debug("no fluctuators attached; every trajectory is the closed-system solution")
    return run_ensemble(spec.model_copy(update={"kind": "stochastic_schrodinger"}), workers)
