"""
Ensemble definitions, per-trajectory samples and the parallel runner.

Trajectory k always draws from the stream SeedSequence(seed, spawn_key=(k,)),
and the reduction walks the samples in index order, so the ensemble mean
does not depend on how trajectories were scheduled across workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from opendyn.bath.fluctuators import FluctuatorEnsemble
from opendyn.errors import ConfigError
from opendyn.ode import IntegratorConfig
from opendyn.operators.hamiltonian import TWO_PI
from opendyn.solvers.problem import EvolutionProblem
from opendyn.utils.linalg import is_hermitian
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)

TrajectoryKind = Literal["stochastic_schrodinger", "ame_trajectory", "hybrid"]

DEFAULT_SAVE_POINTS = 101


# ============================================
# ENSEMBLE DEFINITION
# ============================================

class FluctuatorNoise(BaseModel):
    """Telegraph noise δ(t) entering the Hamiltonian as δ(t)·A."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    operator: np.ndarray = Field(description="Hermitian system operator A")
    ensemble: FluctuatorEnsemble = Field(description="Fluctuators whose sum gives δ(t)")
    unit: Literal["hbar", "h"] = Field(default="hbar", description="'h' multiplies A by 2π (amplitudes in GHz)")

    @field_validator("operator", mode="before")
    @classmethod
    def as_matrix(cls, v):
        a = np.array(v, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("noise operator must be a square matrix")
        if not is_hermitian(a, 1e-12):
            raise ValueError("noise operator must be Hermitian")
        return a

    def scaled_operator(self) -> np.ndarray:
        return TWO_PI * self.operator if self.unit == "h" else self.operator


class EnsembleSpec(BaseModel):
    """Everything a trajectory ensemble needs; immutable once built."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    problem: EvolutionProblem
    trajectories: int = Field(ge=1, description="Number of trajectories M")
    seed: Optional[int] = Field(default=None, ge=0, description="Master seed; fresh entropy if unset")
    noise: List[FluctuatorNoise] = Field(default_factory=list, description="One attachment per noise axis")
    kind: TrajectoryKind = Field(default="stochastic_schrodinger")
    backend: Literal["ame", "redfield"] = Field(default="ame", description="Deterministic generator of hybrid runs")
    observables: Dict[str, np.ndarray] = Field(default_factory=dict, description="Named operators to average")
    save_states: bool = Field(default=True, description="Keep the mean density matrix")
    keep_trajectories: bool = Field(default=False, description="Return every per-trajectory sample")
    saveat: Optional[List[float]] = Field(default=None, description="Common save grid in ns")
    workers: int = Field(default=1, ge=1)
    mixture: Optional[List[Tuple[float, np.ndarray]]] = Field(
        default=None, description="(weight, state vector) pairs the initial state is drawn from"
    )
    cfg: IntegratorConfig = Field(default_factory=IntegratorConfig)

    @field_validator("observables", mode="before")
    @classmethod
    def as_operators(cls, v):
        return {name: np.array(op, dtype=complex) for name, op in (v or {}).items()}

    @field_validator("mixture", mode="before")
    @classmethod
    def as_vectors(cls, v):
        if v is None:
            return v
        return [(float(w), np.array(psi, dtype=complex)) for w, psi in v]

    @model_validator(mode="after")
    def check_dimensions(self):
        d = self.problem.dimension
        for noise in self.noise:
            if noise.operator.shape != (d, d):
                raise ValueError("noise operator does not match the Hamiltonian dimension")
        for name, op in self.observables.items():
            if op.shape != (d, d):
                raise ValueError(f"observable '{name}' does not match the Hamiltonian dimension")
        if self.mixture is not None:
            if not self.mixture:
                raise ValueError("initial-state mixture is empty")
            weights = np.array([w for w, _ in self.mixture])
            if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0):
                raise ValueError("mixture weights must be non-negative and sum to 1")
            for _, psi in self.mixture:
                psi = np.asarray(psi)
                if psi.shape != (d,) or not np.isclose(np.linalg.norm(psi), 1.0):
                    raise ValueError("mixture states must be unit vectors of the system dimension")
        return self

    def save_grid(self) -> np.ndarray:
        if self.saveat is not None:
            grid = np.unique(np.asarray(self.saveat, dtype=float))
        elif self.cfg.saveat is not None:
            grid = np.unique(np.asarray(self.cfg.saveat, dtype=float))
        else:
            grid = np.linspace(0.0, self.problem.t_f, DEFAULT_SAVE_POINTS)
        if grid[0] < 0 or grid[-1] > self.problem.t_f * (1 + 1e-12):
            raise ValueError("save times must lie in [0, t_f]")
        return grid

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        if self.mixture is None:
            return self.problem.u0
        weights = np.array([w for w, _ in self.mixture])
        pick = rng.choice(len(self.mixture), p=weights / weights.sum())
        return np.array(self.mixture[pick][1], dtype=complex)


# ============================================
# SAMPLES AND RESULTS
# ============================================

@dataclass
class TrajectorySample:
    """One trajectory's density matrices on the save grid."""

    t: np.ndarray
    states: np.ndarray
    jump_times: List[float] = field(default_factory=list)
    status: str = "success"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "success"


@dataclass
class TrajectoryResult:
    """Ensemble mean and standard error per save point."""

    t: np.ndarray
    n_trajectories: int
    seed: int
    mean: Optional[np.ndarray] = None
    stderr: Optional[np.ndarray] = None
    observables: Dict[str, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    jump_counts: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    failures: List[Dict[str, object]] = field(default_factory=list)
    samples: Optional[List[TrajectorySample]] = None
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.n_trajectories > 0

    @property
    def final_state(self) -> np.ndarray:
        return self.mean[-1]

    def expectation(self, operator: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("ij,nji->n", operator, self.mean))


# A kind factory receives the spec and returns run_one(rng) -> TrajectorySample.
RunOne = Callable[[np.random.Generator], TrajectorySample]
KindFactory = Callable[[EnsembleSpec], RunOne]

_KINDS: Dict[str, KindFactory] = {}


def trajectory_kind(name: str):
    def register(factory: KindFactory) -> KindFactory:
        _KINDS[name] = factory
        return factory
    return register


def trajectory_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def _reduce(spec: EnsembleSpec, grid: np.ndarray, samples: List[TrajectorySample]) -> dict:
    good = [s for s in samples if s.ok]
    out: dict = {"n": len(good)}
    if not good:
        return out
    stack = np.stack([s.states for s in good])
    m = len(good)
    mean = stack.mean(axis=0)
    err = stack.std(axis=0, ddof=1) / np.sqrt(m) if m > 1 else np.zeros_like(mean, dtype=float)
    if spec.save_states:
        out["mean"], out["stderr"] = mean, err
    obs = {}
    for name, op in spec.observables.items():
        values = np.real(np.einsum("ij,mnji->mn", op, stack))
        spread = values.std(axis=0, ddof=1) / np.sqrt(m) if m > 1 else np.zeros(len(grid))
        obs[name] = (values.mean(axis=0), spread)
    out["observables"] = obs
    return out


def run_ensemble(spec: EnsembleSpec, workers: Optional[int] = None) -> TrajectoryResult:
    """
    Run spec.trajectories trajectories of spec.kind on a thread pool.

    A trajectory that raises or ends with a non-success status is recorded
    in `failures` and left out of the averages.
    """
    workers = workers or spec.workers
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if spec.kind not in _KINDS:
        raise ConfigError(f"unknown trajectory kind '{spec.kind}'", {"known": sorted(_KINDS)})
    seed = spec.seed if spec.seed is not None else int(np.random.SeedSequence().entropy % (2**63))
    grid = spec.save_grid()
    spec = spec.model_copy(update={"saveat": list(grid)})
    run_one = _KINDS[spec.kind](spec)

    tracer = get_tracer()
    tracer.log_ensemble(f"Starting {spec.kind}", {"M": spec.trajectories, "workers": workers, "seed": seed})

    def run_k(k: int) -> TrajectorySample:
        try:
            sample = run_one(trajectory_rng(seed, k))
        except Exception as exc:  # noqa: BLE001
            logger.debug("trajectory %d raised", k, exc_info=True)
            return TrajectorySample(grid, np.empty(0), status="error", message=f"{type(exc).__name__}: {exc}")
        if sample.ok and len(sample.t) != len(grid):
            sample.status, sample.message = "incomplete", f"{len(sample.t)} of {len(grid)} save points"
        return sample

    if workers == 1:
        samples = [run_k(k) for k in range(spec.trajectories)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(run_k, range(spec.trajectories)))

    failures = [{"trajectory": k, "status": s.status, "message": s.message} for k, s in enumerate(samples) if not s.ok]
    reduced = _reduce(spec, grid, samples)
    result = TrajectoryResult(
        t=grid,
        n_trajectories=reduced["n"],
        seed=seed,
        mean=reduced.get("mean"),
        stderr=reduced.get("stderr"),
        observables=reduced.get("observables", {}),
        jump_counts=np.array([len(s.jump_times) for s in samples if s.ok], dtype=int),
        failures=failures,
        samples=samples if spec.keep_trajectories else None,
        metadata={"solver": spec.kind, "trajectories": spec.trajectories, "workers": workers, "seed": seed},
    )
    if spec.kind == "hybrid":
        result.metadata["backend"] = spec.backend
    tracer.log_ensemble(
        f"{spec.kind} finished: {result.n_trajectories}/{spec.trajectories} trajectories",
        {"failures": len(failures)},
    )
    if failures:
        logger.warning("%d of %d trajectories failed", len(failures), spec.trajectories)
    return result
