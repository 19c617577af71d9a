"""
Evolution problems and the plumbing shared by every solver driver.

An EvolutionProblem bundles H(s), the initial state, t_f and any number of
(couplings, bath) interactions; SolverOptions carries the knobs that only
some solvers read.
"""

import logging
import warnings
from typing import Callable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from opendyn.bath.base import BathModel
from opendyn.config import GAUSS_ORDER, OMEGA_DIGITS, POSITIVITY_THRESHOLD
from opendyn.errors import OpenDynWarning
from opendyn.ode import IntegratorConfig, OdeSolution, PositivityCallback, integrate
from opendyn.operators.couplings import CouplingSet, PolaronCouplingSet
from opendyn.operators.hamiltonian import TimeDependentHamiltonian
from opendyn.utils.linalg import is_hermitian, ket_to_dm, min_eigenvalue
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)

Couplings = Union[CouplingSet, PolaronCouplingSet]

_STATE_TOL = 1e-10


# ============================================
# PROBLEM DEFINITION
# ============================================

class Interaction(BaseModel):
    """One coupling set and the bath it talks to."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    couplings: Couplings = Field(description="System operators coupled to the bath")
    bath: BathModel = Field(description="Bath seen by every operator of the set")


class LindbladChannel(BaseModel):
    """Constant jump operator with its rate: rate·(LρL† − ½{L†L, ρ})."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rate: float = Field(ge=0, description="Rate in 1/ns")
    operator: np.ndarray = Field(description="Jump operator L")

    @field_validator("operator", mode="before")
    @classmethod
    def as_matrix(cls, v):
        return np.array(v, dtype=complex)


class SolverOptions(BaseModel):
    """Settings read by the open-system solvers; unset values mean solver defaults."""
    model_config = ConfigDict(extra="forbid")

    lamb_shift: Optional[bool] = Field(default=None, description="Include the Lamb shift (default per solver)")
    t_a: Optional[float] = Field(default=None, gt=0, description="Truncation / coarse-graining / window time in ns")
    omega_digits: int = Field(default=OMEGA_DIGITS, ge=1, le=15, description="Significant digits for Bohr-frequency grouping")
    lvl: Optional[int] = Field(default=None, ge=1, description="Retained eigenlevels")
    omega_hint: Optional[Tuple[float, float, int]] = Field(
        default=None, description="(omega_min, omega_max, points) in rad/ns for the precomputed Lamb shift"
    )
    positivity: Optional[Literal["abort", "warn", "off"]] = Field(
        default=None, description="Positivity check mode (default per solver)"
    )
    positivity_threshold: float = Field(default=POSITIVITY_THRESHOLD, ge=0, description="Allowed negative eigenvalue")
    gauss_order: int = Field(default=GAUSS_ORDER, ge=2, le=64, description="Gauss-Legendre nodes per panel")
    cgme_grid: Optional[int] = Field(default=None, ge=1, description="Times at which the CGME generator is built")
    ule_cutoff: Optional[float] = Field(default=None, gt=0, description="Frequency cutoff for the jump correlation")

    @field_validator("omega_hint")
    @classmethod
    def check_hint(cls, v):
        if v is not None:
            lo, hi, n = v
            if not hi > lo:
                raise ValueError("omega_hint range must be increasing")
            if n < 4:
                raise ValueError("omega_hint needs at least 4 points")
        return v


class EvolutionProblem(BaseModel):
    """
    H(s) with s = t/t_f, an initial state and the system-bath interactions.

    Constant Lindblad channels are only read by solve_lindblad.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    hamiltonian: TimeDependentHamiltonian
    u0: np.ndarray = Field(description="Initial state vector or density matrix")
    t_f: float = Field(gt=0, description="Total evolution time in ns")
    interactions: List[Interaction] = Field(default_factory=list)
    lindblad: List[LindbladChannel] = Field(default_factory=list)
    options: SolverOptions = Field(default_factory=SolverOptions)

    @field_validator("u0", mode="before")
    @classmethod
    def as_complex(cls, v):
        return np.array(v, dtype=complex)

    @model_validator(mode="after")
    def check_state(self):
        u0, d = self.u0, self.hamiltonian.dimension
        if u0.ndim == 1:
            if u0.shape != (d,):
                raise ValueError(f"initial vector of length {u0.shape[0]} does not match dimension {d}")
            if abs(np.linalg.norm(u0) - 1.0) > _STATE_TOL:
                raise ValueError("initial state vector must have unit norm")
        elif u0.ndim == 2:
            if u0.shape != (d, d):
                raise ValueError(f"initial density matrix of shape {u0.shape} does not match dimension {d}")
            if not is_hermitian(u0, _STATE_TOL):
                raise ValueError("initial density matrix must be Hermitian")
            if abs(np.trace(u0) - 1.0) > _STATE_TOL:
                raise ValueError("initial density matrix must have unit trace")
            if min_eigenvalue(u0) < -_STATE_TOL:
                raise ValueError("initial density matrix must be positive semidefinite")
        else:
            raise ValueError("initial state must be a vector or a square matrix")
        for inter in self.interactions:
            if inter.couplings.dimension() != d:
                raise ValueError("coupling operators do not match the Hamiltonian dimension")
        for ch in self.lindblad:
            if ch.operator.shape != (d, d):
                raise ValueError("Lindblad operator does not match the Hamiltonian dimension")
        return self

    @classmethod
    def build(
        cls,
        hamiltonian: TimeDependentHamiltonian,
        u0,
        t_f: float,
        couplings: Optional[Couplings] = None,
        bath: Optional[BathModel] = None,
        **options,
    ) -> "EvolutionProblem":
        interactions = []
        if couplings is not None:
            if bath is None:
                raise ValueError("a coupling set needs a bath")
            interactions.append(Interaction(couplings=couplings, bath=bath))
        return cls(hamiltonian=hamiltonian, u0=u0, t_f=t_f, interactions=interactions,
                   options=SolverOptions(**options))

    @property
    def dimension(self) -> int:
        return self.hamiltonian.dimension

    @property
    def is_vector(self) -> bool:
        return self.u0.ndim == 1

    def s_of(self, t: float) -> float:
        """Dimensionless time, clamped to [0, 1]."""
        return min(max(t / self.t_f, 0.0), 1.0)

    def hamiltonian_at(self, t: float) -> np.ndarray:
        return self.hamiltonian.evaluate(self.s_of(t))

    def density_matrix(self) -> np.ndarray:
        return ket_to_dm(self.u0) if self.is_vector else self.u0.copy()

    def with_state(self, u0) -> "EvolutionProblem":
        return self.model_copy(update={"u0": np.array(u0, dtype=complex)})

    def with_options(self, **updates) -> "EvolutionProblem":
        return self.model_copy(update={"options": self.options.model_copy(update=updates)})

    def lvl(self) -> int:
        return self.options.lvl or self.dimension

    def hamiltonian_norm(self, samples: int = 101) -> float:
        """max over s of the spectral norm of H(s)."""
        return max(np.linalg.norm(self.hamiltonian.evaluate(s), 2) for s in np.linspace(0.0, 1.0, samples))


def coupling_stack(couplings: Couplings, alpha: int, times: np.ndarray, t_f: float) -> np.ndarray:
    """A_α at every time in `times`, shape (n, d, d)."""
    return couplings.stack(alpha, np.clip(np.asarray(times, dtype=float) / t_f, 0.0, 1.0))


# ============================================
# RUNNING A SOLVER
# ============================================

def require_density_matrix(p: EvolutionProblem, solver: str):
    if p.is_vector:
        raise ValueError(f"{solver} needs a density-matrix initial state")


def require_vector(p: EvolutionProblem, solver: str):
    if not p.is_vector:
        raise ValueError(f"{solver} needs a state-vector initial state")


def caveat(message: str, sink: List[str]):
    """Warn the user and keep the message for the solution diagnostics."""
    warnings.warn(message, OpenDynWarning, stacklevel=3)
    get_tracer().log_warning(message)
    sink.append(message)


def run_integration(
    solver: str,
    p: EvolutionProblem,
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    cfg: Optional[IntegratorConfig],
    tag: str,
    positivity: Literal["abort", "warn", "off"] = "off",
    diagnostics: Optional[Sequence[str]] = None,
    metadata: Optional[dict] = None,
) -> OdeSolution:
    """Integrate over [0, t_f] with tracing, an optional positivity check and diagnostics."""
    cfg = cfg or IntegratorConfig()
    tracer = get_tracer()
    tracer.log_solver_start(solver, {"reltol": cfg.reltol, "abstol": cfg.abstol, "method": cfg.method})
    mode = p.options.positivity or positivity
    check = None
    if mode != "off" and tag == "matrix":
        check = PositivityCallback(p.options.positivity_threshold, mode)
        cfg = cfg.model_copy(update={"callbacks": list(cfg.callbacks) + [check]})
    sol = integrate(rhs, y0, (0.0, p.t_f), cfg, tag=tag)
    sol.metadata.update(metadata or {})
    sol.metadata["solver"] = solver
    sol.metadata["warnings"] = list(diagnostics or [])
    if check is not None:
        sol.metadata["positivity"] = check.report()
    tracer.log_solver_end(solver, sol.status, sol.n_accepted, sol.n_rejected)
    if not sol.success:
        logger.warning("%s stopped early: %s", solver, sol.message)
    return sol
