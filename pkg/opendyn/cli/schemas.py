"""Pydantic Schemas for Run Configurations.

Every section forbids unknown keys, so a misspelled option fails validation
before anything is computed or written. Physical inputs follow the library
conventions: Hamiltonian coefficients and bath cutoffs in linear GHz, times
in ns, temperatures in mK.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from opendyn.config import (
    ADIABATIC_GRID_POINTS,
    DEFAULT_ABSTOL,
    DEFAULT_FLUCTUATORS,
    DEFAULT_MAX_STEPS,
    DEFAULT_RELTOL,
    GAUSS_ORDER,
    MAX_QUBITS,
    OMEGA_DIGITS,
    POSITIVITY_THRESHOLD,
)
from opendyn.solvers.registry import ENSEMBLE_SOLVERS, FRAME_SOLVERS, solver_names

# Solvers that need (couplings, bath) to mean anything.
BATH_SOLVERS = ("redfield", "cgme", "ule", "ame", "onesided_ame")
POLARON_SOLVERS = ("ptre", "ptre_lindblad", "ptre_onesided")
# Solvers that evolve a state vector rather than a density matrix.
VECTOR_SOLVERS = ("schrodinger", "stochastic_schrodinger", "ame_trajectory")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ============================================
# SCHEDULES
# ============================================

class ScheduleSpec(_Section):
    """
    Named built-in schedule f(s), s ∈ [0, 1].

    constant: value; linear: start + (end − start)s; piecewise_linear and
    tabulated: (s, f) points, linear or cubic in between; exponential:
    amplitude·e^{−rate·s}; compose: outer(inner(s)); three_stage: s(τ) or
    s_p(τ) of the witness protocol as a function of s = τ/t_f.
    """
    kind: Literal[
        "constant",
        "linear",
        "piecewise_linear",
        "tabulated",
        "exponential",
        "compose",
        "three_stage",
    ] = Field(default="constant", description="Built-in schedule type")
    value: float = Field(default=1.0, description="Constant value")
    start: float = Field(default=0.0, description="Linear: value at s = 0")
    end: float = Field(default=1.0, description="Linear: value at s = 1")
    points: Optional[List[Tuple[float, float]]] = Field(default=None, description="(s, value) breakpoints")
    amplitude: float = Field(default=1.0, description="Exponential prefactor")
    rate: float = Field(default=0.0, description="Exponential decay rate in s")
    outer: Optional["ScheduleSpec"] = Field(default=None, description="Compose: applied last")
    inner: Optional["ScheduleSpec"] = Field(default=None, description="Compose: applied first")
    stage: Optional[Literal["s", "sp"]] = Field(default=None, description="Three-stage: system or probe schedule")
    tau1: Optional[float] = Field(default=None, gt=0, description="Three-stage: ramp time in ns")
    tau2: Optional[float] = Field(default=None, ge=0, description="Three-stage: pause time in ns")
    s_star: float = Field(default=0.339, gt=0, lt=1, description="Three-stage: system pause point")
    sp_star: float = Field(default=0.612, gt=0, lt=1, description="Three-stage: probe pause point")

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind in ("piecewise_linear", "tabulated"):
            need = 2 if self.kind == "piecewise_linear" else 4
            if not self.points or len(self.points) < need:
                raise ValueError(f"{self.kind} schedule needs at least {need} points")
            xs = [x for x, _ in self.points]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError(f"{self.kind} points must have increasing s")
            if xs[0] > 0.0 or xs[-1] < 1.0:
                raise ValueError(f"{self.kind} points must cover s in [0, 1]")
        if self.kind == "compose" and (self.outer is None or self.inner is None):
            raise ValueError("compose schedule needs 'outer' and 'inner'")
        if self.kind == "three_stage" and (self.stage is None or self.tau1 is None or self.tau2 is None):
            raise ValueError("three_stage schedule needs 'stage', 'tau1' and 'tau2'")
        return self


ScheduleSpec.model_rebuild()


# ============================================
# PROBLEM SECTION
# ============================================

class WitnessSpec(_Section):
    """Three-qubit tunneling witness; qubit 1 is the probe."""
    h_p: float = Field(description="Probe field in GHz")
    j_1p: float = Field(default=1.0, description="Probe to system coupling J_1P")
    j_s: float = Field(default=1.0, description="System coupling J_S")
    tau1: float = Field(gt=0, description="Ramp time of each stage in ns")
    tau2: float = Field(ge=0, description="Pause time in ns")
    s_star: float = Field(default=0.339, gt=0, lt=1)
    sp_star: float = Field(default=0.612, gt=0, lt=1)
    driver: ScheduleSpec = Field(description="Annealing envelope a(s)")
    problem: ScheduleSpec = Field(description="Annealing envelope b(s)")


class TermSpec(_Section):
    """One Hamiltonian term: a named builder times a schedule."""
    builder: Literal["pauli_sum", "local_field", "two_local", "witness"] = Field(description="Term builder")
    paulis: List[str] = Field(default_factory=list, description="pauli_sum: strings like '0.5XI'")
    h: List[float] = Field(default_factory=list, description="local_field: fields h_k")
    indices: List[int] = Field(default_factory=list, description="local_field: 1-based qubits")
    j: List[float] = Field(default_factory=list, description="two_local: couplings J_k")
    pairs: List[Tuple[int, int]] = Field(default_factory=list, description="two_local: 1-based qubit pairs")
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec, description="Scalar envelope")
    witness: Optional[WitnessSpec] = Field(default=None, description="witness: protocol parameters")

    @model_validator(mode="after")
    def check_builder(self):
        if self.builder == "pauli_sum" and not self.paulis:
            raise ValueError("pauli_sum term needs 'paulis'")
        if self.builder == "local_field" and (not self.h or len(self.h) != len(self.indices)):
            raise ValueError("local_field term needs matching 'h' and 'indices'")
        if self.builder == "two_local" and (not self.j or len(self.j) != len(self.pairs)):
            raise ValueError("two_local term needs matching 'j' and 'pairs'")
        if self.builder == "witness" and self.witness is None:
            raise ValueError("witness term needs a 'witness' block")
        return self


class InitialStateSpec(_Section):
    """basis bits ('0' is the σᶻ = +1 state), |+⟩^n, ground state of H(0), or explicit amplitudes."""
    kind: Literal["basis", "plus", "ground", "vector", "density"] = Field(default="basis")
    bits: Optional[str] = Field(default=None, pattern=r"^[01]+$", description="basis: one bit per qubit")
    amplitudes: Optional[List[Tuple[float, float]]] = Field(default=None, description="vector: (re, im) pairs")
    matrix: Optional[List[List[Tuple[float, float]]]] = Field(default=None, description="density: rows of (re, im)")

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == "basis" and self.bits is None:
            raise ValueError("basis initial state needs 'bits'")
        if self.kind == "vector" and not self.amplitudes:
            raise ValueError("vector initial state needs 'amplitudes'")
        if self.kind == "density" and not self.matrix:
            raise ValueError("density initial state needs 'matrix'")
        return self


class LindbladSpec(_Section):
    """Constant jump operator: a Pauli string or σ± on one qubit."""
    rate: float = Field(ge=0, description="Rate in 1/ns")
    operator: Literal["pauli", "sigma_minus", "sigma_plus"] = Field(default="pauli")
    pauli: Optional[str] = Field(default=None, description="Pauli string when operator='pauli'")
    qubit: Optional[int] = Field(default=None, ge=1, description="Target qubit for σ±")

    @model_validator(mode="after")
    def check_operator(self):
        if self.operator == "pauli" and not self.pauli:
            raise ValueError("pauli jump operator needs 'pauli'")
        if self.operator != "pauli" and self.qubit is None:
            raise ValueError(f"{self.operator} jump operator needs 'qubit'")
        return self


class ProblemSection(_Section):
    n_qubits: int = Field(ge=1, le=MAX_QUBITS, description="Register size")
    t_f: Optional[float] = Field(default=None, gt=0, description="Total time in ns (set by a witness term)")
    hamiltonian: List[TermSpec] = Field(min_length=1, description="Terms of H(s)")
    initial_state: InitialStateSpec = Field(description="State at t = 0")
    lindblad: List[LindbladSpec] = Field(default_factory=list, description="Constant Lindblad channels")

    @model_validator(mode="after")
    def check_time(self):
        witness = [term for term in self.hamiltonian if term.builder == "witness"]
        if len(witness) > 1:
            raise ValueError("at most one witness term is allowed")
        if witness and self.n_qubits != 3:
            raise ValueError("the witness Hamiltonian acts on 3 qubits")
        if not witness and self.t_f is None:
            raise ValueError("problem needs 't_f'")
        return self


# ============================================
# BATH, COUPLINGS, POLARON
# ============================================

class BathSection(_Section):
    type: Literal["ohmic", "hybrid_ohmic", "custom"] = Field(description="Bath model")
    eta_g2: Optional[float] = Field(default=None, gt=0, description="Dimensionless coupling ηg²")
    fc_ghz: Optional[float] = Field(default=None, gt=0, description="Cutoff frequency in GHz")
    temperature_mk: Optional[float] = Field(default=None, gt=0, description="Temperature in mK")
    w_ghz: Optional[float] = Field(default=None, gt=0, description="hybrid_ohmic: MRT linewidth W in GHz")
    path: Optional[str] = Field(default=None, description="custom: sampled spectrum or correlation file")

    @model_validator(mode="after")
    def check_parameters(self):
        if self.type in ("ohmic", "hybrid_ohmic"):
            missing = [k for k in ("eta_g2", "fc_ghz", "temperature_mk") if getattr(self, k) is None]
            if missing:
                raise ValueError(f"{self.type} bath needs {', '.join(missing)}")
        if self.type == "hybrid_ohmic" and self.w_ghz is None:
            raise ValueError("hybrid_ohmic bath needs 'w_ghz'")
        if self.type == "custom" and not self.path:
            raise ValueError("custom bath needs 'path'")
        return self


class CouplingSection(_Section):
    operators: List[str] = Field(min_length=1, description="Pauli strings such as '10ZII'")
    unit: Literal["hbar", "h"] = Field(default="h", description="'h' multiplies the operators by 2π")


class PolaronSection(_Section):
    """Polaron frame: the listed qubits' driver a(s) moves into the coupling."""
    qubits: List[int] = Field(min_length=1, description="1-based transformed qubits")
    driver: ScheduleSpec = Field(description="Driver envelope a(s) in GHz")


# ============================================
# SOLVER, ENSEMBLE, OUTPUT
# ============================================

class SolverSection(_Section):
    name: str = Field(description="Solver name")
    reltol: float = Field(default=DEFAULT_RELTOL, gt=0)
    abstol: float = Field(default=DEFAULT_ABSTOL, gt=0)
    max_steps: int = Field(default=DEFAULT_MAX_STEPS, ge=1)
    max_step: Optional[float] = Field(default=None, gt=0, description="Step ceiling in ns")
    method: Literal["tsit5", "rk4"] = Field(default="tsit5")
    dt: Optional[float] = Field(default=None, gt=0, description="RK4 step in ns")
    t_a: Optional[float] = Field(default=None, gt=0, description="Truncation / coarse-graining / window time in ns")
    omega_hint: Optional[Tuple[float, float, int]] = Field(
        default=None, description="(omega_min, omega_max, points) in rad/ns for the precomputed Lamb shift"
    )
    lvl: Optional[int] = Field(default=None, ge=1, description="Retained eigenlevels")
    lamb_shift: Optional[bool] = Field(default=None)
    positivity: Optional[Literal["abort", "warn", "off"]] = Field(default=None)
    positivity_threshold: float = Field(default=POSITIVITY_THRESHOLD, ge=0)
    omega_digits: int = Field(default=OMEGA_DIGITS, ge=1, le=15)
    gauss_order: int = Field(default=GAUSS_ORDER, ge=2, le=64)
    cgme_grid: Optional[int] = Field(default=None, ge=1)
    ule_cutoff: Optional[float] = Field(default=None, gt=0)
    frame_grid: int = Field(default=ADIABATIC_GRID_POINTS, ge=4, description="Adiabatic-frame s points")
    discontinuities: List[float] = Field(default_factory=list, description="Extra forced stops in ns")
    save_points: Optional[int] = Field(default=101, ge=1, description="Uniform save grid over [0, t_f]")
    saveat: Optional[List[float]] = Field(default=None, description="Explicit save times in ns")

    @field_validator("name")
    @classmethod
    def known_solver(cls, v):
        known = solver_names()
        if v not in known:
            raise ValueError(f"unknown solver '{v}'; expected one of {', '.join(known)}")
        return v

    @model_validator(mode="after")
    def check_grid(self):
        if self.method == "rk4" and self.dt is None:
            raise ValueError("rk4 needs 'dt'")
        if self.saveat is not None:
            if not self.saveat:
                raise ValueError("'saveat' must not be empty")
            if any(b <= a for a, b in zip(self.saveat, self.saveat[1:])):
                raise ValueError("'saveat' must be increasing")
        return self


class FluctuatorSpec(_Section):
    """Telegraph noise on one axis: one fluctuator (gamma) or a log-uniform band."""
    operator: str = Field(description="Pauli string of the noise axis")
    b: float = Field(description="Fluctuator amplitude")
    gamma: Optional[float] = Field(default=None, gt=0, description="Single fluctuator switching rate, 1/ns")
    gamma_min: Optional[float] = Field(default=None, gt=0)
    gamma_max: Optional[float] = Field(default=None, gt=0)
    n: int = Field(default=DEFAULT_FLUCTUATORS, ge=1)
    spacing: Literal["grid", "random"] = Field(default="grid")
    seed: Optional[int] = Field(default=None, ge=0, description="Seed for random rate placement")
    unit: Literal["hbar", "h"] = Field(default="hbar", description="'h' takes b in GHz")

    @model_validator(mode="after")
    def check_rates(self):
        band = self.gamma_min is not None and self.gamma_max is not None
        if (self.gamma is None) == (not band):
            raise ValueError("give either 'gamma' or both 'gamma_min' and 'gamma_max'")
        if band and not self.gamma_min < self.gamma_max:
            raise ValueError("'gamma_min' must be below 'gamma_max'")
        return self


class EnsembleSection(_Section):
    trajectories: int = Field(ge=1, description="Number of trajectories M")
    seed: Optional[int] = Field(default=None, ge=0, description="Master seed")
    workers: int = Field(default=1, ge=1)
    backend: Literal["ame", "redfield"] = Field(default="ame", description="Quantum bath of hybrid runs")
    fluctuators: List[FluctuatorSpec] = Field(default_factory=list)


class OutputSection(_Section):
    directory: Optional[str] = Field(default=None, description="Output directory (default from settings)")
    prefix: str = Field(default="run", pattern=r"^[A-Za-z0-9_.-]+$", description="File name stem")
    format: Literal["csv"] = Field(default="csv")
    observables: List[str] = Field(default_factory=list, description="Pauli strings to average")
    populations: bool = Field(default=False, description="Emit computational-basis populations")
    diagnostics: bool = Field(default=True, description="Compute bath timescales for the sidecar")


class SweepSection(_Section):
    """Tunneling-rate sweep over the witness probe field."""
    h_p: List[float] = Field(min_length=1, description="Probe fields in GHz")
    tau2: List[float] = Field(min_length=4, description="Pause times in ns")
    target: Optional[str] = Field(default=None, pattern=r"^[01]+$", description="Basis state whose population is fitted")

    @field_validator("tau2")
    @classmethod
    def increasing(cls, v):
        if any(b <= a for a, b in zip(v, v[1:])) or v[0] < 0:
            raise ValueError("'tau2' must be non-negative and increasing")
        return v


# ============================================
# RUN CONFIGURATION
# ============================================

class RunConfig(_Section):
    """A full run: problem, environment, solver and output."""
    problem: ProblemSection
    bath: Optional[BathSection] = None
    couplings: Optional[CouplingSection] = None
    polaron: Optional[PolaronSection] = None
    solver: SolverSection
    ensemble: Optional[EnsembleSection] = None
    output: OutputSection = Field(default_factory=OutputSection)
    sweep: Optional[SweepSection] = None

    @model_validator(mode="after")
    def check_combination(self):
        name = self.solver.name
        if name in POLARON_SOLVERS:
            if self.polaron is None or self.bath is None:
                raise ValueError(f"{name} needs 'polaron' and 'bath' sections")
            if self.bath.type == "custom":
                raise ValueError("the polaron frame needs an ohmic or hybrid_ohmic bath")
            if self.couplings is not None:
                raise ValueError(f"{name} builds its own couplings; remove 'couplings'")
        else:
            if self.polaron is not None:
                raise ValueError("'polaron' is only read by the ptre solvers")
            if (self.bath is None) != (self.couplings is None):
                raise ValueError("'bath' and 'couplings' must be given together")
            if name in BATH_SOLVERS and self.bath is None:
                raise ValueError(f"{name} needs 'bath' and 'couplings' sections")
        if name in ENSEMBLE_SOLVERS and self.ensemble is None:
            raise ValueError(f"{name} needs an 'ensemble' section")
        if name == "hybrid" and self.bath is None:
            raise ValueError("hybrid needs 'bath' and 'couplings' sections")
        if name == "unitary" and (self.output.observables or self.output.populations):
            raise ValueError("the unitary solver emits the propagator only")
        if name == "lindblad" and self.bath is not None:
            raise ValueError("lindblad reads 'problem.lindblad'; remove 'bath' and 'couplings'")
        if self.problem.lindblad and name != "lindblad":
            raise ValueError("'problem.lindblad' channels are only read by the lindblad solver")
        if name in FRAME_SOLVERS and self.bath is not None:
            raise ValueError("the adiabatic frame is a closed-system solver")
        if self.sweep is not None:
            if not any(term.builder == "witness" for term in self.problem.hamiltonian):
                raise ValueError("a rate sweep needs a witness term")
            if name in ENSEMBLE_SOLVERS:
                raise ValueError("a rate sweep needs a deterministic solver")
            if self.sweep.target is not None and len(self.sweep.target) != self.problem.n_qubits:
                raise ValueError("sweep target needs one bit per qubit")
        return self


# ============================================
# RESPONSES
# ============================================

class ErrorResponse(BaseModel):
    """Machine-readable failure written to stderr."""
    success: bool = Field(default=False)
    error_code: str = Field(description="Stable error identifier")
    message: str = Field(description="Human-readable message")
    details: Dict[str, Any] = Field(default_factory=dict)


class RunResponse(BaseModel):
    success: bool = Field(default=True)
    solver: str
    status: str = Field(description="Integrator or ensemble status")
    message: str = Field(default="")
    rows: int = Field(ge=0, description="Data rows written")
    csv_path: Optional[str] = None
    metadata_path: Optional[str] = None
    warnings: List[str] = Field(default_factory=list)


class SweepRow(BaseModel):
    h_p: float
    gamma: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    d: Optional[float] = None
    residual: Optional[float] = None
    status: str = Field(default="ok")
    message: str = Field(default="")


class SweepResponse(BaseModel):
    success: bool = Field(default=True)
    rows: List[SweepRow]
    csv_path: Optional[str] = None
    populations_path: Optional[str] = None
    metadata_path: Optional[str] = None
