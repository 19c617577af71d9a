"""
Adiabatic frame: closed-system evolution in the instantaneous eigenbasis.

With |ψ⟩ = Σₙ cₙ(s)|n(s)⟩ and s = t/t_f the amplitudes obey

    i dc/ds = [t_f·(E(s) − E₀(s)) + G(s)] c,    G_nm = −i⟨n|∂_s m⟩

Energies are measured from the instantaneous ground level, so an adiabatic
state has slowly varying amplitudes and the integrator only resolves the
geometric coupling. The ground-level phase t_f∫E₀ds is put back when
state vectors are mapped to the lab frame.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Literal, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from opendyn.config import ADIABATIC_GRID_POINTS
from opendyn.errors import LevelCrossingError
from opendyn.ode import IntegratorConfig, OdeSolution, integrate
from opendyn.operators.hamiltonian import TimeDependentHamiltonian, track_eigenbasis
from opendyn.solvers.problem import EvolutionProblem
from opendyn.utils.linalg import dag, hermitize, ket_to_dm
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)


def _derivative(vectors: np.ndarray, s_grid: np.ndarray) -> np.ndarray:
    """∂_s of tracked eigenvectors: central differences inside, second-order one-sided at the ends."""
    return np.gradient(vectors, s_grid, axis=0, edge_order=2)


@dataclass(frozen=True)
class AdiabaticFrameHamiltonian:
    """E(s) and G(s) on a grid plus their cubic interpolants; H̃(s) = t_f·(E(s) − E₀(s)) + G(s)."""

    hamiltonian: TimeDependentHamiltonian = field(repr=False)
    t_f: float
    lvl: int
    s_grid: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    geometric: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    _energy_spline: CubicSpline = field(repr=False, compare=False)
    _geometric_spline: CubicSpline = field(repr=False, compare=False)
    _vector_spline: CubicSpline = field(repr=False, compare=False)
    _phase_spline: CubicSpline = field(repr=False, compare=False)

    def with_tf(self, t_f: float) -> "AdiabaticFrameHamiltonian":
        """Same grid, new total time; E and G are reused as they are."""
        if not t_f > 0:
            raise ValueError("t_f must be positive")
        return replace(self, t_f=float(t_f))

    def diagonal(self, s: float) -> np.ndarray:
        e = self._energy_spline(s)
        return self.t_f * (e - e[0])

    def dynamical_phase(self, s: float) -> float:
        """t_f·∫₀ˢ E₀ ds, the ground-level phase left out of the frame amplitudes."""
        return self.t_f * float(self._phase_spline(s))

    def geometric_at(self, s: float) -> np.ndarray:
        return self._geometric_spline(s)

    def __call__(self, s: float) -> np.ndarray:
        """H̃(s), Hermitian, in units of 1/s (rad per unit dimensionless time)."""
        return np.diag(self.diagonal(s)).astype(complex) + hermitize(self.geometric_at(s))

    def basis(self, s: float) -> np.ndarray:
        """Eigenvectors at s with the tracked order and phase, shape (d, lvl)."""
        reference = self._vector_spline(s)
        eig = self.hamiltonian.eigendecompose(float(s), self.lvl)
        overlap = dag(reference) @ eig.vectors
        order = np.argmax(np.abs(overlap), axis=1)
        if len(set(order)) != self.lvl:
            raise LevelCrossingError(f"eigenbasis ambiguous at s={s:.6g}", {"s": float(s)})
        phases = overlap[np.arange(self.lvl), order]
        return eig.vectors[:, order] * (np.abs(phases) / phases)[np.newaxis, :]


def to_adiabatic_frame(
    h: TimeDependentHamiltonian,
    t_f: float,
    lvl: Optional[int] = None,
    s_grid: Optional[np.ndarray] = None,
) -> AdiabaticFrameHamiltonian:
    """
    Track the lowest `lvl` eigenpairs over `s_grid` (default: uniform,
    ADIABATIC_GRID_POINTS points) and tabulate the geometric couplings.
    """
    if not h.is_real():
        raise ValueError("the adiabatic frame needs a real Hamiltonian")
    lvl = h.dimension if lvl is None else lvl
    if not 1 <= lvl <= h.dimension:
        raise ValueError(f"lvl={lvl} outside 1..{h.dimension}")
    grid = np.linspace(0.0, 1.0, ADIABATIC_GRID_POINTS) if s_grid is None else np.asarray(s_grid, dtype=float)
    if len(grid) < 4 or np.any(np.diff(grid) <= 0) or grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("s grid must be increasing from 0 to 1 with at least 4 points")

    energies, vectors = track_eigenbasis(h, grid, lvl)
    d_vectors = _derivative(vectors, grid)
    # G_nm = −i⟨n|∂_s m⟩
    geometric = -1j * np.einsum("kin,kim->knm", vectors.conj(), d_vectors)
    geometric = hermitize(geometric)
    get_tracer().log("PROBLEM", f"adiabatic frame: {lvl} levels on {len(grid)} s points")
    return AdiabaticFrameHamiltonian(
        hamiltonian=h,
        t_f=float(t_f),
        lvl=lvl,
        s_grid=grid,
        energies=energies,
        geometric=geometric,
        vectors=vectors,
        _energy_spline=CubicSpline(grid, energies),
        _geometric_spline=CubicSpline(grid, geometric),
        _vector_spline=CubicSpline(grid, vectors),
        _phase_spline=CubicSpline(grid, energies[:, 0]).antiderivative(),
    )


def solve_in_adiabatic_frame(
    p: EvolutionProblem,
    kind: Literal["schrodinger", "von_neumann"] = "schrodinger",
    cfg: Optional[IntegratorConfig] = None,
    frame: Optional[AdiabaticFrameHamiltonian] = None,
    initial: Optional[np.ndarray] = None,
) -> OdeSolution:
    """
    Evolve in s ∈ [0, 1] with H̃ and map every saved state back to the lab
    frame through the eigenbasis at that s. `initial` is the state in the
    s = 0 eigenbasis; without it the lab-frame p.u0 is projected onto it.

    Save and stop times in `cfg` are in ns; the returned solution uses ns
    and keeps the frame amplitudes in metadata["frame_states"].
    """
    cfg = cfg or IntegratorConfig()
    if frame is None:
        frame = to_adiabatic_frame(p.hamiltonian, p.t_f, p.lvl())
    elif frame.t_f != p.t_f:
        frame = frame.with_tf(p.t_f)

    v0 = frame.basis(0.0)
    if initial is None:
        if kind == "schrodinger":
            initial = dag(v0) @ (p.u0 if p.is_vector else _dominant_vector(p.u0))
        else:
            initial = dag(v0) @ p.density_matrix() @ v0
    y0 = np.array(initial, dtype=complex)
    if kind == "von_neumann" and y0.ndim == 1:
        y0 = ket_to_dm(y0)
    if kind == "schrodinger" and y0.ndim != 1:
        raise ValueError("the Schrödinger frame run needs a state vector")

    t_f = p.t_f
    frame_cfg = cfg.model_copy(update={
        "saveat": None if cfg.saveat is None else [t / t_f for t in cfg.saveat],
        "tstops": [t / t_f for t in cfg.tstops],
        "max_step": None if cfg.max_step is None else cfg.max_step / t_f,
        "initial_step": None if cfg.initial_step is None else cfg.initial_step / t_f,
        "dt": None if cfg.dt is None else cfg.dt / t_f,
    })

    if kind == "schrodinger":
        def rhs(s, c):
            return -1j * (frame(s) @ c)
    else:
        def rhs(s, rho):
            h = frame(s)
            return -1j * (h @ rho - rho @ h)

    tracer = get_tracer()
    tracer.log_solver_start("adiabatic_frame", {"kind": kind, "lvl": frame.lvl, "t_f": t_f})
    sol = integrate(rhs, y0, (0.0, 1.0), frame_cfg, tag="vector" if kind == "schrodinger" else "matrix")
    frame_states = sol.states
    lab = []
    for s, y in zip(sol.t, frame_states):
        v = frame.basis(min(max(float(s), 0.0), 1.0))
        if y.ndim == 1:
            lab.append(np.exp(-1j * frame.dynamical_phase(s)) * (v @ y))
        else:
            lab.append((v @ y @ dag(v)).ravel())
    d = p.dimension
    shape = (d,) if kind == "schrodinger" else (d, d)
    out = OdeSolution(
        t=sol.t * t_f,
        y=np.array(lab) if lab else np.empty((0, int(np.prod(shape))), dtype=complex),
        shape=shape,
        tag=sol.tag,
        n_accepted=sol.n_accepted,
        n_rejected=sol.n_rejected,
        n_rhs=sol.n_rhs,
        status=sol.status,
        message=sol.message,
        metadata={"solver": "adiabatic_frame", "kind": kind, "lvl": frame.lvl, "frame_states": frame_states,
                  "warnings": []},
    )
    tracer.log_solver_end("adiabatic_frame", sol.status, sol.n_accepted, sol.n_rejected)
    return out


def _dominant_vector(rho: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(hermitize(rho))
    if values[-1] < 1.0 - 1e-8:
        raise ValueError("a mixed initial state needs kind='von_neumann'")
    return vectors[:, -1]
