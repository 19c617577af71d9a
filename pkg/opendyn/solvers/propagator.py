"""Cached closed-system propagator U(t) = U(t, t_start)."""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from opendyn.errors import ExtrapolationError, SolverError
from opendyn.ode import IntegratorConfig, integrate
from opendyn.solvers.problem import EvolutionProblem
from opendyn.utils.linalg import dag

logger = logging.getLogger(__name__)

MAX_GRID_POINTS = 50_001


class PropagatorCache:
    """
    U(t) integrated once on a dense grid and interpolated by cubic Hermite
    pieces with the exact derivative −iH(t)U(t). Outside [0, t_f] the
    Hamiltonian is held at its end-point values.

    U(t, τ) = U(t)U(τ)†.
    """

    def __init__(
        self,
        p: EvolutionProblem,
        t_start: float = 0.0,
        t_end: Optional[float] = None,
        spacing: Optional[float] = None,
        tstops: Sequence[float] = (),
        reltol: float = 1e-10,
        abstol: float = 1e-12,
    ):
        self.t_start = float(t_start)
        self.t_end = float(p.t_f if t_end is None else t_end)
        if not self.t_end > self.t_start:
            raise ValueError("propagator range must be increasing")
        self._h = p.hamiltonian_at
        norm = max(p.hamiltonian_norm(), 1e-12)
        step = 0.1 / norm if spacing is None else min(spacing, 0.1 / norm)
        span = self.t_end - self.t_start
        n = int(np.ceil(span / step)) + 1
        if n > MAX_GRID_POINTS:
            logger.warning("propagator grid capped at %d points (requested %d)", MAX_GRID_POINTS, n)
            n = MAX_GRID_POINTS
        stops = [s for s in tstops if self.t_start < s < self.t_end]
        grid = np.unique(np.concatenate([np.linspace(self.t_start, self.t_end, max(n, 2)), stops]))

        d = p.dimension
        cfg = IntegratorConfig(reltol=reltol, abstol=abstol, saveat=list(grid), tstops=stops)
        sol = integrate(lambda t, u: -1j * (self._h(t) @ u), np.eye(d, dtype=complex),
                        (self.t_start, self.t_end), cfg, tag="unitary")
        if not sol.success or len(sol.t) != len(grid):
            raise SolverError(f"propagator integration failed: {sol.message}", {"status": sol.status})
        values = sol.states
        derivs = np.stack([-1j * (self._h(t) @ u) for t, u in zip(grid, values)])
        self.grid = grid
        self._spline = CubicHermiteSpline(grid, values, derivs)
        logger.debug("propagator cache on [%g, %g] with %d points", self.t_start, self.t_end, len(grid))

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        tol = 1e-9 * max(abs(self.t_end), 1.0)
        if np.any(t < self.t_start - tol) or np.any(t > self.t_end + tol):
            raise ExtrapolationError(
                f"propagator requested outside its cached range [{self.t_start}, {self.t_end}]",
                {"t_min": float(np.min(t)), "t_max": float(np.max(t))},
            )
        return np.clip(t, self.t_start, self.t_end)

    def __call__(self, t) -> np.ndarray:
        return self._spline(self._check(t))

    def between(self, t: float, tau: float) -> np.ndarray:
        """U(t, τ)."""
        return self(t) @ dag(self(tau))

    def to_cache_frame(self, ops: np.ndarray, times: np.ndarray) -> np.ndarray:
        """U(τ)†A(τ)U(τ) for a stack of operators at the matching times."""
        u = self(times)
        return dag(u) @ ops @ u
