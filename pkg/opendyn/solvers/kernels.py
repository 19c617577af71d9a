"""Tabulated bath kernels and the lag quadrature used by the memory-integral solvers."""

import logging
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from opendyn.bath.base import BathModel
from opendyn.bath.timescales import Timescales, timescales

logger = logging.getLogger(__name__)

KernelFn = Callable[[float], complex]


def kernel_scale(bath: BathModel) -> float:
    """Shortest time on which the bath kernels vary, taken from the jump cutoff."""
    cutoff = bath.jump_cutoff()
    return 40.0 / cutoff if np.isfinite(cutoff) and cutoff > 0 else 1e-2


@lru_cache(maxsize=64)
def bath_timescales(bath: BathModel, t_f: float = np.inf) -> Timescales:
    return timescales(bath, t_f)


def lag_grid(scale: float, t_max: float, samples: int) -> np.ndarray:
    """Uniform on [0, 20·scale], geometric beyond."""
    knee = min(t_max, 20.0 * scale)
    if t_max <= knee * (1.0 + 1e-12):
        return np.linspace(0.0, t_max, samples)
    half = samples // 2
    return np.unique(np.concatenate([np.linspace(0.0, knee, half), np.geomspace(knee, t_max, samples - half + 1)]))


class KernelTable:
    """
    Cubic spline of a kernel k with k(−τ) = k(τ)* sampled on [0, t_max].

    Lags beyond t_max evaluate to zero.
    """

    def __init__(self, fn: KernelFn, scale: float, t_max: float, samples: int = 801):
        if not t_max > 0:
            raise ValueError("kernel table needs a positive range")
        self.t_max = float(t_max)
        self.grid = lag_grid(scale, self.t_max, samples)
        self.values = np.array([complex(fn(float(t))) for t in self.grid])
        self._spline = CubicSpline(self.grid, self.values)

    def __call__(self, lag) -> np.ndarray:
        lag = np.asarray(lag, dtype=float)
        mag = np.abs(lag)
        out = self._spline(np.minimum(mag, self.t_max))
        out = np.where(lag < 0, np.conj(out), out)
        return np.where(mag > self.t_max, 0.0, out)

    def abs_mass(self) -> Tuple[np.ndarray, float]:
        """Cumulative ∫₀^τ|k| on the grid and the total."""
        cum = cumulative_trapezoid(np.abs(self.values), self.grid, initial=0.0)
        return cum, float(cum[-1])

    def truncation_time(self, rtol: float) -> float:
        """Smallest grid lag T with ∫_T^{t_max}|k| < rtol·∫₀^{t_max}|k|."""
        cum, total = self.abs_mass()
        tail = total - cum
        inside = np.nonzero(tail < rtol * total)[0]
        if len(inside) == 0:
            logger.debug("kernel does not decay within %.4g ns", self.t_max)
            return self.t_max
        return float(self.grid[inside[0]])

    def mass_outside(self, window: float) -> float:
        """Fraction of ∫|k| beyond |τ| = window."""
        cum, total = self.abs_mass()
        return float(max(total - np.interp(window, self.grid, cum), 0.0) / total) if total > 0 else 0.0


def correlation_table(bath: BathModel, t_max: float, samples: int = 801) -> KernelTable:
    return KernelTable(bath.correlation, kernel_scale(bath), t_max, samples)


def jump_table(bath: BathModel, t_max: float, cutoff=None, samples: int = 801) -> KernelTable:
    return KernelTable(lambda t: bath.jump_correlation(t, cutoff), kernel_scale(bath), t_max, samples)


def panel_edges(length: float, fine: float, coarse: float) -> np.ndarray:
    """Panels on [0, length], doubling from `fine` up to `coarse`, then uniform."""
    if not length > 0:
        return np.array([0.0])
    edges = [0.0]
    width = min(fine, coarse)
    while edges[-1] < length:
        edges.append(min(edges[-1] + width, length))
        width = min(2.0 * width, coarse)
    return np.array(edges)


@lru_cache(maxsize=16)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_nodes(edges: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive panels."""
    if len(edges) < 2:
        return np.empty(0), np.empty(0)
    x, w = _legendre(order)
    lo, hi = edges[:-1, np.newaxis], edges[1:, np.newaxis]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights
