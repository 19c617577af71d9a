"""Lamb shift S(ω) sampled once on a uniform grid and interpolated."""

import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from opendyn.bath.base import BathModel
from opendyn.errors import ExtrapolationError, QuadratureError


@dataclass(frozen=True)
class FrequencyTable:
    """A real function of ω on a uniform grid with a cubic interpolant; no extrapolation."""

    omega: np.ndarray
    values: np.ndarray
    spline: CubicSpline = field(repr=False)
    what: str = "table"

    def __call__(self, omega: float) -> float:
        lo, hi = self.omega[0], self.omega[-1]
        tol = 1e-12 * max(abs(lo), abs(hi), 1.0)
        if omega < lo - tol or omega > hi + tol:
            raise ExtrapolationError(
                f"omega={omega:.6g} rad/ns outside the precomputed {self.what} grid [{lo:.6g}, {hi:.6g}]",
                {"omega": float(omega), "grid": [float(lo), float(hi)]},
            )
        return float(self.spline(min(max(omega, lo), hi)))

    @property
    def range(self) -> Tuple[float, float]:
        return float(self.omega[0]), float(self.omega[-1])


class PrecomputedLambShift(FrequencyTable):
    pass


def _tabulate(fn: Callable[[float], float], omega_range: Tuple[float, float], n: int, what: str):
    if n < 4:
        raise ValueError(f"the {what} grid needs at least 4 points")
    lo, hi = omega_range
    if not hi > lo:
        raise ValueError("omega range must be increasing")
    grid = np.linspace(lo, hi, n)
    values = np.empty(n)
    for k, w in enumerate(grid):
        try:
            values[k] = fn(float(w))
        except QuadratureError as exc:
            raise QuadratureError(f"{what} failed at grid node omega={w:.6g}: {exc.message}", exc.details) from exc
    return grid, values, CubicSpline(grid, values)


def precompute_lamb_shift(bath: BathModel, omega_range: Tuple[float, float], n: int) -> PrecomputedLambShift:
    """Sample `bath.lamb_shift` on n uniform points of omega_range (rad/ns)."""
    grid, values, spline = _tabulate(bath.lamb_shift, omega_range, n, "Lamb shift")
    return PrecomputedLambShift(grid, values, spline, "Lamb shift")


def precompute_spectrum(bath: BathModel, omega_range: Tuple[float, float], n: int) -> FrequencyTable:
    grid, values, spline = _tabulate(lambda w: float(bath.spectrum(w)), omega_range, n, "noise spectrum")
    return FrequencyTable(grid, values, spline, "noise spectrum")


class SpectrumCache:
    """
    γ(ω) and S(ω) keyed by the rounded Bohr frequency, so repeated gaps cost
    one quadrature. With an omega grid, S(ω) is always interpolated and γ(ω)
    is interpolated for baths whose spectrum is itself a quadrature.
    """

    def __init__(self, bath: BathModel, omega_hint: Optional[Tuple[float, float, int]] = None, lamb_shift: bool = True):
        self.bath = bath
        self.shift_table: Optional[PrecomputedLambShift] = None
        self.gamma_table: Optional[FrequencyTable] = None
        if omega_hint is not None:
            lo, hi, n = omega_hint
            if lamb_shift:
                self.shift_table = precompute_lamb_shift(bath, (lo, hi), int(n))
            if bath.costly_spectrum:
                self.gamma_table = precompute_spectrum(bath, (lo, hi), int(n))
        self._gamma: Dict[float, float] = {}
        self._shift: Dict[float, float] = {}
        # shared by trajectory workers; each frequency is integrated once
        self._lock = threading.Lock()

    def _lookup(self, store: Dict[float, float], omega: float, compute: Callable[[float], float]) -> float:
        with self._lock:
            if omega not in store:
                store[omega] = float(compute(omega))
            return store[omega]

    def gamma(self, omega: float) -> float:
        if self.gamma_table is not None:
            return self.gamma_table(omega)
        return self._lookup(self._gamma, omega, self.bath.spectrum)

    def shift(self, omega: float) -> float:
        if self.shift_table is not None:
            return self.shift_table(omega)
        return self._lookup(self._shift, omega, self.bath.lamb_shift)
