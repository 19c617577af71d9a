"""Baths defined by sampled data: a noise spectrum γ(ω) or a correlation C(τ)."""

import re
from pathlib import Path
from typing import Dict, Literal, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from opendyn.bath.base import BathModel, TWO_PI
from opendyn.bath.quadrature import quad
from opendyn.errors import ExtrapolationError

_HEADER = re.compile(r"^#\s*(omega|tau)\s*\[\s*([^\]]+)\s*\]", re.IGNORECASE)
_FREQ_UNITS = {"rad/ns": 1.0, "ghz": TWO_PI}
_TIME_UNITS = {"ns": 1.0, "us": 1e3}


class CustomBath(BathModel):
    """
    Cubic-spline bath over a sampled grid. Spectrum queries outside the grid
    raise ExtrapolationError; a sampled correlation is zero past its last lag.
    """

    name = "custom"

    def __init__(
        self,
        grid: np.ndarray,
        values: np.ndarray,
        representation: Literal["spectrum", "correlation"],
        beta: Optional[float] = None,
    ):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or len(grid) < 4:
            raise ValueError("a custom bath needs at least 4 samples")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("custom bath grid must be strictly increasing")
        if representation not in ("spectrum", "correlation"):
            raise ValueError(f"unknown representation '{representation}'")
        self.representation = representation
        self.grid = grid
        self.beta = beta
        if representation == "spectrum":
            self._spline = CubicSpline(grid, np.asarray(values, dtype=float))
        else:
            if grid[0] != 0.0:
                raise ValueError("sampled correlations must start at tau = 0")
            self._spline = CubicSpline(grid, np.asarray(values, dtype=complex))

    @classmethod
    def from_spectrum(cls, omega: np.ndarray, gamma: np.ndarray, beta: Optional[float] = None) -> "CustomBath":
        return cls(omega, gamma, "spectrum", beta)

    @classmethod
    def from_correlation(cls, tau: np.ndarray, corr: np.ndarray, beta: Optional[float] = None) -> "CustomBath":
        return cls(tau, corr, "correlation", beta)

    @classmethod
    def from_csv(cls, path: Path, beta: Optional[float] = None) -> "CustomBath":
        """
        Read `# omega[GHz|rad/ns],gamma` (two columns) or
        `# tau[ns|us],re,im` (three columns) text files.
        """
        path = Path(path)
        with path.open() as fh:
            header = fh.readline()
        match = _HEADER.match(header)
        if not match:
            raise ValueError(f"{path}: first line must declare units, e.g. '# omega[GHz],gamma'")
        axis, unit = match.group(1).lower(), match.group(2).strip().lower()
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        if axis == "omega":
            if unit not in _FREQ_UNITS or data.shape[1] != 2:
                raise ValueError(f"{path}: expected (omega, gamma) columns in GHz or rad/ns")
            return cls.from_spectrum(data[:, 0] * _FREQ_UNITS[unit], data[:, 1], beta)
        if unit not in _TIME_UNITS or data.shape[1] != 3:
            raise ValueError(f"{path}: expected (tau, Re C, Im C) columns in ns or us")
        return cls.from_correlation(data[:, 0] * _TIME_UNITS[unit], data[:, 1] + 1j * data[:, 2], beta)

    def _check_range(self, x: float, what: str):
        if x < self.grid[0] or x > self.grid[-1]:
            raise ExtrapolationError(
                f"{what} at {x:.6g} is outside the sampled range [{self.grid[0]:.6g}, {self.grid[-1]:.6g}]"
            )

    def spectrum(self, omega):
        if self.representation == "spectrum":
            w = np.asarray(omega, dtype=float)
            self._check_range(float(np.min(w)), "spectrum")
            self._check_range(float(np.max(w)), "spectrum")
            value = self._spline(w)
            return float(value) if w.ndim == 0 else value
        # γ(ω) = 2∫₀^T [Re C cos ωτ − Im C sin ωτ] dτ
        t_max = self.grid[-1]
        re = lambda t: float(self._spline(t).real)
        im = lambda t: float(self._spline(t).imag)
        if omega == 0.0:
            return 2.0 * quad(re, 0.0, t_max, what="gamma(0)")
        return 2.0 * (
            quad(re, 0.0, t_max, weight="cos", wvar=omega, what="gamma")
            - quad(im, 0.0, t_max, weight="sin", wvar=omega, what="gamma")
        )

    def spectral_support(self):
        if self.representation == "spectrum":
            return float(self.grid[0]), float(self.grid[-1])
        return -np.inf, np.inf

    def correlation_support(self) -> float:
        if self.representation == "spectrum":
            return super().correlation_support()
        return float(self.grid[-1])

    def correlation(self, tau: float) -> complex:
        if self.representation == "spectrum":
            return super().correlation(tau)
        if tau < 0:
            return np.conj(self.correlation(-tau))
        if tau > self.grid[-1]:
            return 0j
        return complex(self._spline(tau))

    def lamb_shift(self, omega: float) -> float:
        if self.representation == "spectrum":
            return super().lamb_shift(omega)
        # ∫₀^∞ C(τ)e^{iωτ}dτ = γ(ω)/2 + iS(ω)
        t_max = self.grid[-1]
        re = lambda t: float(self._spline(t).real)
        im = lambda t: float(self._spline(t).imag)
        if omega == 0.0:
            return quad(im, 0.0, t_max, what="Lamb shift")
        return quad(re, 0.0, t_max, weight="sin", wvar=omega, what="Lamb shift") + quad(
            im, 0.0, t_max, weight="cos", wvar=omega, what="Lamb shift"
        )

    def jump_cutoff(self) -> float:
        if self.representation == "spectrum":
            return super().jump_cutoff()
        return np.pi / float(np.min(np.diff(self.grid)))

    def describe(self) -> Dict[str, object]:
        return {
            "type": self.name,
            "representation": self.representation,
            "range": [float(self.grid[0]), float(self.grid[-1])],
            "samples": int(len(self.grid)),
        }
