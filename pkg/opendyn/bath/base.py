"""Behavioural interface shared by every bath model."""

from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

import numpy as np

from opendyn.bath.quadrature import quad
from opendyn.errors import ExtrapolationError

TWO_PI = 2.0 * np.pi


class BathModel(ABC):
    """
    A bath is fully described by its noise spectrum γ(ω) (angular GHz in,
    1/ns out). The correlation C(τ), Lamb shift S(ω) and jump correlation
    g(t) default to quadratures of γ; models with a better route override them.
    """

    name = "bath"
    beta: Optional[float] = None
    # spectrum evaluated by quadrature rather than in closed form
    costly_spectrum = False

    @abstractmethod
    def spectrum(self, omega):
        """γ(ω)."""

    def spectral_support(self) -> Tuple[float, float]:
        return -np.inf, np.inf

    def correlation_support(self) -> float:
        """Largest lag at which C is known; C vanishes beyond it."""
        return np.inf

    def breakpoints(self) -> Tuple[float, ...]:
        """Points where γ is not smooth."""
        return ()

    def pv_half_width(self, omega: float) -> float:
        lo, hi = self.spectral_support()
        return min(omega - lo, hi - omega)

    def jump_cutoff(self) -> float:
        lo, hi = self.spectral_support()
        return min(-lo, hi)

    def describe(self) -> Dict[str, float]:
        return {"type": self.name}

    # ----------------------------------------------------------------
    # Derived quantities
    # ----------------------------------------------------------------

    def correlation(self, tau: float) -> complex:
        """C(τ) = (1/2π)∫γ(ω)e^{−iωτ}dω, with C(−τ) = C*(τ)."""
        if tau < 0:
            return np.conj(self.correlation(-tau))
        lo, hi = self.spectral_support()
        if np.isinf(lo) and np.isinf(hi):
            even = lambda w: self.spectrum(w) + self.spectrum(-w)
            odd = lambda w: self.spectrum(w) - self.spectrum(-w)
            if tau == 0.0:
                re = quad(even, 0.0, np.inf, what="C(0)")
                return complex(re / TWO_PI, 0.0)
            re = quad(even, 0.0, np.inf, weight="cos", wvar=tau, epsrel=0.0, what="Re C")
            im = -quad(odd, 0.0, np.inf, weight="sin", wvar=tau, epsrel=0.0, what="Im C")
            return complex(re, im) / TWO_PI
        if tau == 0.0:
            re = quad(self.spectrum, lo, hi, points=self.breakpoints(), what="C(0)")
            return complex(re / TWO_PI, 0.0)
        re = quad(self.spectrum, lo, hi, weight="cos", wvar=tau, what="Re C")
        im = -quad(self.spectrum, lo, hi, weight="sin", wvar=tau, what="Im C")
        return complex(re, im) / TWO_PI

    def lamb_shift(self, omega: float) -> float:
        """
        S(ω) = (1/2π) PV∫γ(ω′)/(ω−ω′)dω′ by singularity subtraction.

        (γ(ω′) − γ(ω))/(ω − ω′) is integrated over a window symmetric about
        ω, where the subtracted constant integrates to zero; the tails
        outside the window are regular.
        """
        lo, hi = self.spectral_support()
        half = self.pv_half_width(omega)
        if not half > 0:
            raise ExtrapolationError(
                f"Lamb shift at omega={omega} needs gamma beyond its sampled range [{lo}, {hi}]"
            )
        g0 = float(self.spectrum(omega))
        kinks = self.breakpoints()

        def subtracted(w):
            return (self.spectrum(w) - g0) / (omega - w)

        def plain(w):
            return self.spectrum(w) / (omega - w)

        left, right = omega - half, omega + half
        value = quad(subtracted, left, omega, points=kinks, what="Lamb shift window")
        value += quad(subtracted, omega, right, points=kinks, what="Lamb shift window")
        if left > lo:
            value += quad(plain, lo, left, points=kinks, what="Lamb shift tail")
        if right < hi:
            value += quad(plain, right, hi, points=kinks, what="Lamb shift tail")
        return value / TWO_PI

    def jump_correlation(self, t: float, cutoff: Optional[float] = None) -> complex:
        """g(t) = (1/2π)∫√γ(ω)e^{−iωt}dω over [−cutoff, cutoff]."""
        cutoff = self.jump_cutoff() if cutoff is None else min(cutoff, self.jump_cutoff())
        self._check_nonnegative(cutoff)

        def root(w):
            return np.sqrt(max(float(self.spectrum(w)), 0.0))

        if t == 0.0:
            re = quad(root, -cutoff, cutoff, points=self.breakpoints(), what="g(0)")
            return complex(re / TWO_PI, 0.0)
        re = quad(root, -cutoff, cutoff, weight="cos", wvar=t, what="Re g")
        im = -quad(root, -cutoff, cutoff, weight="sin", wvar=t, what="Im g")
        return complex(re, im) / TWO_PI

    def _check_nonnegative(self, cutoff: float, samples: int = 2001):
        checked = self.__dict__.setdefault("_nonnegative_checked", set())
        if cutoff in checked:
            return
        grid = np.linspace(-cutoff, cutoff, samples)
        values = np.array([self.spectrum(w) for w in grid])
        if np.any(values < -1e-14 * max(np.max(np.abs(values)), 1.0)):
            w_bad = grid[np.argmin(values)]
            raise ValueError(f"negative noise spectrum at omega={w_bad:.6g}; bath is invalid for ULE")
        checked.add(cutoff)

    def kms_ratio(self, omega: float) -> float:
        return float(self.spectrum(omega) / self.spectrum(-omega))
