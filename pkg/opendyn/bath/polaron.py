"""
Polaron-frame bath quantities for the spin-boson model with Ohmic J(ω) = ηωe^{−ω/ω_c}.

Frequency integrals in the exponent of K(t) use the dω/2π measure, so that
exp{(4/2π)∫γ(ω)(e^{−iωt}−1)/ω² dω} coincides with exp(−4Q₂ − 4iQ₁).
"""

from typing import Dict, Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from opendyn.bath.base import BathModel, TWO_PI
from opendyn.bath.ohmic import OhmicBath
from opendyn.bath.quadrature import fourier_half_line, quad

_Q_EPSABS = 1e-14


def _split(t: float, omega_c: float) -> float:
    """Where the direct part of a half-line Fourier integral hands over to QAWF."""
    return min(omega_c, np.pi / abs(t)) if t != 0.0 else omega_c


# ============================================
# Q1, Q2 AND THE POLARON CORRELATION
# ============================================

def polaron_q1(t: float, bath: OhmicBath, g: float = 1.0) -> float:
    """Q₁(t) = g²∫₀^∞ (J/ω²) sin(ωt) dω."""
    if t == 0.0:
        return 0.0
    if t < 0:
        return -polaron_q1(-t, bath, g)
    c = bath.eta_g2 * g**2
    wc = bath.omega_c
    split = _split(t, wc)
    head = quad(lambda w: np.exp(-w / wc) * t * np.sinc(w * t / np.pi), 0.0, split, epsabs=_Q_EPSABS, what="Q1")
    tail = quad(lambda w: np.exp(-w / wc) / w, split, np.inf, weight="sin", wvar=t,
                epsabs=_Q_EPSABS, epsrel=0.0, what="Q1")
    return c * (head + tail)


def polaron_q2(t: float, bath: OhmicBath, g: float = 1.0) -> float:
    """Q₂(t) = g²∫₀^∞ (J/ω²)(1 − cos ωt) coth(βω/2) dω."""
    t = abs(t)
    if t == 0.0:
        return 0.0
    c = bath.eta_g2 * g**2
    wc, beta = bath.omega_c, bath.beta
    split = _split(t, wc)

    def head(w):
        if w == 0.0:
            return t**2 / beta
        return np.exp(-w / wc) * 2.0 * np.sin(0.5 * w * t) ** 2 / (w * np.tanh(0.5 * beta * w))

    def f(w):
        return np.exp(-w / wc) / (w * np.tanh(0.5 * beta * w))

    value = quad(head, 0.0, split, epsabs=_Q_EPSABS, what="Q2")
    value += quad(f, split, np.inf, epsabs=_Q_EPSABS, what="Q2")
    value -= quad(f, split, np.inf, weight="cos", wvar=t, epsabs=_Q_EPSABS, epsrel=0.0, what="Q2")
    return c * value


def polaron_kappa(bath: Union[OhmicBath, "HybridOhmicBath"]) -> float:
    """
    Reorganization factor κ = exp(−2g²∫J/ω² coth(βω/2) dω).

    The exponent diverges at ω → 0 for any Ohmic component, so κ = 0.
    """
    if isinstance(bath, (OhmicBath, HybridOhmicBath)):
        return 0.0
    raise TypeError(f"kappa is defined for Ohmic polaron baths, got {type(bath).__name__}")


def polaron_correlation(t: float, bath: Union[OhmicBath, "HybridOhmicBath"], g: float = 1.0) -> complex:
    """K(t) = ⟨ξ₊(t)ξ₋(0)⟩; same-symbol correlators vanish."""
    if isinstance(bath, HybridOhmicBath):
        gaussian = np.exp(-4j * bath.eps_l * t - 2.0 * bath.w**2 * t**2)
        return complex(gaussian * polaron_correlation(t, bath.high, g))
    if not isinstance(bath, OhmicBath):
        raise TypeError(f"polaron correlation needs an Ohmic or hybrid-Ohmic bath, got {type(bath).__name__}")
    return complex(np.exp(-4.0 * polaron_q2(t, bath, g) - 4j * polaron_q1(t, bath, g)))


def polaron_correlation_spectral_form(t: float, bath: Union[OhmicBath, "HybridOhmicBath"]) -> complex:
    """K(t) from the noise spectrum: exp{(4/2π)∫γ(ω)(e^{−iωt}−1)/ω² dω}."""
    if isinstance(bath, HybridOhmicBath):
        gaussian = np.exp(-4j * bath.eps_l * t - 2.0 * bath.w**2 * t**2)
        return complex(gaussian * polaron_correlation_spectral_form(t, bath.high))
    if t == 0.0:
        return 1.0 + 0.0j
    sign = 1.0 if t > 0 else -1.0
    t = abs(t)
    beta = bath.beta
    gamma0 = TWO_PI * bath.eta_g2 / beta
    split = _split(t, bath.omega_c)

    def even_over_w2(w):
        return (bath.spectrum(w) + bath.spectrum(-w)) / w**2

    def odd_over_w2(w):
        return (bath.spectrum(w) - bath.spectrum(-w)) / w**2

    def head_re(w):
        if w == 0.0:
            return -gamma0 * t**2
        return -even_over_w2(w) * 2.0 * np.sin(0.5 * w * t) ** 2

    re = quad(head_re, 0.0, split, epsabs=_Q_EPSABS, what="K exponent")
    re += quad(even_over_w2, split, np.inf, weight="cos", wvar=t, epsabs=_Q_EPSABS, epsrel=0.0, what="K exponent")
    re -= quad(even_over_w2, split, np.inf, epsabs=_Q_EPSABS, what="K exponent")
    im = -fourier_half_line(odd_over_w2, t, "sin", split=split, epsabs=_Q_EPSABS, what="K exponent")
    exponent = (4.0 / TWO_PI) * complex(re, sign * im)
    return complex(np.exp(exponent))


# ============================================
# BATH MODELS IN THE POLARON FRAME
# ============================================

class HybridOhmicBath(BathModel):
    """
    Low-frequency Gaussian (MRT) noise plus an Ohmic high-frequency part.

    W² = 2ε_L T is enforced: pass W alone and ε_L = W²β/2 is derived, or
    pass both and they are checked.
    """

    name = "hybrid_ohmic"
    costly_spectrum = True

    def __init__(self, high: OhmicBath, w: float, eps_l: Optional[float] = None):
        if w < 0:
            raise ValueError("MRT linewidth W must be non-negative")
        self.high = high
        self.beta = high.beta
        self.w = float(w)
        derived = 0.5 * self.w**2 * self.beta
        if eps_l is None:
            eps_l = derived
        elif not np.isclose(eps_l, derived, rtol=1e-8, atol=1e-14):
            raise ValueError(f"W^2 = 2 eps_L T violated: eps_L={eps_l}, expected {derived} from W={w}")
        self.eps_l = float(eps_l)

    @classmethod
    def from_physical(cls, high: OhmicBath, w_ghz: float) -> "HybridOhmicBath":
        return cls(high, TWO_PI * w_ghz)

    def low_frequency_kernel(self, omega):
        """G_L(ω) = √(π/2W²) exp(−(ω−4ε_L)²/8W²)."""
        w2 = self.w**2
        return np.sqrt(np.pi / (2.0 * w2)) * np.exp(-((omega - 4.0 * self.eps_l) ** 2) / (8.0 * w2))

    def high_frequency_kernel(self, x):
        """G_H(x) = 4γ_H(x) / (x² + 4γ_H(0)²)."""
        g0 = self.high.spectrum(0.0)
        return 4.0 * self.high.spectrum(x) / (x**2 + 4.0 * g0**2)

    def spectrum(self, omega):
        if np.ndim(omega):
            return np.array([self.spectrum(float(w)) for w in np.ravel(omega)]).reshape(np.shape(omega))
        return hybrid_polaron_spectrum(float(omega), self)

    def correlation(self, tau: float) -> complex:
        return polaron_correlation(tau, self)

    def breakpoints(self):
        return (0.0,)

    def pv_half_width(self, omega: float) -> float:
        return 10.0 * max(self.high.omega_c, 4.0 * self.eps_l + 10.0 * self.w)

    def jump_cutoff(self) -> float:
        return 40.0 * self.high.omega_c

    def describe(self) -> Dict[str, float]:
        return {"type": self.name, "W": self.w, "eps_L": self.eps_l, **{f"high_{k}": v for k, v in self.high.describe().items()}}


def hybrid_polaron_spectrum(omega: float, bath: HybridOhmicBath) -> float:
    """γ_P(ω) = (1/2π)∫G_L(ω−x)G_H(x)dx."""
    if not bath.w > 0:
        raise ValueError("the hybrid polaron spectrum needs W > 0")
    center = omega - 4.0 * bath.eps_l
    half = 24.0 * bath.w

    def integrand(x):
        return bath.low_frequency_kernel(omega - x) * bath.high_frequency_kernel(x)

    value = quad(integrand, center - half, center + half, points=(center, 0.0), what="gamma_P")
    return value / TWO_PI


class PolaronBath(BathModel):
    """
    Ohmic spin-boson bath seen from the polaron frame: C(t) = K(t).

    The spectrum is the Fourier transform of K, computed from a spline of K
    tabulated on [0, t_max] where |K(t_max)| < tail.
    """

    name = "polaron_ohmic"
    costly_spectrum = True

    def __init__(self, ohmic: OhmicBath, g: float = 1.0, tail: float = 1e-10, samples: int = 4001):
        self.ohmic = ohmic
        self.g = float(g)
        self.beta = ohmic.beta
        self._tail = tail
        self._samples = samples
        self._table: Optional[CubicSpline] = None
        self._t_max: Optional[float] = None

    def correlation(self, tau: float) -> complex:
        return polaron_correlation(tau, self.ohmic, self.g)

    def decay_time(self) -> float:
        if self._t_max is None:
            t = 1.0 / self.ohmic.omega_c
            while abs(self.correlation(t)) > self._tail:
                t *= 1.5
            self._t_max = t
        return self._t_max

    def _spline(self) -> CubicSpline:
        if self._table is None:
            # dense where K varies on the 1/ω_c scale, geometric beyond
            knee = 20.0 / self.ohmic.omega_c
            t_max = max(self.decay_time(), 2.0 * knee)
            grid = np.unique(np.concatenate([
                np.linspace(0.0, knee, self._samples // 2),
                np.geomspace(knee, t_max, self._samples // 2),
            ]))
            self._t_max = t_max
            values = np.array([self.correlation(t) for t in grid])
            self._table = CubicSpline(grid, values)
        return self._table

    def spectrum(self, omega):
        if np.ndim(omega):
            return np.array([self.spectrum(float(w)) for w in np.ravel(omega)]).reshape(np.shape(omega))
        spline = self._spline()
        t_max = self.decay_time()
        re = lambda t: float(spline(t).real)
        im = lambda t: float(spline(t).imag)
        if omega == 0.0:
            return 2.0 * quad(re, 0.0, t_max, what="polaron gamma")
        return 2.0 * (
            quad(re, 0.0, t_max, weight="cos", wvar=omega, what="polaron gamma")
            - quad(im, 0.0, t_max, weight="sin", wvar=omega, what="polaron gamma")
        )

    def lamb_shift(self, omega: float) -> float:
        spline = self._spline()
        t_max = self.decay_time()
        re = lambda t: float(spline(t).real)
        im = lambda t: float(spline(t).imag)
        if omega == 0.0:
            return quad(im, 0.0, t_max, what="polaron Lamb shift")
        return quad(re, 0.0, t_max, weight="sin", wvar=omega, what="polaron Lamb shift") + quad(
            im, 0.0, t_max, weight="cos", wvar=omega, what="polaron Lamb shift"
        )

    def jump_cutoff(self) -> float:
        return 40.0 * self.ohmic.omega_c

    def describe(self) -> Dict[str, float]:
        return {"type": self.name, "g": self.g, **{f"ohmic_{k}": v for k, v in self.ohmic.describe().items()}}
