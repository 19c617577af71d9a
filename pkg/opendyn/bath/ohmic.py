"""Ohmic bath with exponential cutoff."""

from typing import Dict

import numpy as np

from opendyn.bath.base import BathModel, TWO_PI
from opendyn.config import KB_OVER_H_GHZ_PER_K


def temperature_to_beta(temperature_mk: float) -> float:
    """Inverse temperature in ns for the angular-frequency convention."""
    if temperature_mk <= 0:
        raise ValueError(f"temperature must be positive, got {temperature_mk} mK")
    return 1.0 / (TWO_PI * KB_OVER_H_GHZ_PER_K * temperature_mk * 1e-3)


def beta_to_temperature(beta: float) -> float:
    """Inverse of temperature_to_beta, in mK."""
    return 1.0 / (TWO_PI * KB_OVER_H_GHZ_PER_K * beta) * 1e3


def _bose_factor(x: np.ndarray) -> np.ndarray:
    """x / (1 − e^{−x}) with the x → 0 limit 1."""
    out = np.ones_like(x)
    nz = x != 0.0
    with np.errstate(over="ignore"):
        out[nz] = x[nz] / (-np.expm1(-x[nz]))
    return out


class OhmicBath(BathModel):
    """
    γ(ω) = 2π ηg² ω e^{−|ω|/ω_c} / (1 − e^{−βω})

    Args:
        eta_g2: dimensionless coupling ηg²
        omega_c: cutoff, angular GHz
        beta: inverse temperature, ns
    """

    name = "ohmic"

    def __init__(self, eta_g2: float, omega_c: float, beta: float):
        if not eta_g2 > 0 or not omega_c > 0 or not beta > 0:
            raise ValueError("OhmicBath needs eta_g2 > 0, omega_c > 0 and beta > 0")
        self.eta_g2 = float(eta_g2)
        self.omega_c = float(omega_c)
        self.beta = float(beta)

    @classmethod
    def from_physical(cls, eta_g2: float, fc_ghz: float, temperature_mk: float) -> "OhmicBath":
        """Cutoff in linear GHz and temperature in mK, as device data are quoted."""
        return cls(eta_g2, TWO_PI * fc_ghz, temperature_to_beta(temperature_mk))

    def scaled(self, factor: float) -> "OhmicBath":
        return OhmicBath(self.eta_g2 * factor, self.omega_c, self.beta)

    def spectrum(self, omega):
        w = np.asarray(omega, dtype=float)
        x = np.atleast_1d(self.beta * w)
        value = (TWO_PI * self.eta_g2 / self.beta) * np.exp(-np.abs(np.atleast_1d(w)) / self.omega_c) * _bose_factor(x)
        return float(value[0]) if w.ndim == 0 else value.reshape(w.shape)

    def breakpoints(self):
        return (0.0,)

    def pv_half_width(self, omega: float) -> float:
        return 10.0 * self.omega_c

    def jump_cutoff(self) -> float:
        return 40.0 * self.omega_c

    def describe(self) -> Dict[str, float]:
        return {"type": self.name, "eta_g2": self.eta_g2, "omega_c": self.omega_c, "beta": self.beta}


def ohmic_spectrum(omega, bath: OhmicBath):
    return bath.spectrum(omega)
