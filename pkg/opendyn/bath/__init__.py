"""Bath models, correlation functions, polaron quantities and noise synthesis."""
from opendyn.bath.base import BathModel
from opendyn.bath.ohmic import OhmicBath, beta_to_temperature, ohmic_spectrum, temperature_to_beta
from opendyn.bath.custom import CustomBath
from opendyn.bath.polaron import (
    HybridOhmicBath,
    PolaronBath,
    hybrid_polaron_spectrum,
    polaron_correlation,
    polaron_correlation_spectral_form,
    polaron_kappa,
    polaron_q1,
    polaron_q2,
)
from opendyn.bath.fluctuators import FluctuatorEnsemble, TelegraphPath, make_rng, sample_fluctuator_path
from opendyn.bath.timescales import Timescales, error_bound_estimate, polaron_timescales, timescales


def correlation(tau: float, bath: BathModel) -> complex:
    return bath.correlation(tau)


def lamb_shift(omega: float, bath: BathModel) -> float:
    return bath.lamb_shift(omega)


def jump_correlation(t: float, bath: BathModel, cutoff: float = None) -> complex:
    return bath.jump_correlation(t, cutoff)
