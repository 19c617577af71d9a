"""System-bath timescales and the error-bound diagnostics built on them."""

from typing import Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from opendyn.bath.base import BathModel
from opendyn.bath.quadrature import quad
from opendyn.errors import QuadratureError

CorrelationLike = Union[BathModel, Callable[[float], complex]]


class Timescales(BaseModel):
    """τ_SB (fastest decoherence) and τ_B (bath memory), both in ns."""
    model_config = ConfigDict(frozen=True)

    tau_sb: float = Field(gt=0, description="1/τ_SB = ∫₀^∞|C(τ)|dτ")
    tau_b: float = Field(gt=0, description="first moment of |C| over [0, t_f]")
    t_f: float = Field(gt=0, description="upper limit used for the τ_B moment")


def _abs_correlation(source: CorrelationLike) -> Callable[[float], float]:
    corr = source.correlation if isinstance(source, BathModel) else source
    return lambda tau: float(abs(corr(tau)))


def timescales(source: CorrelationLike, t_f: float = np.inf, upper: float = np.inf) -> Timescales:
    """
    1/τ_SB = ∫₀^∞|C|; τ_B = ∫₀^{t_f} τ|C| / ∫₀^∞|C|.

    `source` is a bath or any callable τ → C(τ). Pure relative tolerances
    keep both results exactly covariant under a rescaling of C. Baths with
    a finite correlation support are integrated over that support only.
    """
    if isinstance(source, BathModel):
        upper = min(upper, source.correlation_support())
    mag = _abs_correlation(source)
    try:
        norm = quad(mag, 0.0, upper, epsabs=0.0, what="1/tau_SB")
        moment = quad(lambda tau: tau * mag(tau), 0.0, min(t_f, upper), epsabs=0.0, what="tau_B moment")
    except QuadratureError as exc:
        raise QuadratureError(f"correlation does not decay fast enough: {exc.message}", exc.details) from exc
    if not (np.isfinite(norm) and norm > 0 and np.isfinite(moment) and moment > 0):
        raise QuadratureError("correlation does not decay: timescales undefined", {"norm": norm, "moment": moment})
    return Timescales(tau_sb=1.0 / norm, tau_b=moment / norm, t_f=min(t_f, upper))


def polaron_timescales(source: CorrelationLike, t_f: float = np.inf, delta_m: float = 1.0) -> Timescales:
    """Timescales of the polaron correlation K(τ) with the Δ_m² prefactor on 1/τ_SB."""
    base = timescales(source, t_f)
    return Timescales(tau_sb=base.tau_sb / delta_m**2, tau_b=base.tau_b, t_f=base.t_f)


def error_bound_estimate(
    kind: Literal["redfield", "davies", "cgme", "ptre"],
    ts: Timescales,
    t: float,
    delta_e: Optional[float] = None,
) -> float:
    """
    Argument of the O(·) error bound with the constant taken as 1.

    For "ptre" pass timescales from polaron_timescales.
    """
    ratio = ts.tau_b / ts.tau_sb
    growth = np.exp(12.0 * t / ts.tau_sb)
    if kind in ("redfield", "ptre"):
        return float(ratio * growth * np.log(ts.tau_sb / ts.tau_b))
    if kind == "davies":
        if delta_e is None or not delta_e > 0:
            raise ValueError("the Davies bound needs a positive gap delta_e")
        return float((ratio + 1.0 / np.sqrt(ts.tau_sb * delta_e)) * growth)
    if kind == "cgme":
        return float(np.sqrt(ratio) * np.exp(6.0 * t / ts.tau_sb))
    raise ValueError(f"unknown bound '{kind}'")
