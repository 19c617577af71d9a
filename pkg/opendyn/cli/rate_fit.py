"""
Tunneling-rate extraction: fit P(t₂) = a·e^{b t₂} + c·e^{d t₂} and report
Γ = −∂P/∂t₂ at t₂ = 0 = −ab − cd.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from opendyn.errors import FitError, OpenDynError
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)

MIN_POINTS = 4
_FLAT_TOL = 1e-12
_LM_TOL = 1e-14


@dataclass
class RateFitResult:
    """Bi-exponential fit of one h_p; `status` is "ok" or the failure kind."""

    h_p: Optional[float]
    tau2: np.ndarray
    populations: np.ndarray
    a: float = float("nan")
    b: float = float("nan")
    c: float = float("nan")
    d: float = float("nan")
    gamma: float = float("nan")
    residual: float = float("nan")
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def model(self, t2) -> np.ndarray:
        t2 = np.asarray(t2, dtype=float)
        return self.a * np.exp(self.b * t2) + self.c * np.exp(self.d * t2)


@dataclass
class RateSweepResult:
    fits: List[RateFitResult] = field(default_factory=list)

    def gammas(self) -> np.ndarray:
        return np.array([f.gamma for f in self.fits])

    def h_p(self) -> np.ndarray:
        return np.array([f.h_p for f in self.fits])


# ============================================
# FITTING
# ============================================

def _log_linear(t: np.ndarray, p: np.ndarray) -> Optional[Tuple[float, float]]:
    """Single exponential through the positive points: (amplitude, rate)."""
    pos = p > 0
    if np.count_nonzero(pos) < 2:
        return None
    slope, intercept = np.polyfit(t[pos], np.log(p[pos]), 1)
    return float(np.exp(intercept)), float(slope)


def _initial_guess(u: np.ndarray, p: np.ndarray) -> np.ndarray:
    """
    Peel the slow component off the late half, then fit the early residual.
    Falls back to splitting a single log-linear fit into two rates.
    """
    half = len(u) // 2
    single = _log_linear(u, p) or (float(p[0]), -1.0)
    slow = _log_linear(u[half:], p[half:])
    if slow is not None:
        c, d = slow
        fast = _log_linear(u[: half + 1], (p - c * np.exp(d * u))[: half + 1])
        if fast is not None and fast[1] < d:
            return np.array([fast[0], fast[1], c, d])
    amp, rate = single
    return np.array([0.5 * amp, 2.0 * rate, 0.5 * amp, 0.5 * rate])


def fit_biexponential(tau2: Sequence[float], populations: Sequence[float], h_p: Optional[float] = None) -> RateFitResult:
    """
    Levenberg-Marquardt fit of a·e^{b t₂} + c·e^{d t₂}.

    Times are rescaled to [0, 1] for the fit; the rates are returned in 1/ns.
    Constant data give Γ = 0 without iterating. Raises FitError when the
    fit does not converge or Γ is not finite.
    """
    t = np.asarray(tau2, dtype=float)
    p = np.asarray(populations, dtype=float)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("tau2 and populations must be 1-D arrays of equal length")
    if len(t) < MIN_POINTS:
        raise ValueError(f"the rate fit needs at least {MIN_POINTS} points, got {len(t)}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
        raise FitError("non-finite populations", {"h_p": h_p})

    result = RateFitResult(h_p=h_p, tau2=t, populations=p)
    if np.ptp(p) <= _FLAT_TOL * max(1.0, float(np.max(np.abs(p)))):
        result.a, result.b, result.c, result.d = float(np.mean(p)), 0.0, 0.0, 0.0
        result.gamma, result.residual = 0.0, float(np.linalg.norm(p - np.mean(p)))
        return result

    scale = float(np.max(np.abs(t))) or 1.0
    u = t / scale

    def residuals(x):
        a, b, c, d = x
        return a * np.exp(b * u) + c * np.exp(d * u) - p

    def jacobian(x):
        a, b, c, d = x
        eb, ed = np.exp(b * u), np.exp(d * u)
        return np.column_stack([eb, a * u * eb, ed, c * u * ed])

    x0 = _initial_guess(u, p)
    fit = least_squares(residuals, x0, jac=jacobian, method="lm", xtol=_LM_TOL, ftol=_LM_TOL, gtol=_LM_TOL)
    if not fit.success:
        raise FitError(f"bi-exponential fit did not converge: {fit.message}", {"h_p": h_p, "nfev": int(fit.nfev)})

    a, b, c, d = fit.x
    b, d = b / scale, d / scale
    gamma = -(a * b + c * d)
    if not np.isfinite(gamma):
        raise FitError("fitted rate is not finite", {"h_p": h_p, "params": [float(v) for v in fit.x]})
    # fast component first
    if d < b:
        a, b, c, d = c, d, a, b
    result.a, result.b, result.c, result.d = float(a), float(b), float(c), float(d)
    result.gamma = float(gamma)
    result.residual = float(np.linalg.norm(fit.fun))
    return result


# ============================================
# SWEEP
# ============================================

def rate_sweep(
    run_point: Callable[[float, float], float],
    h_p_values: Sequence[float],
    tau2_values: Sequence[float],
) -> RateSweepResult:
    """
    Γ(h_p) table. `run_point(h_p, tau2)` returns the target population after
    the full protocol; a failing point or fit is reported for its h_p and the
    sweep moves on.
    """
    if len(tau2_values) < MIN_POINTS:
        raise ValueError(f"the rate sweep needs at least {MIN_POINTS} tau2 points")
    tracer = get_tracer()
    out = RateSweepResult()
    t2 = np.asarray(tau2_values, dtype=float)
    for h_p in h_p_values:
        pops = np.full(len(t2), np.nan)
        failed = None
        for k, tau2 in enumerate(t2):
            try:
                pops[k] = run_point(float(h_p), float(tau2))
            except OpenDynError as exc:
                failed = f"tau2={tau2}: {exc.message}"
                logger.warning("rate sweep point h_p=%s tau2=%s failed: %s", h_p, tau2, exc.message)
                break
        if failed is not None:
            out.fits.append(RateFitResult(h_p=float(h_p), tau2=t2, populations=pops, status="solver", message=failed))
            tracer.log_fit(float(h_p), None, None)
            continue
        try:
            fit = fit_biexponential(t2, pops, float(h_p))
        except FitError as exc:
            fit = RateFitResult(h_p=float(h_p), tau2=t2, populations=pops, status="fit", message=exc.message)
        tracer.log_fit(float(h_p), fit.gamma if fit.ok else None, fit.residual if fit.ok else None)
        out.fits.append(fit)
    return out
