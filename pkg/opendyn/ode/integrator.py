"""Adaptive Tsitouras 5(4) integration for complex vectors and matrices."""

import logging
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.optimize import brentq

from opendyn.config import DEFAULT_ABSTOL, DEFAULT_MAX_STEPS, DEFAULT_RELTOL
from opendyn.ode import tableau
from opendyn.ode.solution import OdeSolution, ShapeTag

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]
Callback = Callable[[float, np.ndarray], Optional[str]]
EventFn = Callable[[float, np.ndarray], float]

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI controller exponents for a 5th-order pair
BETA1 = 0.7 / 5.0
BETA2 = 0.4 / 5.0


class IntegratorConfig(BaseModel):
    """Tolerances, step limits, forced stops, save times and hooks."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    abstol: float = Field(default=DEFAULT_ABSTOL, gt=0, description="Absolute tolerance")
    reltol: float = Field(default=DEFAULT_RELTOL, gt=0, description="Relative tolerance")
    max_steps: int = Field(default=DEFAULT_MAX_STEPS, ge=1, description="Accepted + rejected step budget")
    initial_step: Optional[float] = Field(default=None, gt=0, description="First trial step (auto if unset)")
    max_step: Optional[float] = Field(default=None, gt=0, description="Upper bound on the step size")
    tstops: List[float] = Field(default_factory=list, description="Discontinuities the steps must land on")
    saveat: Optional[List[float]] = Field(default=None, description="Save times; every step if unset")
    callbacks: List[Callable] = Field(default_factory=list, description="Hooks run after accepted steps")
    event: Optional[Callable] = Field(default=None, description="Terminal event g(t, y); stops where g crosses 0 downwards")
    method: Literal["tsit5", "rk4"] = Field(default="tsit5", description="Adaptive Tsit5 or fixed-step RK4")
    dt: Optional[float] = Field(default=None, gt=0, description="RK4 step size")

    @field_validator("tstops", "saveat", mode="before")
    @classmethod
    def as_float_list(cls, v):
        if v is None:
            return v
        return [float(x) for x in np.ravel(np.asarray(v, dtype=float))]

    @field_validator("tstops")
    @classmethod
    def sorted_stops(cls, v):
        if any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("forced stop times must be sorted")
        return v


def _error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, cfg: IntegratorConfig) -> float:
    scale = cfg.abstol + cfg.reltol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(rhs: Rhs, t0: float, y0: np.ndarray, f0: np.ndarray, span: float, cfg: IntegratorConfig) -> float:
    scale = cfg.abstol + cfg.reltol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100.0 * h0, h1, span)


def _stages(rhs: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    ks = [k1]
    for i in range(1, 7):
        acc = y.copy()
        for j, a in enumerate(tableau.A[i]):
            acc += (h * a) * ks[j]
        ks.append(rhs(t + tableau.C[i] * h, acc))
    # stage 7 is evaluated at the 5th-order solution itself
    y_new = y + h * sum(b * k for b, k in zip(tableau.A[6], ks[:6]))
    return y_new, ks


def _dense(y: np.ndarray, h: float, ks: Sequence[np.ndarray], theta: float) -> np.ndarray:
    weights = tableau.dense_weights(theta)
    return y + h * sum(w * k for w, k in zip(weights, ks))


def _run_hooks(cfg: IntegratorConfig, t: float, y: np.ndarray) -> Optional[str]:
    for hook in cfg.callbacks:
        reason = hook(t, y)
        if reason:
            return reason
    return None


def integrate(
    rhs: Rhs,
    y0: np.ndarray,
    t_span: Tuple[float, float],
    cfg: Optional[IntegratorConfig] = None,
    tag: Optional[ShapeTag] = None,
) -> OdeSolution:
    """
    Integrate y' = rhs(t, y) over t_span.

    Steps never cross a forced stop time; the stage that lands on a stop is
    not reused as the first stage of the next step.
    """
    cfg = cfg or IntegratorConfig()
    y = np.array(y0, dtype=complex)
    shape = y.shape
    tag = tag or ("vector" if y.ndim == 1 else "matrix")
    if cfg.method == "rk4":
        return integrate_fixed(rhs, y, t_span, cfg, tag)

    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"t_span must be increasing, got {t_span}")
    stops = [s for s in cfg.tstops if t0 < s < t1] + [t1]
    save_all = cfg.saveat is None
    saves = np.array(sorted(s for s in (cfg.saveat or []) if t0 <= s <= t1))
    save_idx = 0

    ts: List[float] = []
    ys: List[np.ndarray] = []
    if save_all or (len(saves) and saves[0] == t0):
        ts.append(t0)
        ys.append(y.ravel().copy())
        save_idx += int(not save_all)

    result = dict(n_accepted=0, n_rejected=0, status="success", message="")
    t = t0
    k1 = rhs(t, y)
    n_rhs = 1
    if not np.all(np.isfinite(k1)):
        return OdeSolution(np.array(ts), np.array(ys), shape, tag, status="non-finite",
                           message="non-finite derivative at t0", n_rhs=n_rhs)
    h = cfg.initial_step or _initial_step(rhs, t, y, k1, t1 - t0, cfg)
    n_rhs += 1
    if cfg.max_step:
        h = min(h, cfg.max_step)
    err_prev = 1e-4
    g_prev = cfg.event(t, y) if cfg.event else None
    t_event = y_event = None

    for stop in stops:
        if result["status"] != "success":
            break
        while t < stop:
            if result["n_accepted"] + result["n_rejected"] >= cfg.max_steps:
                result.update(status="max-steps", message=f"max steps {cfg.max_steps} reached at t={t:.6g}")
                break
            if h <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
                result.update(status="step-size-underflow", message=f"step size underflow at t={t:.6g}")
                break
            h_full = h
            landing = t + h >= stop - 1e-12 * max(abs(stop), 1.0)
            if landing:
                h = stop - t
            y_new, ks = _stages(rhs, t, y, h, k1)
            n_rhs += 6
            err_vec = h * sum(bt * k for bt, k in zip(tableau.BTILDE, ks))
            err = _error_norm(err_vec, y, y_new, cfg)
            if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
                result["n_rejected"] += 1
                h *= MIN_FACTOR
                if h <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
                    result.update(status="non-finite", message=f"non-finite state near t={t:.6g}")
                    break
                continue
            if err > 1.0:
                result["n_rejected"] += 1
                h *= max(MIN_FACTOR, SAFETY * err ** (-1.0 / 5.0))
                continue

            # accepted
            t_new = stop if landing else t + h
            result["n_accepted"] += 1

            if cfg.event is not None:
                g_new = cfg.event(t_new, y_new.reshape(shape))
                if g_prev > 0 >= g_new:
                    def g_theta(theta):
                        return cfg.event(t + theta * h, _dense(y, h, ks, theta).reshape(shape))
                    theta = brentq(g_theta, 0.0, 1.0, xtol=1e-13)
                    t_event = t + theta * h
                    y_event = _dense(y, h, ks, theta).reshape(shape)
                    while save_idx < len(saves) and saves[save_idx] <= t_event:
                        th = (saves[save_idx] - t) / h
                        ts.append(float(saves[save_idx]))
                        ys.append(_dense(y, h, ks, th).ravel())
                        save_idx += 1
                    if save_all:
                        ts.append(t_event)
                        ys.append(y_event.ravel().copy())
                    result.update(status="event", message=f"event at t={t_event:.6g}")
                    t = t_event
                    y = y_event.ravel().reshape(shape)
                    break
                g_prev = g_new

            if save_all:
                ts.append(t_new)
                ys.append(y_new.ravel().copy())
            else:
                while save_idx < len(saves) and saves[save_idx] <= t_new:
                    ts_k = float(saves[save_idx])
                    if ts_k == t_new:
                        ys.append(y_new.ravel().copy())
                    else:
                        ys.append(_dense(y, h, ks, (ts_k - t) / h).ravel())
                    ts.append(ts_k)
                    save_idx += 1

            t, y = t_new, y_new
            reason = _run_hooks(cfg, t, y)
            if reason:
                result.update(status=reason, message=f"{reason} at t={t:.6g}")
                t_event = t
                break

            err = max(err, 1e-10)
            factor = SAFETY * err ** (-BETA1) * err_prev ** BETA2
            factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            err_prev = err
            h_next = h * factor
            if cfg.max_step:
                h_next = min(h_next, cfg.max_step)
            if landing:
                k1 = rhs(t, y)
                n_rhs += 1
                # keep the pre-landing step size when the stop truncated it
                h = max(h_next, h_full)
            else:
                k1 = ks[6]
                h = h_next

    return OdeSolution(
        t=np.array(ts),
        y=np.array(ys) if ys else np.empty((0, int(np.prod(shape))), dtype=complex),
        shape=shape,
        tag=tag,
        n_accepted=result["n_accepted"],
        n_rejected=result["n_rejected"],
        n_rhs=n_rhs,
        status=result["status"],
        message=result["message"],
        t_event=t_event,
        y_event=y_event,
    )


def integrate_fixed(
    rhs: Rhs,
    y0: np.ndarray,
    t_span: Tuple[float, float],
    cfg: Optional[IntegratorConfig] = None,
    tag: Optional[ShapeTag] = None,
) -> OdeSolution:
    """Classical RK4 with equal steps between consecutive stop or save times."""
    cfg = cfg or IntegratorConfig(method="rk4")
    y = np.array(y0, dtype=complex)
    shape = y.shape
    tag = tag or ("vector" if y.ndim == 1 else "matrix")
    t0, t1 = float(t_span[0]), float(t_span[1])
    dt = cfg.dt or (t1 - t0) / 1000.0
    save_all = cfg.saveat is None
    marks = set(s for s in cfg.tstops if t0 < s < t1) | {t1}
    if not save_all:
        marks |= set(s for s in cfg.saveat if t0 < s <= t1)
    save_set = None if save_all else set(cfg.saveat)

    ts, ys = [], []
    if save_all or t0 in save_set:
        ts.append(t0)
        ys.append(y.ravel().copy())
    t, steps, status, message = t0, 0, "success", ""
    for mark in sorted(marks):
        n = max(1, int(np.ceil((mark - t) / dt - 1e-12)))
        h = (mark - t) / n
        for i in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = mark if i == n - 1 else t + h
            steps += 1
            if not np.all(np.isfinite(y)):
                status, message = "non-finite", f"non-finite state at t={t:.6g}"
                break
            if save_all or (i == n - 1 and t in save_set):
                ts.append(t)
                ys.append(y.ravel().copy())
            reason = _run_hooks(cfg, t, y)
            if reason:
                status, message = reason, f"{reason} at t={t:.6g}"
                break
        if status != "success":
            break
    return OdeSolution(np.array(ts), np.array(ys), shape, tag, n_accepted=steps,
                       n_rhs=4 * steps, status=status, message=message)
