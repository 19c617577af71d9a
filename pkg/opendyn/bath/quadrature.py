"""Adaptive Gauss–Kronrod quadrature wrappers (QUADPACK through scipy)."""

import logging
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from opendyn.config import QUAD_ABS_TOL, QUAD_LIMIT, QUAD_REL_TOL
from opendyn.errors import QuadratureError

logger = logging.getLogger(__name__)

# accept QUADPACK's estimate up to this multiple of the requested tolerance
_SLACK = 1e3


def quad(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    epsabs: float = QUAD_ABS_TOL,
    epsrel: float = QUAD_REL_TOL,
    limit: int = QUAD_LIMIT,
    points: Optional[Sequence[float]] = None,
    weight: Optional[str] = None,
    wvar: Optional[float] = None,
    what: str = "integral",
) -> float:
    """
    Real integral of f over [a, b]; infinite limits and cos/sin weights allowed.

    Raises:
        QuadratureError: when the error estimate exceeds the requested tolerance
    """
    if a == b:
        return 0.0
    kwargs = dict(epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
    if weight is not None:
        kwargs.update(weight=weight, wvar=wvar)
        if np.isinf(b):
            kwargs["limlst"] = 200
    elif points is not None and np.isfinite(a) and np.isfinite(b):
        inner = sorted(p for p in points if min(a, b) < p < max(a, b))
        if inner:
            kwargs["points"] = inner
    result = integrate.quad(f, a, b, **kwargs)
    value, abserr = float(result[0]), float(result[1])
    if not np.isfinite(value):
        raise QuadratureError(f"{what}: non-finite value on [{a}, {b}]")
    allowed = _SLACK * max(epsabs, epsrel * abs(value))
    if abserr > allowed:
        raise QuadratureError(
            f"{what}: error estimate {abserr:.3g} above tolerance on [{a}, {b}]",
            {"value": value, "abserr": abserr},
        )
    if len(result) > 3:
        logger.debug("%s: %s", what, result[3])
    return value


def fourier_half_line(
    f: Callable[[float], float],
    t: float,
    kind: str,
    *,
    split: float,
    epsabs: float = QUAD_ABS_TOL,
    what: str = "fourier integral",
) -> float:
    """
    ∫₀^∞ f(ω) w(ωt) dω with w = cos or sin.

    [0, split] is integrated directly, the oscillatory tail by QUADPACK's
    Fourier-integral routine.
    """
    w = np.cos if kind == "cos" else np.sin
    head = quad(lambda x: f(x) * w(x * t), 0.0, split, epsabs=epsabs, what=what)
    if t == 0.0:
        tail = 0.0 if kind == "sin" else quad(f, split, np.inf, epsabs=epsabs, what=what)
    else:
        tail = quad(f, split, np.inf, weight=kind, wvar=t, epsabs=epsabs, epsrel=0.0, what=what)
    return head + tail
