"""Step callbacks. A callback returning a string aborts with that status."""

import warnings
from typing import Literal, Optional

import numpy as np

from opendyn.config import POSITIVITY_THRESHOLD
from opendyn.errors import OpenDynWarning
from opendyn.utils.linalg import min_eigenvalue


class PositivityCallback:
    """Minimum eigenvalue of the Hermitized state after every accepted step."""

    def __init__(self, threshold: float = POSITIVITY_THRESHOLD, action: Literal["abort", "warn"] = "abort"):
        if threshold < 0:
            raise ValueError("positivity threshold must be non-negative")
        if action not in ("abort", "warn"):
            raise ValueError(f"unknown positivity action '{action}'")
        self.threshold = threshold
        self.action = action
        self.triggered_at: Optional[float] = None
        self.min_eigenvalue: float = np.inf

    def __call__(self, t: float, state: np.ndarray) -> Optional[str]:
        if state.ndim != 2:
            raise ValueError("positivity check needs a density-matrix state")
        lam = min_eigenvalue(state)
        self.min_eigenvalue = min(self.min_eigenvalue, lam)
        if lam < -self.threshold and self.triggered_at is None:
            self.triggered_at = t
            if self.action == "abort":
                return "negative-state"
            warnings.warn(f"density matrix eigenvalue {lam:.3g} at t={t:.6g} ns", OpenDynWarning, stacklevel=2)
        return None

    def report(self) -> dict:
        return {
            "threshold": self.threshold,
            "action": self.action,
            "triggered_at": self.triggered_at,
            "min_eigenvalue": None if np.isinf(self.min_eigenvalue) else float(self.min_eigenvalue),
        }


def positivity_callback(threshold: float = POSITIVITY_THRESHOLD, action: Literal["abort", "warn"] = "abort") -> PositivityCallback:
    return PositivityCallback(threshold, action)
