"""Integrator output container."""

from dataclasses import dataclass, field
from typing import Any, Dict, Literal, Optional, Tuple

import numpy as np

ShapeTag = Literal["vector", "matrix", "unitary"]

SUCCESS_STATUSES = ("success", "event")


@dataclass
class OdeSolution:
    """
    Save times and flat complex states. `states` restores the (d,) or (d, d)
    shape recorded in `shape`.
    """

    t: np.ndarray
    y: np.ndarray
    shape: Tuple[int, ...]
    tag: ShapeTag
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    status: str = "success"
    message: str = ""
    t_event: Optional[float] = None
    y_event: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def success(self) -> bool:
        return self.status in SUCCESS_STATUSES

    @property
    def states(self) -> np.ndarray:
        return self.y.reshape((len(self.t),) + tuple(self.shape))

    @property
    def final_state(self) -> np.ndarray:
        return self.y[-1].reshape(self.shape)

    def state(self, k: int) -> np.ndarray:
        return self.y[k].reshape(self.shape)

    def density_matrices(self) -> np.ndarray:
        """States as density matrices; vectors become |ψ⟩⟨ψ|/⟨ψ|ψ⟩."""
        states = self.states
        if self.tag == "vector":
            norms = np.sum(np.abs(states) ** 2, axis=1)
            return np.einsum("ni,nj->nij", states, states.conj()) / norms[:, np.newaxis, np.newaxis]
        return states

    def populations(self) -> np.ndarray:
        return np.real(np.einsum("nii->ni", self.density_matrices()))

    def expectation(self, operator: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("ij,nji->n", operator, self.density_matrices()))
