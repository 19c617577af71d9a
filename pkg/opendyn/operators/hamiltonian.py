"""Time-dependent Hamiltonians H(s) = Σᵢ fᵢ(s) Hᵢ and their eigenbases."""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from opendyn.errors import LevelCrossingError, SolverError
from opendyn.utils.linalg import is_hermitian

ScheduleFn = Callable[[float], float]

TWO_PI = 2.0 * np.pi
_S_SLACK = 1e-9


def constant_schedule(value: float = 1.0) -> ScheduleFn:
    def schedule(s: float) -> float:
        return value
    return schedule


@dataclass(frozen=True)
class EigenDecomposition:
    """Lowest `lvl` eigenpairs; energies ascending, vectors as columns."""

    energies: np.ndarray
    vectors: np.ndarray
    lvl: int

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of every column real and positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)[np.newaxis, :]


class TimeDependentHamiltonian:
    """
    Sum of scalar schedules times constant Hermitian matrices.

    Matrices and schedules are given in linear-frequency GHz unless
    `angular=True`; `evaluate` always returns angular units (rad/ns).
    """

    def __init__(self, terms: Sequence[Tuple[ScheduleFn, np.ndarray]], angular: bool = False):
        if not terms:
            raise ValueError("Hamiltonian needs at least one term")
        mats = [np.asarray(m, dtype=complex) for _, m in terms]
        d = mats[0].shape[0]
        if d < 2:
            raise ValueError("Hamiltonian dimension must be >= 2")
        for m in mats:
            if m.shape != (d, d):
                raise ValueError(f"term of shape {m.shape} does not match dimension {d}")
            if not is_hermitian(m, 1e-12):
                raise ValueError("Hamiltonian terms must be Hermitian")
        self.schedules: List[ScheduleFn] = [f for f, _ in terms]
        self.matrices: List[np.ndarray] = mats
        self.dimension = d
        self.angular = angular
        self._scale = 1.0 if angular else TWO_PI
        self._stack = np.stack(mats) * self._scale

    @classmethod
    def constant(cls, matrix: np.ndarray, angular: bool = False) -> "TimeDependentHamiltonian":
        return cls([(constant_schedule(1.0), matrix)], angular=angular)

    def coefficients(self, s: float) -> np.ndarray:
        if s < -_S_SLACK or s > 1.0 + _S_SLACK:
            raise ValueError(f"s={s} outside [0, 1]")
        s = min(max(s, 0.0), 1.0)
        values = np.array([f(s) for f in self.schedules], dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"non-finite schedule value at s={s}")
        return values

    def evaluate(self, s: float) -> np.ndarray:
        """H(s) in angular units."""
        return np.tensordot(self.coefficients(s), self._stack, axes=1)

    __call__ = evaluate

    def eigendecompose(self, s: float, lvl: Optional[int] = None) -> EigenDecomposition:
        lvl = self.dimension if lvl is None else lvl
        if not 1 <= lvl <= self.dimension:
            raise ValueError(f"lvl={lvl} outside 1..{self.dimension}")
        try:
            energies, vectors = linalg.eigh(self.evaluate(s), subset_by_index=[0, lvl - 1])
        except linalg.LinAlgError as exc:
            raise SolverError(f"eigensolver did not converge at s={s}") from exc
        return EigenDecomposition(energies, fix_phase(vectors), lvl)

    def is_real(self, atol: float = 1e-12) -> bool:
        return all(np.max(np.abs(m.imag)) <= atol for m in self.matrices)


def evaluate(h: TimeDependentHamiltonian, s: float) -> np.ndarray:
    return h.evaluate(s)


def eigendecompose(h: TimeDependentHamiltonian, s: float, lvl: Optional[int] = None) -> EigenDecomposition:
    return h.eigendecompose(s, lvl)


def track_eigenbasis(
    h: TimeDependentHamiltonian,
    s_grid: np.ndarray,
    lvl: Optional[int] = None,
    min_overlap: float = 0.5,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenpairs over a grid with continuous ordering and sign.

    Each step reorders columns by maximal overlap with the previous step and
    rotates phases so consecutive vectors have real positive overlap.

    Returns:
        energies (n, lvl) and vectors (n, d, lvl)
    """
    lvl = h.dimension if lvl is None else lvl
    n = len(s_grid)
    energies = np.empty((n, lvl))
    vectors = np.empty((n, h.dimension, lvl), dtype=complex)

    first = h.eigendecompose(float(s_grid[0]), lvl)
    energies[0], vectors[0] = first.energies, first.vectors
    for k in range(1, n):
        eig = h.eigendecompose(float(s_grid[k]), lvl)
        overlap = vectors[k - 1].conj().T @ eig.vectors
        order = np.argmax(np.abs(overlap), axis=1)
        best = np.abs(overlap[np.arange(lvl), order])
        if len(set(order)) != lvl or np.min(best) < min_overlap:
            raise LevelCrossingError(
                f"eigenvector tracking lost between s={s_grid[k - 1]:.6g} and s={s_grid[k]:.6g}",
                {"s_interval": [float(s_grid[k - 1]), float(s_grid[k])]},
            )
        vec = eig.vectors[:, order]
        phases = overlap[np.arange(lvl), order]
        vec = vec * (np.abs(phases) / phases)[np.newaxis, :]
        energies[k] = eig.energies[order]
        vectors[k] = vec
    return energies, vectors
