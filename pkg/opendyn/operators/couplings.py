"""System operators that couple to a bath."""

from typing import Callable, List, Optional, Sequence

import numpy as np

from opendyn.operators.hamiltonian import ScheduleFn, TWO_PI
from opendyn.operators.pauli import pauli_string, sigma_minus, sigma_plus
from opendyn.utils.linalg import is_hermitian

OperatorFn = Callable[[float], np.ndarray]

_PROBE_S = (0.0, 0.5, 1.0)


def _constant_operator(matrix: np.ndarray) -> OperatorFn:
    def operator(s: float) -> np.ndarray:
        return matrix
    return operator


class CouplingSet:
    """
    Hermitian coupling operators A_α(s), coupling strengths absorbed.

    `unit="hbar"` takes the matrices as given; `unit="h"` multiplies them by 2π.
    Every operator pairs only with itself (uncorrelated baths).
    """

    hermitian = True

    def __init__(
        self,
        operators: Sequence[OperatorFn],
        labels: Optional[Sequence[str]] = None,
        unit: str = "hbar",
        constant: bool = False,
    ):
        if unit not in ("hbar", "h"):
            raise ValueError(f"unknown coupling unit '{unit}'")
        self._operators = list(operators)
        self.labels = list(labels) if labels is not None else [f"A{k}" for k in range(len(self._operators))]
        if len(self.labels) != len(self._operators):
            raise ValueError("one label per coupling operator is required")
        self.unit = unit
        self.constant = constant
        self._scale = TWO_PI if unit == "h" else 1.0
        self._validate()

    @classmethod
    def from_matrices(cls, matrices: Sequence[np.ndarray], labels=None, unit: str = "hbar") -> "CouplingSet":
        mats = [np.asarray(m, dtype=complex) for m in matrices]
        return cls([_constant_operator(m) for m in mats], labels, unit, constant=True)

    @classmethod
    def from_strings(cls, specs: Sequence[str], n_qubits: int, unit: str = "hbar") -> "CouplingSet":
        return cls.from_matrices([pauli_string(spec, n_qubits) for spec in specs], list(specs), unit)

    def _validate(self):
        for label, op in zip(self.labels, self._operators):
            for s in _PROBE_S:
                a = np.asarray(op(s), dtype=complex)
                if not is_hermitian(a, 1e-12):
                    raise ValueError(f"coupling '{label}' is not Hermitian at s={s}")
                d = a.shape[0]
                if np.allclose(a, a[0, 0] * np.eye(d), atol=1e-12):
                    raise ValueError(f"coupling '{label}' is proportional to the identity")

    def __len__(self) -> int:
        return len(self._operators)

    def operator(self, alpha: int, s: float) -> np.ndarray:
        return self._scale * np.asarray(self._operators[alpha](s), dtype=complex)

    def operators(self, s: float) -> np.ndarray:
        return np.stack([self.operator(k, s) for k in range(len(self))])

    def stack(self, alpha: int, s_values: np.ndarray) -> np.ndarray:
        """A_α at every s, shape (n, d, d)."""
        if self.constant:
            a = self.operator(alpha, 0.0)
            return np.broadcast_to(a, (len(s_values),) + a.shape)
        return np.stack([self.operator(alpha, float(s)) for s in s_values])

    def partner(self, alpha: int) -> int:
        return alpha

    def dimension(self) -> int:
        return self.operator(0, 0.0).shape[0]


class PolaronCouplingSet:
    """
    Polaron-frame couplings a(s)σ⁺ᵢ and a(s)σ⁻ᵢ for every transformed qubit.

    Operators come in pairs (2k, 2k+1) = (σ⁺, σ⁻) and each member correlates
    only with the other member of its pair through K(t).
    """

    hermitian = False
    constant = False

    def __init__(self, qubits: Sequence[int], n_qubits: int, amplitude: ScheduleFn, angular: bool = False):
        if not qubits:
            raise ValueError("at least one polaron-transformed qubit is required")
        self.qubits = list(qubits)
        self.n_qubits = n_qubits
        self.amplitude = amplitude
        self._scale = 1.0 if angular else TWO_PI
        self._ops: List[np.ndarray] = []
        self.labels: List[str] = []
        for q in self.qubits:
            self._ops.extend([sigma_plus(q, n_qubits), sigma_minus(q, n_qubits)])
            self.labels.extend([f"sp{q}", f"sm{q}"])

    def __len__(self) -> int:
        return len(self._ops)

    def operator(self, alpha: int, s: float) -> np.ndarray:
        return self._scale * self.amplitude(s) * self._ops[alpha]

    def operators(self, s: float) -> np.ndarray:
        return self._scale * self.amplitude(s) * np.stack(self._ops)

    def stack(self, alpha: int, s_values: np.ndarray) -> np.ndarray:
        amps = np.array([self.amplitude(float(s)) for s in s_values])
        return (self._scale * amps)[:, np.newaxis, np.newaxis] * self._ops[alpha]

    def partner(self, alpha: int) -> int:
        return alpha + 1 if alpha % 2 == 0 else alpha - 1

    def dimension(self) -> int:
        return self._ops[0].shape[0]
