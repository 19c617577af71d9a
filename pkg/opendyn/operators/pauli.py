"""Multi-qubit Pauli algebra on dense matrices."""

import re
from functools import reduce
from typing import Dict, List, Sequence

import numpy as np

from opendyn.config import MAX_QUBITS


PAULI: Dict[str, np.ndarray] = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# sigma_minus lowers |1> to |0> (|0> is the +1 eigenstate of sigma_z)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)

_PAULI_STRING = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*([IXYZixyz]+)\s*$")


def _check_register(n_qubits: int):
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    if n_qubits > MAX_QUBITS:
        raise ValueError(f"n_qubits={n_qubits} exceeds the dense ceiling of {MAX_QUBITS}")


def _check_index(qubit_index: int, n_qubits: int):
    if not 1 <= qubit_index <= n_qubits:
        raise ValueError(f"qubit index {qubit_index} out of range 1..{n_qubits}")


def embed(single: np.ndarray, qubit_index: int, n_qubits: int) -> np.ndarray:
    """I ⊗ ... ⊗ single ⊗ ... ⊗ I with `single` at 1-based position qubit_index."""
    _check_register(n_qubits)
    _check_index(qubit_index, n_qubits)
    factors = [PAULI["i"]] * n_qubits
    factors[qubit_index - 1] = single
    return reduce(np.kron, factors)


def pauli_operator(axis: str, qubit_index: int, n_qubits: int) -> np.ndarray:
    key = axis.lower()
    if key not in PAULI:
        raise ValueError(f"Unknown Pauli axis '{axis}'")
    return embed(PAULI[key], qubit_index, n_qubits)


def sigma_plus(qubit_index: int, n_qubits: int) -> np.ndarray:
    return embed(SIGMA_PLUS, qubit_index, n_qubits)


def sigma_minus(qubit_index: int, n_qubits: int) -> np.ndarray:
    return embed(SIGMA_MINUS, qubit_index, n_qubits)


def local_field_term(h: Sequence[float], indices: Sequence[int], n_qubits: int) -> np.ndarray:
    """Σ_k h[k] σᶻ_{indices[k]}."""
    if len(h) != len(indices):
        raise ValueError(f"{len(h)} fields for {len(indices)} indices")
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate qubit indices in {list(indices)}")
    _check_register(n_qubits)
    out = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    for value, idx in zip(h, indices):
        out += value * pauli_operator("z", idx, n_qubits)
    return out


def two_local_term(J: Sequence[float], pairs: Sequence[Sequence[int]], n_qubits: int) -> np.ndarray:
    """Σ_k J[k] σᶻ_i σᶻ_j over pairs[k] = (i, j)."""
    if len(J) != len(pairs):
        raise ValueError(f"{len(J)} couplings for {len(pairs)} pairs")
    _check_register(n_qubits)
    out = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    for value, pair in zip(J, pairs):
        if len(pair) != 2 or pair[0] == pair[1]:
            raise ValueError(f"invalid pair {list(pair)}")
        out += value * pauli_operator("z", pair[0], n_qubits) @ pauli_operator("z", pair[1], n_qubits)
    return out


def pauli_string(spec: str, n_qubits: int = None) -> np.ndarray:
    """Parse "10ZII" style strings: optional real prefix then one Pauli letter per qubit."""
    match = _PAULI_STRING.match(spec)
    if not match:
        raise ValueError(f"Malformed Pauli string '{spec}'")
    prefix, letters = match.groups()
    if n_qubits is not None and len(letters) != n_qubits:
        raise ValueError(f"'{spec}' has {len(letters)} Pauli letters for {n_qubits} qubits")
    _check_register(len(letters))
    factors: List[np.ndarray] = [PAULI[c.lower()] for c in letters]
    scale = float(prefix) if prefix is not None else 1.0
    return scale * reduce(np.kron, factors)
