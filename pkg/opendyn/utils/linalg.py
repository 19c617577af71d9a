"""Small dense linear-algebra helpers shared by the solvers."""

import numpy as np
from scipy import linalg


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dag(a))


def is_hermitian(a: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(a - dag(a)), initial=0.0) <= atol)


def min_eigenvalue(rho: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of rho."""
    return float(linalg.eigvalsh(hermitize(rho))[0])


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma."""
    return 0.5 * float(np.sum(np.abs(linalg.eigvalsh(hermitize(rho - sigma)))))


def gibbs_state(h: np.ndarray, beta: float) -> np.ndarray:
    """exp(-beta H) / Z, shifted by the ground energy to avoid overflow."""
    e0 = linalg.eigvalsh(hermitize(h))[0]
    w = linalg.expm(-beta * (h - e0 * np.eye(h.shape[0])))
    return w / np.trace(w)


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, np.conj(psi))


def lindblad_dissipator(l: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """L rho L^+ - 1/2 {L^+ L, rho}."""
    ld = dag(l)
    ldl = ld @ l
    return l @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)


# Row-major vectorization: vec(X rho Y) = kron(X, Y^T) vec(rho)

def spre(a: np.ndarray) -> np.ndarray:
    return np.kron(a, np.eye(a.shape[-1]))


def spost(a: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(a.shape[-1]), a.T)


def sprepost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b.T)
