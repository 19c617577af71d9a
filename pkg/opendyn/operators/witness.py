"""Three-qubit tunneling-witness Hamiltonian and its three-stage schedule."""

from dataclasses import dataclass
from typing import List

import numpy as np

from opendyn.operators.hamiltonian import ScheduleFn, TimeDependentHamiltonian
from opendyn.operators.pauli import local_field_term, pauli_operator, two_local_term

# Qubit 1 of the register is the probe p, qubits 2 and 3 are the system qubits.
N_WITNESS_QUBITS = 3


def witness_ising(h_p: float, j_1p: float, j_s: float) -> np.ndarray:
    """Problem Hamiltonian: fields (h_p, -J_1P, 0) and couplings J_1P (p-1), J_S (1-2)."""
    fields = local_field_term([h_p, -j_1p, 0.0], [1, 2, 3], N_WITNESS_QUBITS)
    couplings = two_local_term([j_1p, j_s], [[1, 2], [2, 3]], N_WITNESS_QUBITS)
    return fields + couplings


def build_witness_hamiltonian(
    h_p: float,
    j_1p: float,
    j_s: float,
    probe_driver: ScheduleFn,
    system_driver: ScheduleFn,
    problem: ScheduleFn,
) -> TimeDependentHamiltonian:
    """
    H = -a(s_p)σˣ_p - a(s)(σˣ₁ + σˣ₂) + b(s) H_Ising

    The three schedules are functions of the dimensionless run time and
    already contain the composition a(s_p(·)), a(s(·)), b(s(·)).
    """
    x_probe = -pauli_operator("x", 1, N_WITNESS_QUBITS)
    x_system = -(pauli_operator("x", 2, N_WITNESS_QUBITS) + pauli_operator("x", 3, N_WITNESS_QUBITS))
    return TimeDependentHamiltonian(
        [
            (probe_driver, x_probe),
            (system_driver, x_system),
            (problem, witness_ising(h_p, j_1p, j_s)),
        ]
    )


def _ramp(t: float, t0: float, t1: float, v0: float, v1: float) -> float:
    if t <= t0:
        return v0
    if t >= t1:
        return v1
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


@dataclass(frozen=True)
class WitnessProtocol:
    """
    Three-stage protocol in physical time τ (ns):
    anneal s from 1 to s*, anneal s_p from 1 to s_p*, pause τ₂, then reverse.
    """

    tau1: float
    tau2: float
    s_star: float = 0.339
    sp_star: float = 0.612

    @property
    def t_f(self) -> float:
        return 4.0 * self.tau1 + self.tau2

    @property
    def discontinuities(self) -> List[float]:
        t1, t2 = self.tau1, self.tau2
        return [t1, 2 * t1, 2 * t1 + t2, 3 * t1 + t2]

    def s_of_tau(self, tau: float) -> float:
        t1, t2 = self.tau1, self.tau2
        if tau <= t1:
            return _ramp(tau, 0.0, t1, 1.0, self.s_star)
        if tau <= 3 * t1 + t2:
            return self.s_star
        return _ramp(tau, 3 * t1 + t2, 4 * t1 + t2, self.s_star, 1.0)

    def sp_of_tau(self, tau: float) -> float:
        t1, t2 = self.tau1, self.tau2
        if tau <= t1:
            return 1.0
        if tau <= 2 * t1:
            return _ramp(tau, t1, 2 * t1, 1.0, self.sp_star)
        if tau <= 2 * t1 + t2:
            return self.sp_star
        if tau <= 3 * t1 + t2:
            return _ramp(tau, 2 * t1 + t2, 3 * t1 + t2, self.sp_star, 1.0)
        return 1.0

    def schedules(self, a: ScheduleFn, b: ScheduleFn):
        """(probe_driver, system_driver, problem) as functions of s = τ/t_f."""
        t_f = self.t_f

        def probe_driver(s: float) -> float:
            return a(self.sp_of_tau(s * t_f))

        def system_driver(s: float) -> float:
            return a(self.s_of_tau(s * t_f))

        def problem(s: float) -> float:
            return b(self.s_of_tau(s * t_f))

        return probe_driver, system_driver, problem


def witness_schedules(a: ScheduleFn, b: ScheduleFn, tau1: float, tau2: float,
                      s_star: float = 0.339, sp_star: float = 0.612):
    """Schedules, discontinuities (ns) and t_f of the three-stage witness run."""
    protocol = WitnessProtocol(tau1, tau2, s_star, sp_star)
    return protocol.schedules(a, b), protocol.discontinuities, protocol.t_f
