"""Hamiltonians, coupling operators and multi-qubit operator algebra."""
from opendyn.operators.pauli import (
    PAULI,
    local_field_term,
    pauli_operator,
    pauli_string,
    sigma_minus,
    sigma_plus,
    two_local_term,
)
from opendyn.operators.hamiltonian import (
    EigenDecomposition,
    ScheduleFn,
    TimeDependentHamiltonian,
    constant_schedule,
    eigendecompose,
    evaluate,
    track_eigenbasis,
)
from opendyn.operators.couplings import CouplingSet, PolaronCouplingSet
from opendyn.operators.witness import (
    WitnessProtocol,
    build_witness_hamiltonian,
    witness_ising,
    witness_schedules,
)
