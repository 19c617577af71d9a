"""Tests for Pauli algebra, Hamiltonians and coupling operators."""

from functools import reduce

import numpy as np
import pytest

from opendyn.operators import (
    PAULI,
    CouplingSet,
    PolaronCouplingSet,
    TimeDependentHamiltonian,
    WitnessProtocol,
    build_witness_hamiltonian,
    constant_schedule,
    local_field_term,
    pauli_operator,
    pauli_string,
    sigma_minus,
    sigma_plus,
    track_eigenbasis,
    two_local_term,
    witness_ising,
    witness_schedules,
)

I, X, Y, Z = (PAULI[k] for k in "ixyz")


def kron(*ops):
    return reduce(np.kron, ops)


# ============================================
# PAULI STRINGS
# ============================================

class TestPauliStrings:
    def test_middle_qubit(self):
        np.testing.assert_array_equal(pauli_string("IZI"), kron(I, Z, I))

    def test_prefix_scales(self):
        np.testing.assert_array_equal(pauli_string("10ZII", 3), 10 * kron(Z, I, I))

    def test_two_qubit_mixed(self):
        np.testing.assert_array_equal(pauli_string("2XZ", 2), 2 * kron(X, Z))

    def test_decimal_and_negative_prefix(self):
        np.testing.assert_allclose(pauli_string("-0.5Y"), -0.5 * Y)

    @pytest.mark.parametrize("spec", ["", "ZQ", "1.2.3Z", "Z I"])
    def test_malformed(self, spec):
        with pytest.raises(ValueError):
            pauli_string(spec)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="3 qubits"):
            pauli_string("ZZ", 3)

    def test_operator_position_is_one_based(self):
        np.testing.assert_array_equal(pauli_operator("x", 1, 2), kron(X, I))
        np.testing.assert_array_equal(pauli_operator("X", 2, 2), kron(I, X))

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            pauli_operator("z", 3, 2)


class TestLadderOperators:
    def test_sigma_minus_lowers_one_to_zero(self, ket0, ket1):
        np.testing.assert_array_equal(sigma_minus(1, 1) @ ket1, ket0)
        np.testing.assert_array_equal(sigma_minus(1, 1) @ ket0, np.zeros(2))

    def test_sigma_plus_is_adjoint(self):
        np.testing.assert_array_equal(sigma_plus(2, 3), sigma_minus(2, 3).conj().T)

    def test_decomposition(self):
        np.testing.assert_allclose(sigma_plus(1, 1) + sigma_minus(1, 1), X)


class TestIsingTerms:
    def test_local_fields(self):
        h = local_field_term([0.3, -1.0], [1, 3], 3)
        np.testing.assert_allclose(h, 0.3 * kron(Z, I, I) - kron(I, I, Z))

    def test_two_local(self):
        h = two_local_term([2.0], [(1, 2)], 2)
        np.testing.assert_allclose(h, 2.0 * kron(Z, Z))

    def test_duplicate_indices(self):
        with pytest.raises(ValueError):
            local_field_term([1.0, 1.0], [1, 1], 2)

    def test_self_pair(self):
        with pytest.raises(ValueError):
            two_local_term([1.0], [(2, 2)], 2)


# ============================================
# HAMILTONIANS
# ============================================

class TestTimeDependentHamiltonian:
    def test_linear_ghz_becomes_angular(self):
        h = TimeDependentHamiltonian([(lambda s: 1.0 - s, X), (lambda s: s, Z)])
        np.testing.assert_allclose(h.evaluate(0.25), 2 * np.pi * (0.75 * X + 0.25 * Z))

    def test_angular_flag(self):
        h = TimeDependentHamiltonian.constant(Z, angular=True)
        np.testing.assert_allclose(h(0.5), Z)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            TimeDependentHamiltonian([(constant_schedule(), sigma_plus(1, 1))])

    def test_rejects_mismatched_terms(self):
        with pytest.raises(ValueError):
            TimeDependentHamiltonian([(constant_schedule(), X), (constant_schedule(), kron(X, X))])

    def test_s_outside_unit_interval(self):
        h = TimeDependentHamiltonian.constant(Z)
        with pytest.raises(ValueError):
            h.evaluate(1.5)

    def test_non_finite_schedule(self):
        h = TimeDependentHamiltonian([(lambda s: np.inf, Z)])
        with pytest.raises(ValueError, match="non-finite"):
            h.evaluate(0.0)

    def test_eigendecompose_sorted_and_truncated(self):
        h = TimeDependentHamiltonian.constant(pauli_string("ZI") + 0.5 * pauli_string("IZ"))
        eig = h.eigendecompose(0.0, lvl=2)
        assert eig.vectors.shape == (4, 2)
        np.testing.assert_allclose(eig.energies, 2 * np.pi * np.array([-1.5, -0.5]))
        np.testing.assert_allclose(eig.vectors.conj().T @ eig.vectors, np.eye(2), atol=1e-12)

    def test_is_real(self):
        assert TimeDependentHamiltonian.constant(X).is_real()
        assert not TimeDependentHamiltonian.constant(Y).is_real()


class TestTrackEigenbasis:
    def test_avoided_crossing_keeps_continuous_vectors(self):
        h = TimeDependentHamiltonian([(lambda s: 2 * s - 1, Z), (constant_schedule(0.1), X)])
        grid = np.linspace(0.0, 1.0, 401)
        energies, vectors = track_eigenbasis(h, grid)
        assert np.all(energies[:, 0] < energies[:, 1])
        overlaps = np.einsum("kin,kin->kn", vectors[:-1].conj(), vectors[1:])
        assert np.all(overlaps.real > 0.9)


# ============================================
# COUPLINGS
# ============================================

class TestCouplingSet:
    def test_from_strings_with_h_unit(self):
        cs = CouplingSet.from_strings(["ZI", "IZ"], 2, unit="h")
        assert len(cs) == 2
        np.testing.assert_allclose(cs.operator(0, 0.3), 2 * np.pi * kron(Z, I))
        assert cs.labels == ["ZI", "IZ"]

    def test_stack_of_constant_set(self):
        cs = CouplingSet.from_matrices([Z])
        stack = cs.stack(0, np.linspace(0, 1, 5))
        assert stack.shape == (5, 2, 2)

    def test_rejects_identity(self):
        with pytest.raises(ValueError, match="identity"):
            CouplingSet.from_matrices([3 * I])

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            CouplingSet.from_matrices([sigma_minus(1, 1)])

    def test_unknown_unit(self):
        with pytest.raises(ValueError):
            CouplingSet.from_matrices([Z], unit="ev")


class TestPolaronCouplingSet:
    def test_pairs_and_partners(self):
        cs = PolaronCouplingSet([1, 2], 2, constant_schedule(0.5), angular=True)
        assert len(cs) == 4
        assert [cs.partner(k) for k in range(4)] == [1, 0, 3, 2]
        np.testing.assert_allclose(cs.operator(0, 0.0), 0.5 * sigma_plus(1, 2))
        np.testing.assert_allclose(cs.operator(3, 0.0), 0.5 * sigma_minus(2, 2))

    def test_amplitude_follows_schedule(self):
        cs = PolaronCouplingSet([1], 1, lambda s: s)
        stack = cs.stack(1, np.array([0.0, 0.5, 1.0]))
        np.testing.assert_allclose(stack[1], 2 * np.pi * 0.5 * sigma_minus(1, 1))

    def test_needs_qubits(self):
        with pytest.raises(ValueError):
            PolaronCouplingSet([], 2, constant_schedule())


# ============================================
# WITNESS
# ============================================

class TestWitness:
    def test_protocol_times(self):
        protocol = WitnessProtocol(tau1=5.0, tau2=10.0)
        assert protocol.t_f == 30.0
        assert protocol.discontinuities == [5.0, 10.0, 20.0, 25.0]

    def test_stage_values(self):
        protocol = WitnessProtocol(tau1=5.0, tau2=10.0, s_star=0.339, sp_star=0.612)
        assert protocol.s_of_tau(0.0) == 1.0
        assert protocol.s_of_tau(5.0) == pytest.approx(0.339)
        assert protocol.sp_of_tau(5.0) == 1.0
        assert protocol.sp_of_tau(15.0) == pytest.approx(0.612)
        assert protocol.s_of_tau(15.0) == pytest.approx(0.339)
        assert protocol.s_of_tau(30.0) == pytest.approx(1.0)
        assert protocol.sp_of_tau(30.0) == 1.0

    def test_ising_part(self):
        h = witness_ising(0.2, 1.0, 0.5)
        expected = (0.2 * kron(Z, I, I) - kron(I, Z, I)
                    + kron(Z, Z, I) + 0.5 * kron(I, Z, Z))
        np.testing.assert_allclose(h, expected)

    def test_hamiltonian_from_schedules(self):
        (probe, system, problem), stops, t_f = witness_schedules(
            lambda s: 1.0 - s, lambda s: s, tau1=2.0, tau2=4.0)
        assert t_f == 12.0
        assert stops == [2.0, 4.0, 8.0, 10.0]
        h = build_witness_hamiltonian(0.1, 1.0, 1.0, probe, system, problem)
        assert h.dimension == 8
        assert h.is_real()
        # at the start both drivers sit at s = 1, where a(1) = 0
        np.testing.assert_allclose(h.evaluate(0.0), 2 * np.pi * witness_ising(0.1, 1.0, 1.0), atol=1e-12)
