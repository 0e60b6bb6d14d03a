import unittest

import numpy as np

from spacetime.architecture import Architecture, Circuit
from spacetime.error_codes import SpacetimeError
from spacetime.logger_formatter import logging_setup
from spacetime.statevector import (GATE_MATRICES, apply_gate, basis_state, gate_matrix, inverse_gate,
                                   is_identity_gate, is_unitary, random_state, reduced_density_matrix, simulate)


class StatevectorTestCase(unittest.TestCase):
    def test_gate_matrices(self):
        logger = logging_setup(logger_name="STATEVECTOR", log_file="unit_test_log_Statevector.log")
        logger.debug("DEBUGGING THE GATES")
        for label, matrix in GATE_MATRICES.items():
            self.assertTrue(is_unitary(matrix), label)
            product = gate_matrix(label) @ gate_matrix(inverse_gate(label))
            self.assertTrue(np.allclose(product, np.eye(4)), label)
        self.assertTrue(is_identity_gate("II"))
        self.assertTrue(is_identity_gate(np.eye(4)))
        self.assertFalse(is_identity_gate("SI"))
        with self.assertRaises(SpacetimeError):
            gate_matrix("TT")
        with self.assertRaises(SpacetimeError):
            gate_matrix(2 * np.eye(4))

    def test_qubit_order(self):
        # CNOT controlled by qubit 1 of |10> on two qubits gives |11>
        state = apply_gate(basis_state(2, 2), GATE_MATRICES["CNOT"], 1, 2, 2)
        self.assertAlmostEqual(abs(state[3]), 1.0)
        # Reversed roles: control on qubit 2, |10> is left alone
        state = apply_gate(basis_state(2, 2), GATE_MATRICES["CNOT"], 2, 1, 2)
        self.assertAlmostEqual(abs(state[2]), 1.0)
        # SWAP of qubits 1 and 3 moves |100> to |001>
        state = apply_gate(basis_state(3, 4), GATE_MATRICES["SWAP"], 1, 3, 3)
        self.assertAlmostEqual(abs(state[1]), 1.0)

    def test_simulate(self):
        circuit = Circuit(Architecture(2, [((1, 2),), ((1, 2),)]), [["HI"], ["CNOT"]])
        bell = simulate(circuit, basis_state(2, 0))
        self.assertTrue(np.allclose(bell, np.array([1, 0, 0, 1]) / np.sqrt(2)))
        with self.assertRaises(SpacetimeError):
            simulate(circuit, basis_state(3, 0))

    def test_random_state_and_reduced_density(self):
        state = random_state(3, 7)
        self.assertAlmostEqual(float(np.linalg.norm(state)), 1.0)
        self.assertTrue(np.allclose(state, random_state(3, 7)))
        rho = reduced_density_matrix(state, [2, 0], 3)
        self.assertEqual(rho.shape, (4, 4))
        self.assertAlmostEqual(float(np.real(np.trace(rho))), 1.0)
        self.assertTrue(np.allclose(rho, rho.conj().T))
        product = np.kron(basis_state(1, 1), basis_state(2, 2))
        self.assertAlmostEqual(float(np.real(reduced_density_matrix(product, [0], 3)[1, 1])), 1.0)


if __name__ == '__main__':
    unittest.main()
