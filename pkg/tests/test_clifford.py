import unittest

import numpy as np

from spacetime.architecture import Architecture, Circuit
from spacetime.clifford import (CLIFFORD_GROUP_ORDER, canonical_key, clifford_element, clifford_word,
                                decompose_clifford, is_nice, niceness_rate, random_clifford_circuit)
from spacetime.error_codes import ErrorCodes, SpacetimeError
from spacetime.logger_formatter import logging_setup
from spacetime.statevector import GATE_MATRICES, random_state, simulate


class CliffordTestCase(unittest.TestCase):
    def test_group(self):
        logger = logging_setup(logger_name="CLIFFORD", log_file="unit_test_log_Clifford.log")
        logger.debug("DEBUGGING THE CLIFFORD GROUP")
        element = clifford_element(CLIFFORD_GROUP_ORDER - 1)
        product = np.eye(4, dtype=complex)
        for label in element.word:
            product = GATE_MATRICES[label] @ product
        self.assertEqual(canonical_key(product), canonical_key(element.matrix))
        self.assertEqual(clifford_element(0).word, tuple())
        with self.assertRaises(SpacetimeError) as context:
            clifford_element(CLIFFORD_GROUP_ORDER)
        self.assertEqual(context.exception.code, ErrorCodes.INDEX_OUT_OF_RANGE)

    def test_words(self):
        self.assertEqual(clifford_word("II"), tuple())
        self.assertEqual(clifford_word("CNOT"), ("CNOT",))
        swap = np.eye(4, dtype=complex)
        for label in clifford_word("SWAP"):
            swap = GATE_MATRICES[label] @ swap
        self.assertEqual(canonical_key(swap), canonical_key(GATE_MATRICES["SWAP"]))
        t_gate = np.diag([1, 1, 1, np.exp(1j * np.pi / 4)])
        with self.assertRaises(SpacetimeError) as context:
            clifford_word(t_gate)
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_GATE)

    def test_random_circuit_and_decomposition(self):
        circuit = random_clifford_circuit(4, 3, seed=8)
        self.assertEqual(circuit.depth, 3)
        again = random_clifford_circuit(4, 3, seed=8)
        self.assertEqual(circuit.arch, again.arch)
        decomposed = decompose_clifford(circuit)
        self.assertGreaterEqual(decomposed.depth, circuit.depth)
        rng = np.random.default_rng(20)
        for _ in range(20):
            state = random_state(4, rng)
            overlap = np.vdot(simulate(decomposed, state), simulate(circuit, state))
            # Equal up to a global phase
            self.assertAlmostEqual(float(abs(overlap)), 1.0, places=9)
        with self.assertRaises(SpacetimeError) as context:
            random_clifford_circuit(3, 1)
        self.assertEqual(context.exception.code, ErrorCodes.ODD_WIDTH)

    def test_niceness(self):
        arch = Architecture(2, [((1, 2),)] * 2)
        self.assertFalse(is_nice(Circuit(arch, [["HI"], ["SI"]])).nice)
        witness = is_nice(Circuit(Architecture(2, [((1, 2),)] * 4), [["HI"], ["IH"], ["SI"], ["IS"]]))
        self.assertTrue(witness.nice)
        self.assertEqual(witness.h_layers, ((0,), (1,)))
        self.assertEqual(witness.s_layers, ((2,), (3,)))
        rate = niceness_rate(2, 6, seeds=5)
        self.assertTrue(0.0 <= rate <= 1.0)

    def test_niceness_rate_sixteen_wires(self):
        logger = logging_setup(logger_name="CLIFFORD", log_file="unit_test_log_Clifford.log")
        rate = niceness_rate(16, 4, seeds=200)
        logger.info(f"Niceness rate at n = 16, depth 4 over 200 seeds: {rate:.3f}")
        self.assertTrue(0.0 <= rate <= 1.0)
        # Multiples of 1 / 200
        self.assertAlmostEqual(rate * 200, round(rate * 200))


if __name__ == '__main__':
    unittest.main()
