import unittest

import numpy as np

from spacetime.architecture import Architecture, Circuit
from spacetime.error_codes import ErrorCodes, SpacetimeError
from spacetime.logger_formatter import logging_setup
from spacetime.markov import conductance
from spacetime.statevector import basis_state
from spacetime.weighted_fk import (WeightedFK, endpoint_weight, fk_weights, gap_overlap_sweep, sweep_circuit,
                                   weighted_fk_chain, weighted_history_state)


class WeightedFKTestCase(unittest.TestCase):
    def setUp(self):
        labels = ["HI", "CNOT", "IS"]
        self.circuit = Circuit(Architecture(2, [((1, 2),)] * len(labels)), [[label] for label in labels])

    def test_weights(self):
        logger = logging_setup(logger_name="WEIGHTED_FK", log_file="unit_test_log_WeightedFK.log")
        logger.debug("DEBUGGING THE WEIGHTED CLOCK")
        weights = fk_weights(5, 0.1)
        self.assertAlmostEqual(weights.sum(), 1.0)
        self.assertAlmostEqual(weights[-1], 0.9)
        with self.assertRaises(SpacetimeError) as context:
            fk_weights(5, 1.0)
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_EPSILON)

    def test_hamiltonian(self):
        fk = WeightedFK(self.circuit, 0.1, 1)
        self.assertEqual((fk.num_gates, fk.num_steps, fk.num_qubits), (3, 5, 7))
        self.assertLessEqual(fk.max_locality(), 5)
        spectrum = fk.spectrum()
        self.assertAlmostEqual(spectrum.ground_energy, 0.0, places=8)
        self.assertEqual(spectrum.kernel_dim, 2)
        psi = weighted_history_state(fk, basis_state(2, 0))
        self.assertAlmostEqual(np.linalg.norm(psi), 1.0)
        self.assertLess(np.linalg.norm(fk.operator() @ psi), 1e-10)
        self.assertAlmostEqual(endpoint_weight(fk, psi), 0.9)

    def test_chain(self):
        chain = weighted_fk_chain(3, 2, 0.1)
        self.assertEqual(chain.size, 6)
        self.assertAlmostEqual(conductance(chain, range(5)), 1 / 20)

    def test_legal_block(self):
        labels = ["HI", "CNOT", "IS", "HI"]
        circuit = Circuit(Architecture(2, [((1, 2),)] * len(labels)), [[label] for label in labels])
        fk = WeightedFK(circuit, 0.1, 1)
        full = fk.spectrum()
        legal = fk.legal_spectrum()
        self.assertEqual(fk.legal_operator().shape, (4 * 7, 4 * 7))
        self.assertEqual(legal.kernel_dim, full.kernel_dim)
        self.assertAlmostEqual(legal.gap, full.gap, places=9)
        # The gap does not depend on the gates
        identity = WeightedFK(sweep_circuit(2, 4), 0.1, 1).legal_spectrum()
        self.assertAlmostEqual(identity.gap, legal.gap, places=9)

    def test_gap_overlap_sweep(self):
        sizes = [4, 8, 16, 32, 64]
        sweep = gap_overlap_sweep(0.1, 2, sizes)
        self.assertEqual([row["T"] for row in sweep.rows], sizes)
        self.assertEqual(sweep.constant, max(row["scaled"] for row in sweep.rows))
        for row in sweep.rows:
            num_steps = row["T"] + 2
            self.assertGreater(row["gap"], 0.0)
            # A history state with a failing input costs eps / L
            self.assertLessEqual(row["gap"], 0.1 / num_steps + 1e-12)
            self.assertAlmostEqual(row["min_endpoint_weight"], 0.1 / num_steps)
            self.assertLessEqual(row["product"], sweep.constant / row["T"] ** 2 + 1e-15)
        gaps = [row["gap"] for row in sweep.rows]
        self.assertEqual(gaps, sorted(gaps, reverse=True))
        with self.assertRaises(SpacetimeError) as context:
            sweep_circuit(4, 5)
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_PARAMETERS)


if __name__ == '__main__':
    unittest.main()
