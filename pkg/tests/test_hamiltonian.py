import unittest
from fractions import Fraction

import numpy as np

from spacetime.architecture import Circuit, build_bitonic_block, build_circular
from spacetime.error_codes import ErrorCodes, SpacetimeError
from spacetime.experiment_runner import closed_circuit
from spacetime.hamiltonian import (KERNEL_TOLERANCE, MAX_SUPPORT, CodeHamiltonian, RegisterLayout, clock_marginal,
                                   decode_time, encode_time, fidelity_counting, geometric_lemma_bound,
                                   geometric_lemma_check, history_state, init_terms, rotated_laplacian, rotation,
                                   winding)
from spacetime.logger_formatter import logging_setup
from spacetime.statevector import basis_state


class HamiltonianTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.logger = logging_setup(logger_name="HAMILTONIAN", log_file="unit_test_log_Hamiltonian.log")
        # Two wires sharing every layer of a depth 4 circular architecture
        cls.small = Circuit.identity(build_circular(1, 4))

    def test_clock_encoding(self):
        self.logger.debug("DEBUGGING THE CLOCK REGISTERS")
        self.assertEqual(encode_time(0, 3), (0, (0, 0, 0)))
        self.assertEqual(encode_time(3, 3), (0, (1, 1, 1)))
        self.assertEqual(encode_time(4, 3), (1, (1, 1, 1)))
        self.assertEqual(encode_time(7, 3), (1, (0, 0, 0)))
        for t in range(8):
            self.assertEqual(decode_time(*encode_time(t, 3)), t)
        self.assertIsNone(decode_time(0, (0, 1, 0)))
        with self.assertRaises(SpacetimeError) as context:
            encode_time(8, 3)
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_TIME)
        with self.assertRaises(SpacetimeError) as context:
            RegisterLayout(2, 5)
        self.assertEqual(context.exception.code, ErrorCodes.ODD_DEPTH)

    def test_register_layout(self):
        layout = RegisterLayout(3, 8)
        self.assertEqual(layout.clock_length, 3)
        self.assertEqual(layout.num_qubits, 15)
        self.assertEqual((layout.data(2), layout.flag(2), layout.clock(2, 1)), (1, 4, 9))
        tau = (0, 5, 7)
        self.assertEqual(layout.register_times(layout.register_index(tau)), tau)
        chosen = {1, 2, 5}
        pieces = layout.interval_pieces(1, chosen)
        for t in range(8):
            bits = layout.time_bits(1, t)
            selected = any(all(bits[q] == v for q, v in piece.items()) for piece in pieces)
            self.assertEqual(selected, t in chosen)

    def test_identity_kernel(self):
        for k, expected in ((2, 4), (1, 2)):
            spectrum = CodeHamiltonian(self.small, k).spectrum()
            self.assertAlmostEqual(spectrum.ground_energy, 0.0, places=8)
            self.assertEqual(spectrum.kernel_dim, expected)
            self.assertGreater(spectrum.gap, 1e-6)
        with self.assertRaises(SpacetimeError) as context:
            CodeHamiltonian(Circuit.identity(build_bitonic_block(1)), 1)
        self.assertEqual(context.exception.code, ErrorCodes.NON_CIRCULAR_ARCHITECTURE)

    def test_history_state(self):
        hamiltonian = CodeHamiltonian(self.small, 1)
        psi = history_state(self.small, basis_state(2, 0b10))
        self.assertAlmostEqual(np.linalg.norm(psi), 1.0)
        self.assertLess(np.linalg.norm(hamiltonian.operator() @ psi), 1e-10)
        report = hamiltonian.locality_report()
        self.assertEqual(report["max_support"], 6)
        self.assertEqual(report["families"]["init"], 1)

    def test_init_wrap(self):
        layout = RegisterLayout(2, 4)
        wrapped = init_terms(layout, 1)
        plain = init_terms(layout, 1, include_wrap=False)
        self.assertEqual(wrapped[0].qubits, (layout.flag(2), layout.clock(2, 1), layout.data(2)))
        # Local bits read (flag, first clock qubit, data)
        self.assertEqual(wrapped[0].matrix.diagonal().real.tolist(), [0, 1, 0, 0, 0, 1, 0, 0])
        self.assertEqual(plain[0].matrix.diagonal().real.tolist(), [0, 1, 0, 0, 0, 0, 0, 0])
        spectrum = CodeHamiltonian(self.small, 1, include_wrap=False).spectrum()
        self.assertEqual(spectrum.kernel_dim, 2)

    def test_window_terms(self):
        four = closed_circuit(2, 1, "clifford", 3)
        report = CodeHamiltonian(four, 1).locality_report()
        self.assertGreater(report["families"]["window"], 0)
        self.assertLessEqual(report["max_support"], MAX_SUPPORT)
        # Wound configurations survive in the kernel once the windows are gone
        self.assertGreater(CodeHamiltonian(four, 1, include_window=False).spectrum().kernel_dim, 2)

        six = closed_circuit(2, 2, "clifford", 3)
        self.assertEqual((six.n, six.depth), (4, 6))
        report = CodeHamiltonian(six, 1).locality_report()
        self.assertEqual(report["families"]["window"], 0)
        self.assertLessEqual(report["max_support"], MAX_SUPPORT)
        self.assertEqual(winding((1, 2, 3, 0), 4), 4)
        self.assertEqual(winding((0, 1, 0, 5), 6), 0)

    def test_causal_commutes_with_propagation(self):
        self.assertLess(CodeHamiltonian(self.small, 1).commutator_norm(), 1e-10)
        self.assertLess(CodeHamiltonian(closed_circuit(2, 1, "clifford", 3), 1).commutator_norm(), 1e-10)

    def test_clock_marginal(self):
        instances = ((self.small, 0b10), (Circuit.identity(build_circular(1, 6)), 0b00),
                     (closed_circuit(2, 1, "clifford", 3), 0b1000))
        for circuit, x in instances:
            layout = RegisterLayout(circuit.n, circuit.depth)
            psi = history_state(circuit, basis_state(circuit.n, x))
            size = layout.clock_length
            expected = np.zeros((1 << size, 1 << size))
            for t in range(size + 1):
                index = int("".join(str(bit) for bit in encode_time(t, size)[1]), 2)
                expected[index, index] = 1.0 / (size + 1)
            for p in range(1, circuit.n + 1):
                difference = clock_marginal(layout, psi, p) - expected
                self.assertLess(0.5 * np.abs(np.linalg.eigvalsh(difference)).sum(), 1e-8)

    def test_kernel_is_history_span(self):
        for k in (1, 2):
            hamiltonian = CodeHamiltonian(self.small, k)
            eigenvalues, vectors = np.linalg.eigh(hamiltonian.operator().toarray())
            kernel = vectors[:, eigenvalues < KERNEL_TOLERANCE]
            histories = np.stack([history_state(self.small, basis_state(2, x << (2 - k))) for x in range(1 << k)],
                                 axis=1)
            self.assertEqual(kernel.shape[1], 1 << k)
            difference = kernel @ kernel.conj().T - histories @ histories.conj().T
            self.assertLess(np.max(np.abs(difference)), 1e-8)

    def test_gap_matches_propagation_laplacian(self):
        hamiltonian = CodeHamiltonian(self.small, 2)
        rotated = rotated_laplacian(hamiltonian)
        laplacian_eigenvalues = np.linalg.eigvalsh(rotated.laplacian)
        laplacian_gap = laplacian_eigenvalues[laplacian_eigenvalues > KERNEL_TOLERANCE][0]
        w = rotation(self.small, rotated.configs)
        block = (w.conj().T @ hamiltonian.operator() @ w).toarray()
        block_eigenvalues = np.linalg.eigvalsh(0.5 * (block + block.conj().T))
        block_gap = block_eigenvalues[block_eigenvalues > KERNEL_TOLERANCE][0]
        self.assertAlmostEqual(laplacian_gap, 1.0)
        self.assertAlmostEqual(block_gap, laplacian_gap)
        self.assertAlmostEqual(hamiltonian.spectrum().gap, laplacian_gap)

    def test_rotated_laplacian(self):
        rotated = rotated_laplacian(CodeHamiltonian(self.small, 1))
        self.assertEqual(len(rotated.configs), 4)
        self.assertLess(rotated.kron_residual, 1e-10)
        self.assertLess(rotated.isometry_residual, 1e-10)

    def test_geometric_lemma(self):
        self.assertAlmostEqual(geometric_lemma_bound(2.0, 0.0), 0.5)
        with self.assertRaises(SpacetimeError) as context:
            geometric_lemma_bound(1.0, 1.5)
        self.assertEqual(context.exception.code, ErrorCodes.OUT_OF_RANGE_INPUT)
        report = geometric_lemma_check(CodeHamiltonian(self.small, 1))
        self.assertTrue(report.holds)

    def test_clifford_closure(self):
        circuit = closed_circuit(2, 1, "clifford", 3)
        self.assertEqual((circuit.n, circuit.depth), (4, 4))
        hamiltonian = CodeHamiltonian(circuit, 1)
        spectrum = hamiltonian.spectrum()
        self.assertAlmostEqual(spectrum.ground_energy, 0.0, places=8)
        self.assertEqual(spectrum.kernel_dim, 2)
        histories = np.stack([history_state(circuit, basis_state(4, x)) for x in (0b0000, 0b1000)], axis=1)
        operator = hamiltonian.operator()
        self.assertLess(np.max(np.abs(operator @ histories)), 1e-10)
        # Two orthonormal annihilated states fill the two dimensional kernel
        self.assertLess(np.max(np.abs(histories.conj().T @ histories - np.eye(2))), 1e-10)

    def test_fidelity_counting(self):
        count = fidelity_counting(2, 4, 0.5)
        self.assertEqual(count.ratio, Fraction(5, 12))
        self.assertEqual(count.lower_bound, Fraction(3, 8))
        self.assertGreaterEqual(count.ratio, count.lower_bound)
        with self.assertRaises(SpacetimeError) as context:
            fidelity_counting(2, 4, 0.1)
        self.assertEqual(context.exception.code, ErrorCodes.SHORT_PAD_REGION)


if __name__ == '__main__':
    unittest.main()
