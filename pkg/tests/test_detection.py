import unittest

from spacetime.architecture import Architecture, Circuit, build_circular
from spacetime.detection import (classify_pauli, clock_sign, default_sweep_circuit, detection_sweep,
                                 detection_threshold, flag_stabilizer, flip_padded_circuit, pauli_energy, rect,
                                 stabilizer_energies, stabilizer_set)
from spacetime.error_codes import ErrorCodes, SpacetimeError
from spacetime.experiment_runner import closed_circuit
from spacetime.hamiltonian import CodeHamiltonian, history_state
from spacetime.logger_formatter import logging_setup
from spacetime.pauli import PauliString, single_qubit_string
from spacetime.statevector import basis_state


class DetectionTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.logger = logging_setup(logger_name="DETECTION", log_file="unit_test_log_Detection.log")
        # n = 2, D = 6: qubits S1 S2 F1 F2 C11 C12 C21 C22
        cls.circuit = Circuit.identity(build_circular(1, 6))
        cls.hamiltonian = CodeHamiltonian(cls.circuit, 1)
        cls.state = history_state(cls.circuit, basis_state(2, 0))

    def test_stabilizers(self):
        self.logger.debug("DEBUGGING THE STABILIZERS")
        self.assertEqual(rect(self.circuit, 1, 1), (1, 2))
        with self.assertRaises(SpacetimeError) as context:
            rect(self.circuit, 1, 3)
        self.assertEqual(context.exception.code, ErrorCodes.INDEX_OUT_OF_RANGE)
        group = stabilizer_set(self.circuit)
        self.assertEqual(group.rank, 3)
        self.assertTrue(group.contains(PauliString.from_string("IIIIZIZI")))
        self.assertFalse(group.contains(PauliString.from_string("IIZIIIII")))
        layout = self.hamiltonian.layout
        self.assertEqual(clock_sign(self.circuit, (4, 4), flag_stabilizer(layout)), 1)
        self.assertAlmostEqual(stabilizer_energies(self.hamiltonian, self.state), 0.0)

    def test_classification(self):
        layout = self.hamiltonian.layout
        group = stabilizer_set(self.circuit)
        cases = {"IIIIXIII": "1", "IIXXIIII": "2.1", "IIXIIIII": "2.2", "ZIIIIIII": "3.1",
                 "IIIIZIZI": "stabilizer", "IIIIZIII": "3.2.1.1", "IIZIIIII": "3.2.2"}
        for text, case in cases.items():
            self.assertEqual(classify_pauli(layout, group, PauliString.from_string(text)), case)

    def test_energies(self):
        threshold = detection_threshold(6)
        clock_flip = pauli_energy(self.hamiltonian, single_qubit_string(8, 4, "X"), self.state)
        self.assertGreaterEqual(clock_flip.best_value, threshold)
        flag_phase = pauli_energy(self.hamiltonian, single_qubit_string(8, 2, "Z"), self.state)
        self.assertAlmostEqual(flag_phase.best_value, 2 / 6)
        self.assertTrue(flag_phase.best_term.startswith("prop"))
        with self.assertRaises(SpacetimeError) as context:
            pauli_energy(self.hamiltonian, PauliString.from_string("XX"), self.state)
        self.assertEqual(context.exception.code, ErrorCodes.DIMENSION_MISMATCH)

    def test_flag_flip_on_padded_core(self):
        core = Circuit(Architecture(2, [((1, 2),)]), [["II"]])
        circuit = flip_padded_circuit(core)
        self.assertEqual(circuit.depth, 4)
        hamiltonian = CodeHamiltonian(circuit, 1)
        state = history_state(circuit, basis_state(2, 0))
        rows = detection_sweep(hamiltonian, state, paulis=[PauliString.from_string("IIXXII")])
        self.assertEqual(rows[0]["case"], "2.1")
        self.assertTrue(rows[0]["detected"])
        self.assertGreaterEqual(rows[0]["expectation"], detection_threshold(4))

    def test_sweep_circuit(self):
        circuit = default_sweep_circuit()
        self.assertEqual((circuit.n, circuit.depth), (2, 12))
        hamiltonian = CodeHamiltonian(circuit, 1)
        state = history_state(circuit, basis_state(2, 0))
        rows = detection_sweep(hamiltonian, state, num_samples=20, seed=1)
        self.assertEqual(len(rows), 20)
        for row in rows:
            self.assertNotEqual(row["case"], "stabilizer")
            self.assertAlmostEqual(row["threshold"], detection_threshold(12))
            self.assertEqual(row["detected"], row["expectation"] >= row["threshold"])

    def test_clifford_instance_sweep(self):
        circuit = closed_circuit(2, 1, "clifford", 3)
        self.assertEqual((circuit.n, circuit.depth), (4, 4))
        hamiltonian = CodeHamiltonian(circuit, 1)
        state = history_state(circuit, basis_state(4, 0))
        layout = hamiltonian.layout
        for p in range(1, 5):
            clock_flip = pauli_energy(hamiltonian, single_qubit_string(layout.num_qubits, layout.clock(p, 1), "X"),
                                      state)
            self.assertGreaterEqual(clock_flip.best_value, 2 / circuit.depth - 1e-9)
        rows = detection_sweep(hamiltonian, state, num_samples=500, seed=7)
        self.assertEqual(len(rows), 500)
        missed = [row["pauli"] for row in rows if not row["detected"]]
        self.assertEqual(missed, [])


if __name__ == '__main__':
    unittest.main()
