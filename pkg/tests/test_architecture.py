import unittest

import numpy as np

from spacetime.architecture import (Architecture, Circuit, Permutation, bitonic_layer, build_bitonic_block,
                                    build_circular, build_product, circuit_from_json, circuit_to_json,
                                    circular_closure, hypercube_embedding, layer_placement, log2_width, relabel,
                                    route_permutation, shift_layers, shift_permutation, uniformize, wire_action,
                                    wire_trace)
from spacetime.clifford import random_clifford_circuit, random_clifford_gates
from spacetime.error_codes import ErrorCodes, SpacetimeError
from spacetime.logger_formatter import logging_setup
from spacetime.statevector import basis_state, random_state, simulate


class ArchitectureTestCase(unittest.TestCase):
    def test_bitonic_block(self):
        logger = logging_setup(logger_name="ARCHITECTURE", log_file="unit_test_log_Architecture.log")
        logger.debug("DEBUGGING THE ARCHITECTURES")
        self.assertEqual(bitonic_layer(2, 1), ((1, 3), (2, 4)))
        self.assertEqual(bitonic_layer(2, 2), ((1, 2), (3, 4)))
        block = build_bitonic_block(3)
        self.assertEqual((block.n, block.depth, block.rank), (8, 3, 3))
        self.assertEqual(block.family, "bitonic")
        self.assertEqual(build_product(2, 3).family, "product")
        self.assertEqual(build_product(2, 3).repetitions, 3)
        self.assertEqual(build_circular(2, 2).family, "circular")
        self.assertTrue(build_product(3, 2).check_dag())
        self.assertTrue(build_bitonic_block(2).check_dag())

    def test_partner(self):
        block = build_bitonic_block(2)
        self.assertEqual(block.partner(0, 1), 3)
        self.assertEqual(block.partner(1, 1), 2)
        # Layer indices are taken mod depth
        self.assertEqual(block.partner(2, 1), 3)
        self.assertEqual(build_circular(2, 2).shared_layers(1, 3), [0, 2])
        self.assertEqual(sorted(block.interaction_graph().edges), [(1, 2), (1, 3), (2, 4), (3, 4)])

    def test_invalid_architectures(self):
        with self.assertRaises(SpacetimeError) as context:
            build_bitonic_block(0)
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_RANK)
        with self.assertRaises(SpacetimeError) as context:
            log2_width(6)
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_WIDTH)
        with self.assertRaises(SpacetimeError) as context:
            Architecture(4, [((1, 2), (2, 3))])
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_ARCHITECTURE)
        with self.assertRaises(SpacetimeError) as context:
            Circuit(build_bitonic_block(1), [["II"], ["II"]])
        self.assertEqual(context.exception.code, ErrorCodes.LENGTH_MISMATCH)

    def test_shift_permutation(self):
        pi = shift_permutation(3)
        self.assertEqual(pi.mapping, (1, 3, 5, 7, 2, 4, 6, 8))
        self.assertTrue(pi.power(3).is_identity)
        self.assertEqual(pi.compose(pi.inverse()), Permutation.identity(8))
        for ell in range(1, 5):
            block = build_bitonic_block(ell)
            for j in range(ell):
                shifted = shift_layers(block, j)
                self.assertEqual(relabel(shifted, shift_permutation(ell, j)), block)

    def test_route_permutation(self):
        rng = np.random.default_rng(4)
        for n in (2, 4, 8, 16):
            ell = log2_width(n)
            sigma = Permutation(rng.permutation(n) + 1)
            circuit = route_permutation(sigma)
            self.assertEqual(circuit.depth, ell * ell)
            self.assertEqual(wire_action(circuit), sigma)
            self.assertEqual(len(wire_trace(circuit)), n)
        sigma = Permutation([3, 1, 4, 2])
        circuit = route_permutation(sigma)
        for j in range(1, 5):
            # |1> on wire j moves to wire sigma(j)
            state = simulate(circuit, basis_state(4, 1 << (4 - j)))
            self.assertAlmostEqual(abs(state[1 << (4 - sigma(j))]), 1.0)

    def test_uniformize(self):
        circuit = random_clifford_circuit(4, 2, seed=1)
        merged = uniformize(circuit)
        unmerged = uniformize(circuit, merge=False)
        self.assertEqual(merged.depth, 2 * 4 + 4)
        self.assertEqual(unmerged.depth, 2 * 5 + 4)
        self.assertEqual(merged.arch.block_rank, 2)
        rng = np.random.default_rng(9)
        for _ in range(20):
            state = random_state(4, rng)
            expected = simulate(circuit, state)
            self.assertTrue(np.allclose(simulate(merged, state), expected, atol=1e-10))
            self.assertTrue(np.allclose(simulate(unmerged, state), expected, atol=1e-10))

    def test_layer_placement(self):
        placement = layer_placement(((1, 4), (2, 3)), 4)
        self.assertEqual(placement.mapping, (1, 3, 4, 2))

    def test_circular_closure(self):
        forward = random_clifford_gates(Architecture(4, [bitonic_layer(2, 1)]), seed=2)
        closed = circular_closure(forward)
        self.assertEqual(closed.arch, build_circular(2, 2))
        state = random_state(4, 5)
        self.assertTrue(np.allclose(simulate(closed, state), state, atol=1e-10))
        with self.assertRaises(SpacetimeError) as context:
            circular_closure(Circuit.identity(Architecture(4, [bitonic_layer(2, 2)])))
        self.assertEqual(context.exception.code, ErrorCodes.UNSUPPORTED_ARCHITECTURE)

    def test_circuit_json(self):
        circuit = random_clifford_gates(build_circular(2, 2), seed=3)
        loaded = circuit_from_json(circuit_to_json(circuit))
        self.assertEqual(loaded.arch, circuit.arch)
        state = random_state(4, 6)
        self.assertTrue(np.allclose(simulate(loaded, state), simulate(circuit, state), atol=1e-12))

    def test_hypercube_embedding(self):
        arch = build_circular(2, 2)
        embedding = hypercube_embedding(arch, 1)
        self.assertEqual(len(embedding.labels), 12)
        self.assertEqual(embedding.labels[8], "C_1,1")
        self.assertEqual(embedding.min_squared_distance(), 1)
        # S_1 and F_4 differ in both corner bits and in the flag coordinate
        self.assertEqual(embedding.max_squared_diameter([[0, 7]]), 3)
        with self.assertRaises(SpacetimeError) as context:
            hypercube_embedding(Architecture(4, [((1, 4), (2, 3))]), 1)
        self.assertEqual(context.exception.code, ErrorCodes.UNSUPPORTED_ARCHITECTURE)


if __name__ == '__main__':
    unittest.main()
