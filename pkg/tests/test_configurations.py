import random
import unittest
from collections import Counter

import numpy as np
from scipy.stats import chisquare

from spacetime.architecture import Permutation, build_bitonic_block, build_circular, build_product, relabel
from spacetime.configurations import (Move, MoveDirection, available_moves, canonical_window, count_architecture,
                                      count_bitonic, count_circular, count_first_layer_incomplete, count_product,
                                      count_qubit_at_zero, enumerate_valid, growth_constant_estimate, is_valid, rank,
                                      sample_uniform, unrank, v_count, width)
from spacetime.error_codes import CapExceededError, ErrorCodes, SpacetimeError
from spacetime.logger_formatter import logging_setup


class ConfigurationsTestCase(unittest.TestCase):
    def test_is_valid(self):
        logger = logging_setup(logger_name="CONFIGURATIONS", log_file="unit_test_log_Configurations.log")
        logger.debug("DEBUGGING THE CONFIGURATIONS")
        block = build_bitonic_block(2)
        self.assertTrue(is_valid(block, (0, 0, 0, 0)))
        self.assertTrue(is_valid(block, (1, 0, 1, 0)))
        self.assertFalse(is_valid(block, (2, 2, 0, 0)))
        self.assertTrue(is_valid(build_product(2, 3), (0,) * 4))
        with self.assertRaises(SpacetimeError) as context:
            is_valid(block, (0, 0))
        self.assertEqual(context.exception.code, ErrorCodes.LENGTH_MISMATCH)

    def test_available_moves(self):
        block = build_bitonic_block(2)
        self.assertEqual(available_moves(block, (0, 0, 0, 0)),
                         [Move(1, (1, 3), MoveDirection.APPLY), Move(1, (2, 4), MoveDirection.APPLY)])
        for ell in (2, 3):
            full = build_bitonic_block(ell)
            moves = available_moves(full, (ell,) * (1 << ell))
            self.assertTrue(all(move.layer == ell and move.direction == MoveDirection.UNAPPLY for move in moves))
            self.assertEqual(len(moves), 1 << (ell - 1))
        with self.assertRaises(SpacetimeError) as context:
            available_moves(block, (2, 2, 0, 0))
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_CONFIGURATION)

    def test_counts(self):
        self.assertEqual([count_bitonic(ell) for ell in range(5)], [1, 2, 7, 82, 11047])
        self.assertEqual([count_first_layer_incomplete(ell) for ell in (1, 2, 3)], [1, 3, 33])
        self.assertEqual(count_product(2, 2), 13)
        self.assertEqual(count_product(3, 2), 181)
        self.assertEqual(count_product(3, 1), 82)
        self.assertEqual(count_circular(2, 2), 12)
        self.assertEqual(count_circular(3, 3), 297)
        self.assertEqual(count_circular(1, 5), 5)
        self.assertEqual(v_count(3), 49)
        self.assertEqual(count_qubit_at_zero(2, 1), 2)
        self.assertEqual(count_qubit_at_zero(2, 2, mode="circular"), 3)
        with self.assertRaises(SpacetimeError) as context:
            count_qubit_at_zero(2, 1, mode="diagonal")
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_PARAMETERS)

    def test_enumeration_matches_counts(self):
        for ell in range(1, 5):
            self.assertEqual(len(enumerate_valid(build_bitonic_block(ell))), count_bitonic(ell))
        for ell in range(1, 4):
            for m in range(1, 5):
                self.assertEqual(len(enumerate_valid(build_product(ell, m))), count_product(ell, m))
                if m >= 2:
                    self.assertEqual(len(enumerate_valid(build_circular(ell, m))), count_circular(ell, m))
        self.assertEqual(len(enumerate_valid(build_circular(1, 3))), 3)
        with self.assertRaises(CapExceededError) as context:
            enumerate_valid(build_bitonic_block(3), cap=10)
        self.assertEqual(context.exception.cap, 10)

    def test_qubit_at_zero_by_enumeration(self):
        for ell in (2, 3):
            configs = enumerate_valid(build_bitonic_block(ell))
            self.assertEqual(sum(tau[0] == 0 for tau in configs), count_qubit_at_zero(ell, 1))
        for m in (2, 3):
            configs = enumerate_valid(build_circular(2, m))
            self.assertEqual(sum(tau[0] == 0 for tau in configs), count_qubit_at_zero(2, m, mode="circular"))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        block = build_bitonic_block(3)
        relabeled = relabel(block, Permutation(rng.permutation(8) + 1))
        self.assertEqual(len(enumerate_valid(relabeled)), 82)

    def test_width_and_dichotomy(self):
        for ell in range(1, 5):
            for tau in enumerate_valid(build_bitonic_block(ell)):
                self.assertLess(width(tau), ell)
                self.assertTrue(min(tau) >= 1 or max(tau) <= ell - 1)
        self.assertEqual(width((3, 3, 3, 3)), 0)
        self.assertEqual(canonical_window((11, 0, 1, 0), 12), (11, 2))
        for tau in enumerate_valid(build_circular(3, 4)):
            self.assertLess(width(tau, circular_depth=12), 3)

    def test_rank_unrank(self):
        self.assertEqual(unrank(build_bitonic_block(1), 0), (1, 1))
        self.assertEqual(unrank(build_bitonic_block(1), 1), (0, 0))
        architectures = [build_bitonic_block(ell) for ell in (1, 2, 3)] + [
            build_product(2, 2), build_product(2, 3), build_product(3, 2), build_circular(2, 2),
            build_circular(2, 3), build_circular(3, 2)]
        for arch in architectures:
            configs = enumerate_valid(arch)
            ranks = [rank(arch, tau) for tau in configs]
            self.assertEqual(sorted(ranks), list(range(count_architecture(arch))), f"{arch}")
            for tau, index in zip(configs, ranks):
                self.assertEqual(unrank(arch, index), tau)
        block = build_bitonic_block(4)
        self.assertEqual(sorted(rank(block, tau) for tau in enumerate_valid(block)), list(range(11047)))
        with self.assertRaises(SpacetimeError) as context:
            unrank(block, 11047)
        self.assertEqual(context.exception.code, ErrorCodes.INDEX_OUT_OF_RANGE)
        with self.assertRaises(SpacetimeError) as context:
            rank(build_bitonic_block(2), (2, 2, 0, 0))
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_CONFIGURATION)

    def test_sample_uniform(self):
        arch = build_circular(3, 4)
        self.assertEqual(sample_uniform(arch, 7), sample_uniform(arch, 7))
        block = build_bitonic_block(3)
        rng = random.Random(2024)
        samples = [sample_uniform(block, rng) for _ in range(10 ** 5)]
        self.assertTrue(all(is_valid(block, tau) for tau in set(samples)))
        counts = Counter(rank(block, tau) for tau in samples)
        observed = [counts.get(index, 0) for index in range(82)]
        self.assertGreater(chisquare(observed).pvalue, 0.001)

    def test_circular_marginal(self):
        arch = build_circular(2, 2)
        rng = random.Random(5)
        total = 4000
        marginal = Counter(sample_uniform(arch, rng)[0] for _ in range(total))
        sigma = (total * 0.25 * 0.75) ** 0.5
        for t in range(4):
            self.assertLess(abs(marginal[t] - total / 4), 4 * sigma)

    def test_growth_constant(self):
        self.assertLess(abs(growth_constant_estimate(12) - 1.8445), 0.01)


if __name__ == '__main__':
    unittest.main()
