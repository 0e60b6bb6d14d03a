import json
import os
import tempfile
import unittest

import pandas as pd
import yaml

from spacetime.clifford import niceness_rate
from spacetime.error_codes import ErrorCodes, SpacetimeError
from spacetime.experiment_runner import ExperimentRunner, ExperimentSpec, load_spec, run, to_jsonable
from spacetime.logger_formatter import logging_setup
from spacetime.markov import edge_flip_chain, spectral_gap


class ExperimentRunnerTestCase(unittest.TestCase):
    def setUp(self):
        self.logger = logging_setup(logger_name="EXPERIMENT_RUNNER", log_file="unit_test_log_ExperimentRunner.log")
        self.runner = ExperimentRunner({"state_cap": 100000, "seed": 0})

    def test_count(self):
        self.logger.debug("DEBUGGING THE EXPERIMENT RUNNER")
        outcome = self.runner.execute(ExperimentSpec("count", {"family": "bitonic", "rank": 4}))
        self.assertEqual(outcome.result, {"a": "11047"})
        outcome = self.runner.execute(ExperimentSpec("count", {"family": "product", "rank": 2, "m": 1}))
        self.assertEqual(outcome.result, {"a": "7"})

    def test_gap_parity(self):
        outcome = self.runner.execute(ExperimentSpec("gap", {"chain": "edge-flip", "rank": 2, "variant": "lazy"}))
        self.assertEqual(outcome.result, spectral_gap(edge_flip_chain(2, "lazy")).to_dict())

    def test_rank_and_sample(self):
        spec = ExperimentSpec("rank", {"family": "bitonic", "rank": 3, "tau": [1, 0, 1, 0, 1, 0, 1, 0]})
        index = self.runner.execute(spec).result["index"]
        back = self.runner.execute(ExperimentSpec("unrank", {"family": "bitonic", "rank": 3, "index": index}))
        self.assertEqual(back.result["configuration"], [1, 0, 1, 0, 1, 0, 1, 0])
        sample = ExperimentSpec("sample", {"family": "circular", "rank": 2, "m": 3, "seed": 7, "samples": 5})
        self.assertEqual(self.runner.execute(sample).result, self.runner.execute(sample).result)

    def test_errors(self):
        with self.assertRaises(SpacetimeError) as context:
            self.runner.execute(ExperimentSpec("bogus", {}))
        self.assertEqual(context.exception.code, ErrorCodes.UNKNOWN_COMMAND)
        with self.assertRaises(SpacetimeError) as context:
            self.runner.execute(ExperimentSpec("count", {"family": "bitonic"}))
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_PARAMETERS)
        with self.assertRaises(SpacetimeError) as context:
            self.runner.execute(ExperimentSpec("count", {"family": "bitonic", "rank": "four"}))
        self.assertEqual(context.exception.code, ErrorCodes.INVALID_PARAMETERS)

    def test_run_writes_files(self):
        with tempfile.TemporaryDirectory() as directory:
            result = run(ExperimentSpec("count", {"rank": 3}, output=directory))
            self.assertEqual(result, {"a": "82"})
            with open(os.path.join(directory, "count.json")) as fp:
                self.assertEqual(json.load(fp), {"a": "82"})
            with open(os.path.join(directory, "count.manifest.json")) as fp:
                manifest = json.load(fp)
            self.assertEqual(manifest["spec"]["command"], "count")
            self.assertIn("numpy", manifest["versions"])
            with self.assertRaises(SpacetimeError):
                run(ExperimentSpec("count", {"rank": 3}, output=directory), output_format="csv")
            run(ExperimentSpec("mcmc", {"rank": 2, "steps": 2000, "record_every": 500}, output=directory),
                output_format="csv")
            df = pd.read_csv(os.path.join(directory, "mcmc.csv"))
            self.assertEqual(list(df["step"]), [500, 1000, 1500, 2000])
            self.assertFalse([name for name in os.listdir(directory) if name.startswith(".tmp_")])

    def test_load_spec(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "spec.yaml")
            with open(path, "w") as fp:
                yaml.dump({"command": "route", "parameters": {"permutation": [2, 1, 4, 3]}}, fp)
            spec = load_spec(path)
            self.assertEqual(spec.command, "route")
            self.assertIsNone(spec.output)
            self.assertTrue(self.runner.execute(spec).result["verified"])
            with open(path, "w") as fp:
                yaml.dump({"parameters": {}}, fp)
            with self.assertRaises(SpacetimeError):
                load_spec(path)

    def test_tile(self):
        with tempfile.TemporaryDirectory() as directory:
            outcome = self.runner.execute(ExperimentSpec("tile", {"rank": 2, "tau": [0, 0, 0, 0]}, output=directory))
            self.assertEqual(outcome.result["hvtree"], "HHH")
            self.assertEqual(outcome.result["flippable"], 2)
            self.assertTrue(os.path.exists(os.path.join(directory, "tile.svg")))
            with self.assertRaises(SpacetimeError) as context:
                self.runner.execute(ExperimentSpec("tile", {"rank": 2, "tau": [1, 0, 0, 0]}, output=directory))
            self.assertEqual(context.exception.code, ErrorCodes.INVALID_CONFIGURATION)

    def test_weighted_fk(self):
        outcome = self.runner.execute(ExperimentSpec("weighted-fk", {"epsilon": 0.1, "sweep": [4, 8]}))
        result = outcome.result
        self.assertEqual(result["kernel_dim"], 2)
        self.assertAlmostEqual(result["endpoint_weight"], 0.9)
        self.assertAlmostEqual(result["conductance"], result["expected_conductance"])
        self.assertLessEqual(result["max_locality"], 5)
        self.assertEqual(len(outcome.rows), 2)

    def test_uniformize_niceness(self):
        outcome = self.runner.execute(ExperimentSpec("uniformize", {"n": 4, "depth": 2, "states": 3, "seed": 5,
                                                                    "niceness_seeds": 10}))
        result = outcome.result
        self.assertTrue(result["within_bound"])
        self.assertLess(result["max_deviation"], 1e-9)
        self.assertIsInstance(result["nice"], bool)
        self.assertAlmostEqual(result["niceness_rate"], niceness_rate(4, 2, 10, first_seed=5))
        plain = self.runner.execute(ExperimentSpec("uniformize", {"n": 4, "depth": 2, "states": 1, "seed": 5}))
        self.assertNotIn("niceness_rate", plain.result)

    def test_detect_closed_circuit(self):
        spec = ExperimentSpec("detect", {"rank": 2, "forward_depth": 1, "gates": "clifford", "k": 1, "samples": 20,
                                         "seed": 7})
        outcome = self.runner.execute(spec)
        self.assertEqual((outcome.result["n"], outcome.result["depth"]), (4, 4))
        self.assertEqual(outcome.result["samples"], 20)
        self.assertEqual(sum(case["count"] for case in outcome.result["per_case"].values()), 20)

    def test_to_jsonable(self):
        self.assertEqual(to_jsonable({"x": (1, 2), 3: float("inf")}), {"x": [1, 2], "3": "inf"})


if __name__ == '__main__':
    unittest.main()
