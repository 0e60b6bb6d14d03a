"""
Batch front-end of the library: every analysis is a command that takes a parameter mapping
and returns a JSON-compatible result. Results, CSV rows and a manifest are written atomically.
"""
import json
import logging
import math
import os
import platform
import random
import tempfile
import time
from fractions import Fraction
from importlib import metadata
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
import yaml

from .architecture import (Architecture, Circuit, Permutation, bitonic_layer, build_bitonic_block, build_circular,
                           build_product, circuit_to_json, circular_closure, hypercube_embedding, log2_width,
                           route_permutation, uniformize, wire_action)
from .clifford import decompose_clifford, is_nice, niceness_rate, random_clifford_circuit, random_clifford_gates
from .configurations import (DEFAULT_STATE_CAP, count_bitonic, count_circular, count_first_layer_incomplete,
                             count_product, count_qubit_at_zero, enumerate_valid, is_valid, rank, sample_uniform,
                             unrank)
from .detection import default_sweep_circuit, detection_sweep
from .error_codes import ErrorCodes, SpacetimeError
from .hamiltonian import CodeHamiltonian, RegisterLayout, history_state
from .logger_formatter import DEFAULT_LOGGER_NAME
from .markov import (DEFAULT_DENSE_LIMIT, block_decomposition, chain_from_laplacian, cheeger_bound, conductance,
                     config_graph, edge_flip_chain, madras_randall_bound, mcmc_run, spectral_gap, toggle_chain,
                     window_cuts)
from .statevector import basis_state, random_state, simulate
from .tilings import config_to_hvtree, config_to_tiling, flippable_edges, tiling_to_json, tiling_to_svg
from .weighted_fk import WeightedFK, endpoint_weight, gap_overlap_sweep, weighted_fk_chain, weighted_history_state

# Packages whose versions are recorded in every manifest
MANIFEST_PACKAGES = ("numpy", "scipy", "networkx", "pandas", "PyYAML")
# Gates of the default weighted global-clock instance
DEFAULT_FK_GATES = ("HI", "CNOT", "IS")
# Circuit sizes of the default gap-overlap sweep
DEFAULT_FK_SWEEP = (4, 8, 16, 32, 64)


class ExperimentSpec(NamedTuple):
    command: str
    parameters: Dict
    output: Optional[str] = None


class RunResult(NamedTuple):
    result: Dict
    # CSV rows for sweep and trajectory commands
    rows: Optional[List[Dict]]
    files: List[str]


def load_spec(path: str) -> ExperimentSpec:
    """ Read an ExperimentSpec YAML file {command, parameters, output} """
    with open(path, 'r') as fp:
        data = yaml.load(fp, Loader=yaml.SafeLoader)
    if not isinstance(data, dict) or "command" not in data:
        raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"{path} has no command")
    return ExperimentSpec(command=data["command"], parameters=dict(data.get("parameters") or {}),
                          output=data.get("output"))


def to_jsonable(value):
    """ Convert numpy scalars and arrays, fractions and tuples into plain JSON values """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def atomic_write(path: str, content: str) -> None:
    """ Write to a temporary file of the same directory and rename it over the target """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    descriptor, temporary = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(descriptor, "w") as fp:
            fp.write(content)
        os.replace(temporary, path)
    except OSError:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for package in MANIFEST_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def build_family(family: str, ell: int, m: int = 1) -> Architecture:
    builders = {"bitonic": lambda: build_bitonic_block(ell), "product": lambda: build_product(ell, m),
                "circular": lambda: build_circular(ell, m)}
    if family not in builders:
        raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown architecture family {family}")
    return builders[family]()


def closed_circuit(ell: int, forward_depth: int, gates: str, seed: Optional[int]) -> Circuit:
    """ Identity-equivalent circular circuit from forward_depth bitonic layers of identity or random Clifford gates """
    forward = Architecture(1 << ell, [bitonic_layer(ell, t % ell + 1) for t in range(forward_depth)])
    if gates == "identity":
        circuit = Circuit.identity(forward)
    elif gates == "clifford":
        circuit = random_clifford_gates(forward, seed)
    else:
        raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown gate model {gates}")
    return circular_closure(circuit)


class ExperimentRunner:
    """ Execute ExperimentSpecs with the global parameters of experiment_parameters.yaml """

    def __init__(self, parameters: Optional[Dict] = None, logger_name: str = DEFAULT_LOGGER_NAME):
        parameters = parameters if parameters else dict()
        self.__logger = logging.getLogger(f"{logger_name}.{__name__}")
        self.__output_dir = parameters.get("output_dir", "results")
        self.__state_cap = int(parameters.get("state_cap", DEFAULT_STATE_CAP))
        self.__dense_limit = int(parameters.get("dense_limit", DEFAULT_DENSE_LIMIT))
        self.__hamiltonian_dense_limit = int(parameters.get("hamiltonian_dense_limit", DEFAULT_DENSE_LIMIT))
        self.__seed = int(parameters.get("seed", 0))
        self.__commands: Dict[str, Callable[[Dict, str], RunResult]] = {
            "count": self.__count, "enumerate": self.__enumerate, "rank": self.__rank, "unrank": self.__unrank,
            "sample": self.__sample, "tile": self.__tile, "mcmc": self.__mcmc, "gap": self.__gap,
            "decompose-bound": self.__decompose_bound, "hamiltonian": self.__hamiltonian, "detect": self.__detect,
            "route": self.__route, "uniformize": self.__uniformize, "embed": self.__embed,
            "weighted-fk": self.__weighted_fk,
        }

    @property
    def commands(self) -> Tuple[str, ...]:
        return tuple(self.__commands)

    def execute(self, spec: ExperimentSpec) -> RunResult:
        """ Run a command without writing anything """
        if spec.command not in self.__commands:
            raise SpacetimeError(ErrorCodes.UNKNOWN_COMMAND, f"unknown command {spec.command}")
        output_dir = spec.output if spec.output else self.__output_dir
        self.__logger.info(f"Running {spec.command} with {spec.parameters}")
        return self.__commands[spec.command](dict(spec.parameters), output_dir)

    def run(self, spec: ExperimentSpec, output_format: str = "json") -> Dict:
        """ Run a command and write <out>/<command>.json (or .csv) and <out>/<command>.manifest.json
        :param spec: the experiment
        :param output_format: json or csv, csv needs a command that produces rows
        :return: the JSON result
        """
        if output_format not in ("json", "csv"):
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown format {output_format}")
        start = time.time()
        outcome = self.execute(spec)
        wall_time = time.time() - start
        output_dir = spec.output if spec.output else self.__output_dir
        result = to_jsonable(outcome.result)
        files = list(outcome.files)
        base = os.path.join(output_dir, spec.command)
        if output_format == "csv":
            if outcome.rows is None:
                raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"{spec.command} has no CSV rows")
            atomic_write(f"{base}.csv", pd.DataFrame(to_jsonable(outcome.rows)).to_csv(index=False))
            files.append(f"{base}.csv")
        else:
            payload = dict(result)
            if outcome.rows is not None:
                payload["rows"] = to_jsonable(outcome.rows)
            atomic_write(f"{base}.json", json.dumps(payload, indent=2))
            files.append(f"{base}.json")
        manifest = {"spec": {"command": spec.command, "parameters": to_jsonable(spec.parameters),
                             "output": output_dir},
                    "versions": package_versions(), "wall_time": wall_time, "files": files}
        atomic_write(f"{base}.manifest.json", json.dumps(manifest, indent=2))
        self.__logger.info(f"{spec.command} finished in {wall_time:.2f}s, files: {files}")
        return result

    # Parameter helpers
    @staticmethod
    def __int(parameters: Dict, key: str, default: Optional[int] = None) -> int:
        value = parameters.get(key, default)
        if value is None:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"missing parameter {key}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"parameter {key}={value} is not an integer")

    def __architecture(self, parameters: Dict) -> Architecture:
        return build_family(parameters.get("family", "bitonic"), self.__int(parameters, "rank"),
                            self.__int(parameters, "m", 1))

    def __cap(self, parameters: Dict) -> int:
        return self.__int(parameters, "cap", self.__state_cap)

    def __seed_of(self, parameters: Dict) -> int:
        return self.__int(parameters, "seed", self.__seed)

    # Commands
    def __count(self, parameters: Dict, _: str) -> RunResult:
        family = parameters.get("family", "bitonic")
        ell = self.__int(parameters, "rank")
        m = self.__int(parameters, "m", 1)
        counters = {
            "bitonic": lambda: count_bitonic(ell),
            "product": lambda: count_product(ell, m),
            "circular": lambda: count_circular(ell, m),
            "first-layer-incomplete": lambda: count_first_layer_incomplete(ell),
            "qubit-at-zero": lambda: count_qubit_at_zero(ell, m, parameters.get("mode", "linear")),
        }
        if family not in counters:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown count family {family}")
        return RunResult(result={"a": str(counters[family]())}, rows=None, files=[])

    def __enumerate(self, parameters: Dict, _: str) -> RunResult:
        configs = enumerate_valid(self.__architecture(parameters), self.__cap(parameters))
        return RunResult(result={"count": str(len(configs)), "configurations": [list(c) for c in configs]},
                         rows=None, files=[])

    def __rank(self, parameters: Dict, _: str) -> RunResult:
        tau = parameters.get("tau")
        if tau is None:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, "rank needs a configuration tau")
        return RunResult(result={"index": str(rank(self.__architecture(parameters), [int(t) for t in tau]))},
                         rows=None, files=[])

    def __unrank(self, parameters: Dict, _: str) -> RunResult:
        index = self.__int(parameters, "index")
        return RunResult(result={"configuration": list(unrank(self.__architecture(parameters), index))},
                         rows=None, files=[])

    def __sample(self, parameters: Dict, _: str) -> RunResult:
        arch = self.__architecture(parameters)
        rng = random.Random(self.__seed_of(parameters))
        samples = [list(sample_uniform(arch, rng)) for _ in range(self.__int(parameters, "samples", 1))]
        return RunResult(result={"seed": self.__seed_of(parameters), "samples": samples}, rows=None, files=[])

    def __tile(self, parameters: Dict, output_dir: str) -> RunResult:
        ell = self.__int(parameters, "rank")
        tau = [int(t) for t in parameters.get("tau", [0] * (1 << ell))]
        if not is_valid(build_bitonic_block(ell), tau):
            raise SpacetimeError(ErrorCodes.INVALID_CONFIGURATION, f"{tau} is not a valid configuration")
        tiling = config_to_tiling(ell, tau)
        svg_path = os.path.join(output_dir, "tile.svg")
        atomic_write(svg_path, tiling_to_svg(tiling, highlight=flippable_edges(tiling)))
        result = {"tau": tau, "hvtree": "".join(config_to_hvtree(ell, tau).labels),
                  "tiling": json.loads(tiling_to_json(tiling)), "flippable": len(flippable_edges(tiling))}
        return RunResult(result=result, rows=None, files=[svg_path])

    def __mcmc(self, parameters: Dict, _: str) -> RunResult:
        outcome = mcmc_run(parameters.get("chain", "toggle"), self.__int(parameters, "rank"),
                           self.__int(parameters, "steps", 10 ** 5), seed=self.__seed_of(parameters),
                           record_every=self.__int(parameters, "record_every", 1000))
        result = {"kind": outcome.kind, "rank": outcome.rank, "steps": outcome.steps, "seed": outcome.seed,
                  "accepted": outcome.accepted, "tv_distance": outcome.tv_distance, "tau_int": outcome.tau_int,
                  "gap_estimate": outcome.gap_estimate, "final_state": list(outcome.final_state)}
        return RunResult(result=result, rows=outcome.rows, files=[])

    def __gap(self, parameters: Dict, _: str) -> RunResult:
        chain_name = parameters.get("chain", "toggle")
        cap = self.__cap(parameters)
        if chain_name == "hamiltonian":
            hamiltonian = CodeHamiltonian(closed_circuit(self.__int(parameters, "rank"),
                                                         self.__int(parameters, "forward_depth", 1),
                                                         parameters.get("gates", "identity"),
                                                         self.__seed_of(parameters)),
                                          self.__int(parameters, "k", 1),
                                          dense_limit=self.__hamiltonian_dense_limit)
            return RunResult(result=hamiltonian.spectrum().to_dict(), rows=None, files=[])
        if chain_name == "edge-flip":
            chain = edge_flip_chain(self.__int(parameters, "rank"), parameters.get("variant", "lazy"), cap)
        elif chain_name == "toggle":
            chain = toggle_chain(self.__architecture(parameters), cap=cap)
        elif chain_name == "laplacian":
            chain = chain_from_laplacian(config_graph(self.__architecture(parameters), cap))
        else:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown chain {chain_name}")
        return RunResult(result=spectral_gap(chain, self.__dense_limit).to_dict(), rows=None, files=[])

    def __decompose_bound(self, parameters: Dict, _: str) -> RunResult:
        ell = self.__int(parameters, "rank")
        m = self.__int(parameters, "m")
        decomposition = block_decomposition(ell, m, self.__cap(parameters))
        chain = chain_from_laplacian(config_graph(build_circular(ell, m), self.__cap(parameters)))
        report = madras_randall_bound(chain, decomposition, self.__dense_limit)
        cheeger = cheeger_bound(chain, cuts=window_cuts(ell, m, chain.states))
        result = dict(report._asdict())
        result.update({"states": chain.size, "block_sizes": [len(block) for block in decomposition.blocks],
                       "cheeger_phi": cheeger.phi, "cheeger_lower": cheeger.lower, "cheeger_upper": cheeger.upper,
                       "cheeger_holds": bool(cheeger.lower <= report.gap <= cheeger.upper + 1e-12)})
        return RunResult(result=result, rows=None, files=[])

    def __hamiltonian(self, parameters: Dict, output_dir: str) -> RunResult:
        circuit = closed_circuit(self.__int(parameters, "rank"), self.__int(parameters, "forward_depth", 1),
                                 parameters.get("gates", "identity"), self.__seed_of(parameters))
        k = self.__int(parameters, "k", 1)
        hamiltonian = CodeHamiltonian(circuit, k, include_window=bool(parameters.get("include_window", True)),
                                      dense_limit=self.__hamiltonian_dense_limit)
        spectrum = hamiltonian.spectrum()
        residuals = list()
        for x in range(1 << k):
            psi = history_state(circuit, basis_state(circuit.n, x << (circuit.n - k)), self.__cap(parameters))
            residuals.append(float(np.linalg.norm(hamiltonian.operator() @ psi)))
        result = {"n": circuit.n, "depth": circuit.depth, "k": k, "num_qubits": hamiltonian.num_qubits,
                  **spectrum.to_dict(), "history_residual": max(residuals),
                  "commutator_norm": hamiltonian.commutator_norm(), "locality": hamiltonian.locality_report()}
        files = list()
        if parameters.get("write_terms", False):
            path = os.path.join(output_dir, "hamiltonian_terms.json")
            atomic_write(path, json.dumps(hamiltonian.to_json()))
            files.append(path)
        return RunResult(result=result, rows=None, files=files)

    def __detect(self, parameters: Dict, _: str) -> RunResult:
        if "rank" in parameters:
            circuit = closed_circuit(self.__int(parameters, "rank"), self.__int(parameters, "forward_depth", 1),
                                     parameters.get("gates", "identity"), self.__seed_of(parameters))
        else:
            circuit = default_sweep_circuit()
        hamiltonian = CodeHamiltonian(circuit, self.__int(parameters, "k", 1),
                                      dense_limit=self.__hamiltonian_dense_limit)
        state = history_state(circuit, basis_state(circuit.n, 0), self.__cap(parameters))
        rows = detection_sweep(hamiltonian, state, num_samples=self.__int(parameters, "samples", 500),
                               seed=self.__seed_of(parameters))
        frame = pd.DataFrame(rows)
        per_case = frame.groupby("case")["detected"].agg(["count", "sum"]).reset_index()
        result = {"samples": len(rows), "detected": int(frame["detected"].sum()), "n": circuit.n,
                  "depth": circuit.depth,
                  "per_case": {row["case"]: {"count": int(row["count"]), "detected": int(row["sum"])}
                               for _, row in per_case.iterrows()}}
        return RunResult(result=result, rows=rows, files=[])

    def __route(self, parameters: Dict, _: str) -> RunResult:
        if "permutation" in parameters:
            sigma = Permutation([int(v) for v in parameters["permutation"]])
        else:
            n = self.__int(parameters, "n")
            rng = np.random.default_rng(self.__seed_of(parameters))
            sigma = Permutation(rng.permutation(n) + 1)
        circuit = route_permutation(sigma)
        swaps = sum(gate == "SWAP" for layer in circuit.gates for gate in layer)
        result = {"permutation": list(sigma.mapping), "depth": circuit.depth, "swaps": swaps,
                  "verified": wire_action(circuit) == sigma, "circuit": circuit_to_json(circuit)}
        return RunResult(result=result, rows=None, files=[])

    def __uniformize(self, parameters: Dict, _: str) -> RunResult:
        n = self.__int(parameters, "n")
        depth = self.__int(parameters, "depth")
        seed = self.__seed_of(parameters)
        circuit = random_clifford_circuit(n, depth, seed)
        merge = bool(parameters.get("merge", True))
        uniform = uniformize(circuit, merge=merge)
        ell = log2_width(n)
        rng = np.random.default_rng(seed)
        deviation = 0.0
        for _ in range(self.__int(parameters, "states", 20)):
            state = random_state(n, rng)
            deviation = max(deviation, float(np.max(np.abs(simulate(circuit, state) - simulate(uniform, state)))))
        # The final routing back to the input positions adds one more block product
        bound = depth * (ell * ell + (0 if merge else 1)) + ell * ell
        result = {"n": n, "input_depth": depth, "output_depth": uniform.depth, "depth_bound": bound,
                  "within_bound": uniform.depth <= bound, "max_deviation": deviation,
                  "nice": is_nice(decompose_clifford(circuit)).nice}
        niceness_seeds = self.__int(parameters, "niceness_seeds", 0)
        if niceness_seeds:
            result["niceness_rate"] = niceness_rate(n, depth, niceness_seeds, first_seed=seed)
            self.__logger.info(f"{result['niceness_rate']:.3f} of {niceness_seeds} decomposed circuits are nice")
        return RunResult(result=result, rows=None, files=[])

    def __embed(self, parameters: Dict, _: str) -> RunResult:
        arch = build_circular(self.__int(parameters, "rank"), self.__int(parameters, "m", 2))
        layout = RegisterLayout(arch.n, arch.depth)
        embedding = hypercube_embedding(arch, layout.clock_length)
        hamiltonian = CodeHamiltonian(Circuit.identity(arch), 0)
        # The winding terms span a square of the interaction graph and are reported apart
        local = [term.qubits for term in hamiltonian.terms if term.family != "window"]
        window = [term.qubits for term in hamiltonian.terms if term.family == "window"]
        diameter = embedding.max_squared_diameter(local)
        result = {"registers": len(embedding.labels), "min_squared_distance": embedding.min_squared_distance(),
                  "max_term_squared_diameter": diameter, "within_sqrt3": diameter <= 3,
                  "window_squared_diameter": embedding.max_squared_diameter(window)}
        return RunResult(result=result, rows=None, files=[])

    def __weighted_fk(self, parameters: Dict, _: str) -> RunResult:
        epsilon = float(parameters.get("epsilon", 0.1))
        labels = list(parameters.get("gates", DEFAULT_FK_GATES))
        k = self.__int(parameters, "k", 1)
        circuit = Circuit(Architecture(2, [((1, 2),)] * len(labels)), [[label] for label in labels])
        fk = WeightedFK(circuit, epsilon, k)
        spectrum = fk.spectrum(self.__hamiltonian_dense_limit)
        psi = weighted_history_state(fk, basis_state(circuit.n, 0))
        chain = weighted_fk_chain(fk.num_gates, fk.n, epsilon)
        sweep = gap_overlap_sweep(epsilon, fk.n, [int(t) for t in parameters.get("sweep", DEFAULT_FK_SWEEP)], k=k,
                                  dense_limit=self.__dense_limit)
        result = {"epsilon": epsilon, "num_gates": fk.num_gates, "num_qubits": fk.num_qubits,
                  **spectrum.to_dict(), "endpoint_weight": endpoint_weight(fk, psi),
                  "history_residual": float(np.linalg.norm(fk.operator() @ psi)),
                  "conductance": conductance(chain, list(range(fk.num_steps))),
                  "expected_conductance": 1.0 / (4 * fk.num_steps), "max_locality": fk.max_locality(),
                  "sweep_constant": sweep.constant}
        return RunResult(result=result, rows=sweep.rows, files=[])


def run(spec: ExperimentSpec, parameters: Optional[Dict] = None, output_format: str = "json",
        logger_name: str = DEFAULT_LOGGER_NAME) -> Dict:
    return ExperimentRunner(parameters, logger_name=logger_name).run(spec, output_format)
