"""
Two-qubit Clifford group, random Clifford circuits, gate-set decomposition and the niceness predicate.
"""
import functools
import logging
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from .architecture import Architecture, Circuit
from .error_codes import ErrorCodes, SpacetimeError
from .logger_formatter import DEFAULT_LOGGER_NAME
from .statevector import GATE_MATRICES, Gate, gate_matrix

# Generators of the two-qubit Clifford group modulo phase
GENERATOR_LABELS = ("HI", "IH", "SI", "IS", "CNOT")
# Number of two-qubit Clifford elements modulo global phase
CLIFFORD_GROUP_ORDER = 11520

_LOGGER = logging.getLogger(f"{DEFAULT_LOGGER_NAME}.{__name__}")


class CliffordElement(NamedTuple):
    # Exact product of the word, applied left to right
    matrix: np.ndarray
    word: Tuple[str, ...]


def canonical_key(matrix: np.ndarray) -> bytes:
    """ Hashable key of a unitary modulo global phase """
    flat = np.asarray(matrix, dtype=complex).reshape(-1)
    pivot = flat[np.argmax(np.abs(flat) > 1e-9)]
    normalized = flat * (abs(pivot) / pivot)
    # + 0.0 turns -0.0 into 0.0
    return (np.round(normalized.real, 6) + 0.0).tobytes() + (np.round(normalized.imag, 6) + 0.0).tobytes()


@functools.lru_cache(maxsize=1)
def two_qubit_clifford_group() -> Tuple[CliffordElement, ...]:
    """ Breadth-first enumeration of the group generated by H and S on each qubit and CNOT.
    The order is canonical and each element keeps a shortest word.
    """
    identity = np.eye(4, dtype=complex)
    elements = [CliffordElement(matrix=identity, word=tuple())]
    seen = {canonical_key(identity)}
    frontier = 0
    while frontier < len(elements):
        current = elements[frontier]
        frontier += 1
        for label in GENERATOR_LABELS:
            product = GATE_MATRICES[label] @ current.matrix
            key = canonical_key(product)
            if key not in seen:
                seen.add(key)
                elements.append(CliffordElement(matrix=product, word=current.word + (label,)))
    _LOGGER.debug(f"Two-qubit Clifford group enumerated with {len(elements)} elements")
    return tuple(elements)


@functools.lru_cache(maxsize=1)
def _clifford_index() -> Dict[bytes, int]:
    return {canonical_key(element.matrix): index for index, element in enumerate(two_qubit_clifford_group())}


def clifford_element(index: int) -> CliffordElement:
    group = two_qubit_clifford_group()
    if not 0 <= index < len(group):
        raise SpacetimeError(ErrorCodes.INDEX_OUT_OF_RANGE, f"Clifford index {index} out of range")
    return group[index]


def clifford_word(gate: Gate) -> Tuple[str, ...]:
    """ Generator word of a Clifford gate, equal to the gate up to a global phase """
    if isinstance(gate, str) and gate == "II":
        return tuple()
    if isinstance(gate, str) and gate in GENERATOR_LABELS:
        return (gate,)
    index = _clifford_index().get(canonical_key(gate_matrix(gate)))
    if index is None:
        raise SpacetimeError(ErrorCodes.INVALID_GATE, "gate is not a two-qubit Clifford")
    return two_qubit_clifford_group()[index].word


def random_matching(n: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    order = rng.permutation(n) + 1
    return sorted((int(min(a, b)), int(max(a, b))) for a, b in zip(order[0::2], order[1::2]))


def random_clifford_circuit(n: int, depth: int, seed: Optional[Union[int, np.random.Generator]] = None) -> Circuit:
    """ Random perfect matching per layer with a uniform two-qubit Clifford on each pair
    :param n: even number of wires
    :param depth: number of layers
    :param seed: seed or numpy Generator
    :return: circuit whose gates are the exact products of their generator words
    """
    if n % 2:
        raise SpacetimeError(ErrorCodes.ODD_WIDTH, f"width {n} is odd")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    group = two_qubit_clifford_group()
    layers, gates = list(), list()
    for _ in range(depth):
        layers.append(random_matching(n, rng))
        gates.append([group[int(rng.integers(len(group)))].matrix for _ in range(n // 2)])
    return Circuit(Architecture(n, layers), gates)


def random_clifford_gates(arch: Architecture, seed: Optional[Union[int, np.random.Generator]] = None) -> Circuit:
    """ Uniform two-qubit Clifford on every slot of a given architecture """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    group = two_qubit_clifford_group()
    return Circuit(arch, [[group[int(rng.integers(len(group)))].matrix for _ in layer] for layer in arch.layers])


def decompose_clifford(circuit: Circuit) -> Circuit:
    """ Expand every layer into as many sub-layers as its longest generator word.
    Sub-layers keep the pairing of the layer and shorter words are padded with identity gates.
    """
    layers, gates = list(), list()
    for layer, layer_gates in zip(circuit.arch.layers, circuit.gates):
        words = [clifford_word(gate) for gate in layer_gates]
        length = max(1, max(len(word) for word in words))
        for k in range(length):
            layers.append(layer)
            gates.append([word[k] if k < len(word) else "II" for word in words])
    return Circuit(Architecture(circuit.n, layers, circular=circuit.arch.circular), gates)


class NiceWitness(NamedTuple):
    nice: bool
    # Per qubit, the 0-based layers applying H (resp. S) on that qubit
    h_layers: Tuple[Tuple[int, ...], ...]
    s_layers: Tuple[Tuple[int, ...], ...]


def is_nice(circuit: Circuit) -> NiceWitness:
    """ Every qubit receives some H and some S gate, on either side of its pairs """
    h_layers = [list() for _ in range(circuit.n)]
    s_layers = [list() for _ in range(circuit.n)]
    for c, (layer, layer_gates) in enumerate(zip(circuit.arch.layers, circuit.gates)):
        for (p, q), gate in zip(layer, layer_gates):
            if not isinstance(gate, str):
                continue
            if gate == "HI":
                h_layers[p - 1].append(c)
            elif gate == "IH":
                h_layers[q - 1].append(c)
            elif gate == "SI":
                s_layers[p - 1].append(c)
            elif gate == "IS":
                s_layers[q - 1].append(c)
    nice = all(h_layers) and all(s_layers)
    return NiceWitness(nice=bool(nice), h_layers=tuple(tuple(v) for v in h_layers),
                       s_layers=tuple(tuple(v) for v in s_layers))


def niceness_rate(n: int, depth: int, seeds: int, first_seed: int = 0) -> float:
    """ Fraction of decomposed random Clifford circuits that are nice """
    nice = sum(is_nice(decompose_clifford(random_clifford_circuit(n, depth, seed))).nice
               for seed in range(first_seed, first_seed + seeds))
    return nice / seeds
