"""
Circuit architectures: bitonic blocks, their linear and circular products,
shift permutations, permutation routing, uniformization and the hypercube embedding.
All qubit labels exposed by this module are 1-based.
"""
import logging
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .error_codes import ErrorCodes, SpacetimeError
from .logger_formatter import DEFAULT_LOGGER_NAME
from .statevector import GATE_MATRICES, Gate, gate_matrix, inverse_gate, is_identity_gate

Pair = Tuple[int, int]
Layer = Tuple[Pair, ...]

_LOGGER = logging.getLogger(f"{DEFAULT_LOGGER_NAME}.{__name__}")


def log2_width(n: int) -> int:
    """ Rank of a power-of-two width
    :param n: number of wires
    :return: l such that n = 2^l
    """
    if n < 2 or n & (n - 1) != 0:
        raise SpacetimeError(ErrorCodes.INVALID_WIDTH, f"width {n} is not a power of two")
    return n.bit_length() - 1


def bitonic_layer(ell: int, c: int) -> Layer:
    """ Layer c (1-based) of the bitonic block of rank ell, it pairs 0-based q with q XOR 2^(ell-c) """
    bit = 1 << (ell - c)
    return tuple((q + 1, (q | bit) + 1) for q in range(1 << ell) if not q & bit)


class Permutation:
    """ Bijection of {1..n}, mapping[i - 1] is the image of i """

    def __init__(self, mapping: Sequence[int]):
        self.__mapping = tuple(int(v) for v in mapping)
        if sorted(self.__mapping) != list(range(1, len(self.__mapping) + 1)):
            raise SpacetimeError(ErrorCodes.INVALID_PERMUTATION, f"{self.__mapping} is not a bijection")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(1, n + 1))

    @property
    def n(self) -> int:
        return len(self.__mapping)

    @property
    def mapping(self) -> Tuple[int, ...]:
        return self.__mapping

    def __call__(self, i: int) -> int:
        return self.__mapping[i - 1]

    def inverse(self) -> "Permutation":
        inverse = [0] * self.n
        for i, image in enumerate(self.__mapping):
            inverse[image - 1] = i + 1
        return Permutation(inverse)

    def compose(self, other: "Permutation") -> "Permutation":
        """ (self o other)(i) = self(other(i)) """
        return Permutation([self(other(i)) for i in range(1, self.n + 1)])

    def power(self, exponent: int) -> "Permutation":
        result = Permutation.identity(self.n)
        base = self if exponent >= 0 else self.inverse()
        for _ in range(abs(exponent)):
            result = base.compose(result)
        return result

    @property
    def is_identity(self) -> bool:
        return self.__mapping == tuple(range(1, self.n + 1))

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self.__mapping == other.mapping

    def __hash__(self) -> int:
        return hash(self.__mapping)

    def __repr__(self) -> str:
        return f"Permutation({list(self.__mapping)})"


class Architecture:
    """ Layered template of two-qubit gate slots.
    Each layer is a perfect matching of the wires, pairs are stored as (p, q) with p < q
    and sorted inside the layer. When the layers follow the bitonic pattern the block rank
    and the number of repetitions are detected automatically.
    """

    def __init__(self, n: int, layers: Iterable[Iterable[Sequence[int]]], circular: bool = False):
        self.__n = n
        self.__rank = log2_width(n)
        normalized = list()
        for layer in layers:
            pairs = tuple(sorted((min(p, q), max(p, q)) for p, q in layer))
            covered = sorted(qubit for pair in pairs for qubit in pair)
            if covered != list(range(1, n + 1)):
                raise SpacetimeError(ErrorCodes.INVALID_ARCHITECTURE,
                                     f"layer {len(normalized) + 1} is not a perfect matching of {n} wires")
            normalized.append(pairs)
        if not normalized:
            raise SpacetimeError(ErrorCodes.INVALID_ARCHITECTURE, "an architecture needs at least one layer")
        self.__layers = tuple(normalized)
        self.__circular = circular
        # partner[c][q - 1] is the 0-based partner of q in layer c
        self.__partner = np.zeros((len(self.__layers), n), dtype=np.int64)
        self.__slot = np.zeros((len(self.__layers), n), dtype=np.int64)
        for c, layer in enumerate(self.__layers):
            for r, (p, q) in enumerate(layer):
                self.__partner[c, p - 1], self.__partner[c, q - 1] = q - 1, p - 1
                self.__slot[c, p - 1] = self.__slot[c, q - 1] = r
        self.__block_rank = None
        self.__repetitions = None
        if len(self.__layers) % self.__rank == 0 and all(
                layer == bitonic_layer(self.__rank, c % self.__rank + 1) for c, layer in enumerate(self.__layers)):
            self.__block_rank = self.__rank
            self.__repetitions = len(self.__layers) // self.__rank

    @property
    def n(self) -> int:
        return self.__n

    @property
    def rank(self) -> int:
        return self.__rank

    @property
    def depth(self) -> int:
        return len(self.__layers)

    @property
    def layers(self) -> Tuple[Layer, ...]:
        return self.__layers

    @property
    def circular(self) -> bool:
        return self.__circular

    @property
    def block_rank(self) -> Optional[int]:
        return self.__block_rank

    @property
    def repetitions(self) -> Optional[int]:
        return self.__repetitions

    @property
    def family(self) -> str:
        if self.__block_rank is None:
            return "generic"
        if self.__circular:
            return "circular"
        return "bitonic" if self.__repetitions == 1 else "product"

    @property
    def partner_table(self) -> np.ndarray:
        """ 0-based partner of each 0-based wire, one row per layer """
        return self.__partner

    def partner(self, layer_index: int, qubit: int) -> int:
        """ Partner (1-based) of qubit in the 0-based layer, taken mod depth """
        return int(self.__partner[layer_index % self.depth, qubit - 1]) + 1

    def slot(self, layer_index: int, qubit: int) -> int:
        """ Index of the pair holding qubit inside the 0-based layer """
        return int(self.__slot[layer_index % self.depth, qubit - 1])

    def interaction_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(1, self.__n + 1))
        graph.add_edges_from(pair for layer in self.__layers for pair in layer)
        return graph

    def shared_layers(self, p: int, q: int) -> List[int]:
        """ 0-based layers in which p and q are paired """
        return [c for c in range(self.depth) if self.__partner[c, p - 1] == q - 1]

    def dag(self) -> nx.MultiDiGraph:
        """ Directed acyclic graph with one source and one sink per wire and a vertex per gate slot """
        graph = nx.MultiDiGraph()
        last = {q: ("source", q) for q in range(1, self.__n + 1)}
        graph.add_nodes_from(last.values())
        for c, layer in enumerate(self.__layers):
            for r, (p, q) in enumerate(layer):
                node = ("gate", c, r)
                graph.add_edge(last[p], node)
                graph.add_edge(last[q], node)
                last[p] = last[q] = node
        for q in range(1, self.__n + 1):
            graph.add_edge(last[q], ("sink", q))
        return graph

    def check_dag(self) -> bool:
        """ Non-terminal vertices have in-degree equal to out-degree, both in {1, 2} """
        graph = self.dag()
        if not nx.is_directed_acyclic_graph(graph):
            return False
        for node in graph.nodes:
            if node[0] == "gate" and not (graph.in_degree(node) == graph.out_degree(node) == 2):
                return False
            if node[0] == "source" and (graph.in_degree(node), graph.out_degree(node)) != (0, 1):
                return False
            if node[0] == "sink" and (graph.in_degree(node), graph.out_degree(node)) != (1, 0):
                return False
        return True

    def __eq__(self, other) -> bool:
        return (isinstance(other, Architecture) and self.__n == other.n and self.__layers == other.layers
                and self.__circular == other.circular)

    def __hash__(self) -> int:
        return hash((self.__n, self.__layers, self.__circular))

    def __repr__(self) -> str:
        return f"Architecture(n={self.__n}, depth={self.depth}, family={self.family})"


class Circuit:
    """ Architecture with one gate per slot, gates[c][r] acts on the pair arch.layers[c][r] """

    def __init__(self, arch: Architecture, gates: Sequence[Sequence[Gate]]):
        if len(gates) != arch.depth:
            raise SpacetimeError(ErrorCodes.LENGTH_MISMATCH, f"{len(gates)} gate layers for depth {arch.depth}")
        checked = list()
        for c, layer_gates in enumerate(gates):
            if len(layer_gates) != len(arch.layers[c]):
                raise SpacetimeError(ErrorCodes.LENGTH_MISMATCH,
                                     f"layer {c + 1} has {len(layer_gates)} gates for {len(arch.layers[c])} slots")
            row = list()
            for gate in layer_gates:
                matrix = gate_matrix(gate)
                row.append(gate if isinstance(gate, str) else matrix.copy())
            checked.append(tuple(row))
        self.__arch = arch
        self.__gates = tuple(checked)

    @classmethod
    def identity(cls, arch: Architecture) -> "Circuit":
        return cls(arch, [["II"] * len(layer) for layer in arch.layers])

    @property
    def arch(self) -> Architecture:
        return self.__arch

    @property
    def gates(self) -> Tuple[Tuple[Gate, ...], ...]:
        return self.__gates

    @property
    def n(self) -> int:
        return self.__arch.n

    @property
    def depth(self) -> int:
        return self.__arch.depth

    def gate_of(self, layer_index: int, qubit: int) -> Gate:
        """ Gate acting on qubit in the 0-based layer, taken mod depth """
        layer_index %= self.depth
        return self.__gates[layer_index][self.__arch.slot(layer_index, qubit)]

    def __repr__(self) -> str:
        return f"Circuit({self.__arch})"


def build_bitonic_block(ell: int) -> Architecture:
    """ Bitonic block B_ell on 2^ell wires """
    if ell < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} < 1")
    return Architecture(1 << ell, [bitonic_layer(ell, c) for c in range(1, ell + 1)])


def build_product(ell: int, m: int) -> Architecture:
    """ Concatenation of m bitonic blocks of rank ell """
    if ell < 1 or m < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} and repetitions {m} must be >= 1")
    return Architecture(1 << ell, [bitonic_layer(ell, c) for _ in range(m) for c in range(1, ell + 1)])


def build_circular(ell: int, m: int) -> Architecture:
    """ Product of m bitonic blocks wrapped around the time cylinder """
    if ell < 1 or m < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} and repetitions {m} must be >= 1")
    return Architecture(1 << ell, [bitonic_layer(ell, c) for _ in range(m) for c in range(1, ell + 1)],
                        circular=True)


def rotl(value: int, ell: int, shift: int = 1) -> int:
    """ Left rotation of an ell-bit integer """
    shift %= ell
    mask = (1 << ell) - 1
    return ((value << shift) | (value >> (ell - shift))) & mask


def shift_permutation(ell: int, j: int = 1) -> Permutation:
    """ pi_ell^j with pi_ell(i) = 2i - 1 for i <= 2^(ell-1) and 2i - 2^ell otherwise.
    pi_ell is a one-bit left rotation of i - 1, so j is taken mod ell.
    """
    if ell < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} < 1")
    return Permutation([rotl(i, ell, j) + 1 for i in range(1 << ell)])


def shift_layers(arch: Architecture, j: int) -> Architecture:
    """ Left cyclic shift of the layer list by j """
    j %= arch.depth
    return Architecture(arch.n, arch.layers[j:] + arch.layers[:j], circular=arch.circular)


def relabel(arch: Architecture, permutation: Permutation) -> Architecture:
    return Architecture(arch.n, [[(permutation(p), permutation(q)) for p, q in layer] for layer in arch.layers],
                        circular=arch.circular)


def wire_trace(circuit: Circuit) -> Tuple[int, ...]:
    """ Follow the wire labels 1..n through a circuit made of SWAP and identity gates
    :return: trace[k] is the label that ends at position k + 1
    """
    labels = list(range(1, circuit.n + 1))
    for layer, layer_gates in zip(circuit.arch.layers, circuit.gates):
        for (p, q), gate in zip(layer, layer_gates):
            if is_identity_gate(gate):
                continue
            if not np.array_equal(gate_matrix(gate), GATE_MATRICES["SWAP"]):
                raise SpacetimeError(ErrorCodes.INVALID_GATE, "wire trace only follows SWAP and identity gates")
            labels[p - 1], labels[q - 1] = labels[q - 1], labels[p - 1]
    return tuple(labels)


def wire_action(circuit: Circuit) -> Permutation:
    """ sigma such that the content starting at position j ends at position sigma(j) """
    mapping = [0] * circuit.n
    for position, label in enumerate(wire_trace(circuit)):
        mapping[label - 1] = position + 1
    return Permutation(mapping)


def route_permutation(sigma: Permutation) -> Circuit:
    """ SWAP network over B_ell^(x ell) whose net wire action is sigma.
    Positions are sorted by their destination with a bitonic sorting network,
    each comparator that exchanges its keys becomes a SWAP gate.
    """
    n = sigma.n
    ell = log2_width(n)
    arch = build_product(ell, ell)
    keys = [sigma(position + 1) for position in range(n)]
    gates = list()
    for stage in range(1, ell + 1):
        block_size = 1 << stage
        for c in range(1, ell + 1):
            pairs = arch.layers[(stage - 1) * ell + c - 1]
            # The stage only uses the last `stage` layers of its block
            if c <= ell - stage:
                gates.append(["II"] * len(pairs))
                continue
            layer_gates = list()
            for p, q in pairs:
                i, j = p - 1, q - 1
                ascending = (i & block_size) == 0
                swap = keys[i] > keys[j] if ascending else keys[i] < keys[j]
                if swap:
                    keys[i], keys[j] = keys[j], keys[i]
                layer_gates.append("SWAP" if swap else "II")
            gates.append(layer_gates)
    return Circuit(arch, gates)


def layer_placement(layer: Layer, n: int) -> Permutation:
    """ Sends the r-th pair (a, b) of a layer to the positions (2r - 1, 2r) """
    mapping = [0] * n
    for r, (a, b) in enumerate(layer):
        mapping[a - 1] = 2 * r + 1
        mapping[b - 1] = 2 * r + 2
    return Permutation(mapping)


def uniformize(circuit: Circuit, merge: bool = True, restore: bool = True) -> Circuit:
    """ Rewrite a circuit with arbitrary pairings over consecutive bitonic blocks.
    Each layer L_t is preceded by the routing that brings its pairs onto the last layer of a block.
    :param circuit: input circuit on a power-of-two width
    :param merge: merge the gate layer into the last routing layer, depth D1 * ell^2
    :param restore: append a final routing back to the original positions
    :return: the uniformized circuit
    """
    n = circuit.n
    ell = log2_width(n)
    placement = Permutation.identity(n)
    layers, gates = list(), list()
    for t in range(circuit.depth):
        target = layer_placement(circuit.arch.layers[t], n)
        routing = route_permutation(target.compose(placement.inverse()))
        route_layers = list(routing.arch.layers)
        route_gates = [list(layer_gates) for layer_gates in routing.gates]
        if merge:
            for r, gate in enumerate(circuit.gates[t]):
                if route_gates[-1][r] != "II":
                    gate = gate_matrix(gate) @ GATE_MATRICES["SWAP"]
                route_gates[-1][r] = gate
        else:
            route_layers.append(route_layers[-1])
            route_gates.append(list(circuit.gates[t]))
        layers.extend(route_layers)
        gates.extend(route_gates)
        placement = target
    if restore:
        routing = route_permutation(placement.inverse())
        layers.extend(routing.arch.layers)
        gates.extend(routing.gates)
    _LOGGER.debug(f"Uniformized depth {circuit.depth} into {len(layers)} layers (ell={ell}, merge={merge})")
    return Circuit(Architecture(n, layers), gates)


def circular_closure(circuit: Circuit) -> Circuit:
    """ Close a forward circuit into an identity-equivalent circular circuit.
    The forward layers must follow the bitonic pattern. The inverse of each forward layer is placed,
    in reverse order, at the next layer with the same pattern, and the gaps hold identity gates.
    """
    n = circuit.n
    ell = log2_width(n)
    for t, layer in enumerate(circuit.arch.layers):
        if layer != bitonic_layer(ell, t % ell + 1):
            raise SpacetimeError(ErrorCodes.UNSUPPORTED_ARCHITECTURE,
                                 f"layer {t + 1} does not follow the bitonic pattern")
    identity_layer = ["II"] * (n // 2)
    gates = [list(layer_gates) for layer_gates in circuit.gates]
    for t in reversed(range(circuit.depth)):
        while len(gates) % ell != t % ell:
            gates.append(list(identity_layer))
        gates.append([inverse_gate(gate) for gate in circuit.gates[t]])
    while len(gates) % ell != 0 or len(gates) % 2 != 0:
        gates.append(list(identity_layer))
    return Circuit(build_circular(ell, len(gates) // ell), gates)


def circuit_to_json(circuit: Circuit) -> Dict:
    """ {n, depth, circular, layers: [[[p, q, gate], ...], ...]}, matrices as rows of [re, im] pairs """
    layers = list()
    for layer, layer_gates in zip(circuit.arch.layers, circuit.gates):
        entries = list()
        for (p, q), gate in zip(layer, layer_gates):
            if not isinstance(gate, str):
                gate = [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(gate)]
            entries.append([p, q, gate])
        layers.append(entries)
    return {"n": circuit.n, "depth": circuit.depth, "circular": circuit.arch.circular, "layers": layers}


def circuit_from_json(data: Dict) -> Circuit:
    layers, gates = list(), list()
    for entries in data["layers"]:
        layer, layer_gates = list(), dict()
        for p, q, gate in entries:
            if not isinstance(gate, str):
                gate = np.array([[complex(re, im) for re, im in row] for row in gate])
            layer.append((min(p, q), max(p, q)))
            layer_gates[(min(p, q), max(p, q))] = gate
        layers.append(layer)
        gates.append([layer_gates[pair] for pair in sorted(layer)])
    arch = Architecture(data["n"], layers, circular=data.get("circular", False))
    if arch.depth != data.get("depth", arch.depth):
        raise SpacetimeError(ErrorCodes.LENGTH_MISMATCH, f"depth {data['depth']} for {arch.depth} layers")
    return Circuit(arch, gates)


class EmbeddingCoords(NamedTuple):
    """ 0/1 coordinates of every register, rows follow the register layout S_1..S_n, F_1..F_n, C_{1,1}..C_{n,X} """
    labels: Tuple[str, ...]
    points: np.ndarray

    def squared_distances(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return (diff * diff).sum(axis=-1)

    def min_squared_distance(self) -> int:
        distances = self.squared_distances()
        np.fill_diagonal(distances, np.iinfo(distances.dtype).max)
        return int(distances.min())

    def max_squared_diameter(self, qubit_sets: Iterable[Sequence[int]]) -> int:
        """ Largest squared distance between two registers of the same set (0-based register indices) """
        distances = self.squared_distances()
        largest = 0
        for qubits in qubit_sets:
            index = np.asarray(qubits, dtype=np.int64)
            largest = max(largest, int(distances[np.ix_(index, index)].max()))
        return largest


def hypercube_embedding(arch: Architecture, clock_length: int) -> EmbeddingCoords:
    """ emb(S_i) = (h(i), 0, 0^X), emb(F_i) = (h(i), 1, 0^X), emb(C_ij) = (h(i), 0, e_j)
    :param arch: architecture whose interacting wires differ in one bit of i - 1
    :param clock_length: X, the number of qubits of each clock register
    :return: the embedding with integer coordinates
    """
    ell = arch.rank
    for layer in arch.layers:
        for p, q in layer:
            if bin((p - 1) ^ (q - 1)).count("1") != 1:
                raise SpacetimeError(ErrorCodes.UNSUPPORTED_ARCHITECTURE,
                                     f"pair ({p}, {q}) is not a hypercube edge")
    n = arch.n
    width = ell + 1 + clock_length
    corners = np.array([[(i >> (ell - 1 - b)) & 1 for b in range(ell)] for i in range(n)], dtype=np.int64)
    labels, rows = list(), list()
    for i in range(n):
        row = np.zeros(width, dtype=np.int64)
        row[:ell] = corners[i]
        labels.append(f"S_{i + 1}")
        rows.append(row)
    for i in range(n):
        row = np.zeros(width, dtype=np.int64)
        row[:ell] = corners[i]
        row[ell] = 1
        labels.append(f"F_{i + 1}")
        rows.append(row)
    for i in range(n):
        for j in range(clock_length):
            row = np.zeros(width, dtype=np.int64)
            row[:ell] = corners[i]
            row[ell + 1 + j] = 1
            labels.append(f"C_{i + 1},{j + 1}")
            rows.append(row)
    return EmbeddingCoords(labels=tuple(labels), points=np.array(rows, dtype=np.int64).reshape(len(rows), width))
