"""
Spacetime circuit Hamiltonian of a circular layered circuit.
Every wire i carries a data qubit S_i, a flag qubit F_i and a domain-wall clock register
C_i of X = (D - 2) / 2 qubits. The global qubit order is S_1..S_n, F_1..F_n, C_1..C_n and
qubit 0 is the most significant bit of the basis index.
"""
import itertools
import logging
import math
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh
from scipy.sparse.linalg import norm as sparse_norm

from .architecture import Circuit
from .configurations import (DEFAULT_STATE_CAP, canonical_window, count_bitonic, enumerate_valid, is_valid,
                             v_count)
from .error_codes import ErrorCodes, SpacetimeError
from .logger_formatter import DEFAULT_LOGGER_NAME
from .markov import config_graph
from .statevector import apply_gate, gate_matrix, is_identity_gate, reduced_density_matrix

# Eigenvalues below this are counted in the kernel
KERNEL_TOLERANCE = 1e-8
# Term families in assembly order
FAMILIES = ("clock", "init", "prop", "causal", "window")
# Largest number of qubits a local term is expected to touch
MAX_SUPPORT = 10

_PROJECTOR_01 = sp.csr_matrix(np.diag([0.0, 1.0, 0.0, 0.0]).astype(complex))


def encode_time(t: int, clock_length: int) -> Tuple[int, Tuple[int, ...]]:
    """ Flag bit and domain-wall clock string of a time register
    :param t: time in [0, 2X + 1]
    :param clock_length: X
    :return: (flag, clock bits)
    """
    x = clock_length
    if not 0 <= t <= 2 * x + 1:
        raise SpacetimeError(ErrorCodes.INVALID_TIME, f"time {t} outside [0, {2 * x + 1}]")
    if t <= x:
        return 0, (1,) * t + (0,) * (x - t)
    ones = 2 * x + 1 - t
    return 1, (1,) * ones + (0,) * (x - ones)


def decode_time(flag: int, clock: Sequence[int]) -> Optional[int]:
    """ Inverse of encode_time, None when the clock is not a domain wall """
    ones = sum(clock)
    if tuple(clock) != (1,) * ones + (0,) * (len(clock) - ones):
        return None
    return ones if flag == 0 else 2 * len(clock) + 1 - ones


class RegisterLayout:
    def __init__(self, n: int, depth: int):
        if depth < 2 or depth % 2:
            raise SpacetimeError(ErrorCodes.ODD_DEPTH, f"depth {depth} must be even and >= 2")
        self.__n = n
        self.__depth = depth
        self.__clock_length = (depth - 2) // 2

    @property
    def n(self) -> int:
        return self.__n

    @property
    def depth(self) -> int:
        return self.__depth

    @property
    def clock_length(self) -> int:
        return self.__clock_length

    @property
    def num_qubits(self) -> int:
        return self.__n * (self.__clock_length + 2)

    @property
    def register_bits(self) -> int:
        """ Number of flag and clock qubits """
        return self.__n * (self.__clock_length + 1)

    def data(self, i: int) -> int:
        return i - 1

    def flag(self, i: int) -> int:
        return self.__n + i - 1

    def clock(self, i: int, j: int) -> int:
        return 2 * self.__n + (i - 1) * self.__clock_length + (j - 1)

    def time_register(self, i: int) -> List[int]:
        return [self.flag(i)] + [self.clock(i, j) for j in range(1, self.__clock_length + 1)]

    def time_bits(self, i: int, t: int) -> Dict[int, int]:
        """ Value of every qubit of register i when it encodes time t """
        flag, clock = encode_time(t % self.__depth, self.__clock_length)
        bits = {self.flag(i): flag}
        bits.update({self.clock(i, j): bit for j, bit in enumerate(clock, start=1)})
        return bits

    def time_support(self, i: int, t: int) -> List[int]:
        """ Smallest set of register qubits identifying time t on domain-wall clocks """
        x = self.__clock_length
        t %= self.__depth
        if t < x:
            positions = ([t] if t >= 1 else []) + [t + 1]
        elif t == x or t == x + 1:
            positions = [x] if x >= 1 else []
        else:
            positions = ([2 * x + 1 - t] if 2 * x + 1 - t >= 1 else []) + [2 * x + 2 - t]
        return [self.flag(i)] + [self.clock(i, j) for j in positions]

    def interval_pieces(self, i: int, times: Iterable[int]) -> List[Dict[int, int]]:
        """ Bit conditions whose disjunction selects the given set of times on domain-wall clocks.
        Each run of consecutive times inside the forward or backward half gives one piece.
        """
        x = self.__clock_length
        chosen = sorted(set(t % self.__depth for t in times))
        runs = list()
        for t in chosen:
            if runs and runs[-1][1] == t - 1 and (t <= x or runs[-1][0] >= x + 1):
                runs[-1][1] = t
            else:
                runs.append([t, t])
        pieces = list()
        for a, b in runs:
            if b <= x:
                piece = {self.flag(i): 0}
                if a >= 1:
                    piece[self.clock(i, a)] = 1
                if b + 1 <= x:
                    piece[self.clock(i, b + 1)] = 0
            else:
                piece = {self.flag(i): 1}
                if a >= x + 2:
                    piece[self.clock(i, 2 * x + 2 - a)] = 0
                if b <= 2 * x:
                    piece[self.clock(i, 2 * x + 1 - b)] = 1
            pieces.append(piece)
        return pieces

    def register_index(self, tau: Sequence[int]) -> int:
        """ Integer value of the flag and clock qubits encoding a configuration """
        flags, clocks = list(), list()
        for t in tau:
            flag, clock = encode_time(t % self.__depth, self.__clock_length)
            flags.append(flag)
            clocks.extend(clock)
        index = 0
        for bit in flags + clocks:
            index = (index << 1) | bit
        return index

    def register_times(self, index: int) -> Optional[Tuple[int, ...]]:
        """ Decoded times of a register index, None when some clock is not a domain wall """
        bits = [(index >> (self.register_bits - 1 - k)) & 1 for k in range(self.register_bits)]
        flags, clocks = bits[:self.__n], bits[self.__n:]
        times = list()
        for i in range(self.__n):
            t = decode_time(flags[i], clocks[i * self.__clock_length:(i + 1) * self.__clock_length])
            if t is None:
                return None
            times.append(t)
        return tuple(times)

    def __repr__(self) -> str:
        return f"RegisterLayout(n={self.__n}, D={self.__depth}, X={self.__clock_length})"


class Term(NamedTuple):
    family: str
    # 0-based qubits, the first one is the most significant bit of the local matrix
    qubits: Tuple[int, ...]
    matrix: sp.csr_matrix
    label: str

    def to_dict(self) -> Dict:
        coo = self.matrix.tocoo()
        return {"family": self.family, "qubits": list(self.qubits), "label": self.label,
                "entries": [[int(r), int(c), float(v.real), float(v.imag)]
                            for r, c, v in zip(coo.row, coo.col, coo.data)]}


def _local_bits(index: int, size: int) -> Tuple[int, ...]:
    return tuple((index >> (size - 1 - k)) & 1 for k in range(size))


def _diagonal_term(family: str, qubits: Sequence[int], predicate: Callable[[Dict[int, int]], bool],
                   label: str) -> Term:
    qubits = tuple(qubits)
    size = len(qubits)
    diagonal = [1.0 if predicate(dict(zip(qubits, _local_bits(index, size)))) else 0.0
                for index in range(1 << size)]
    return Term(family, qubits, sp.diags(diagonal).astype(complex).tocsr(), label)


def _matches(bits: Dict[int, int], condition: Dict[int, int]) -> bool:
    return all(bits[qubit] == value for qubit, value in condition.items())


def _basis_vector(qubits: Sequence[int], values: Dict[int, int]) -> np.ndarray:
    index = 0
    for qubit in qubits:
        index = (index << 1) | values[qubit]
    vector = np.zeros(1 << len(qubits), dtype=complex)
    vector[index] = 1.0
    return vector


def embed_operator(matrix: sp.spmatrix, qubits: Sequence[int], num_qubits: int) -> sp.csr_matrix:
    """ Local operator tensored with identity, local index bits are deposited at the qubit positions """
    qubits = list(qubits)
    rest = [q for q in range(num_qubits) if q not in qubits]

    def deposit(values: np.ndarray, positions: List[int]) -> np.ndarray:
        result = np.zeros(len(values), dtype=np.int64)
        for k, qubit in enumerate(positions):
            bit = (values >> (len(positions) - 1 - k)) & 1
            result |= bit << (num_qubits - 1 - qubit)
        return result

    environment = deposit(np.arange(1 << len(rest), dtype=np.int64), rest)
    local_index = deposit(np.arange(1 << len(qubits), dtype=np.int64), qubits)
    coo = sp.coo_matrix(matrix)
    rows = (local_index[coo.row][:, None] | environment[None, :]).ravel()
    cols = (local_index[coo.col][:, None] | environment[None, :]).ravel()
    data = np.repeat(coo.data, len(environment))
    dimension = 1 << num_qubits
    return sp.csr_matrix((data, (rows, cols)), shape=(dimension, dimension))


def term_expectation(term: Term, state: np.ndarray, num_qubits: int) -> float:
    """ Energy of a local term, evaluated on the reduced density matrix of its support """
    rho = reduced_density_matrix(state, term.qubits, num_qubits)
    return float(np.real(np.trace(term.matrix.toarray() @ rho)))


def clock_terms(layout: RegisterLayout) -> List[Term]:
    """ |01><01| on consecutive clock qubits forces domain walls """
    terms = list()
    for i in range(1, layout.n + 1):
        for j in range(1, layout.clock_length):
            terms.append(Term("clock", (layout.clock(i, j), layout.clock(i, j + 1)), _PROJECTOR_01,
                              f"clock[{i},{j}]"))
    return terms


def init_terms(layout: RegisterLayout, k: int, include_wrap: bool = True) -> List[Term]:
    """ Ancillas i > k must be |0> while their register reads time 0 or, with include_wrap, time D - 1 """
    terms = list()
    for i in range(k + 1, layout.n + 1):
        qubits = [layout.flag(i)] + ([layout.clock(i, 1)] if layout.clock_length else []) + [layout.data(i)]
        times = [0, layout.depth - 1] if include_wrap else [0]
        selected = [layout.time_bits(i, t) for t in times]

        def predicate(bits, selected=selected, data=layout.data(i)):
            return bits[data] == 1 and any(all(bits[q] == v for q, v in s.items() if q in bits) for s in selected)

        terms.append(_diagonal_term("init", qubits, predicate, f"init[{i}]"))
    return terms


def prop_terms(circuit: Circuit, layout: RegisterLayout) -> List[Term]:
    """ 1/2 [ I (|b><b| + |a><a|) - U |a><b| - U^dag |b><a| ] for the gate moving p and q from t to t + 1 """
    terms = list()
    depth = layout.depth
    for t in range(depth):
        for (p, q), gate in zip(circuit.arch.layers[t], circuit.gates[t]):
            register = sorted(set(layout.time_support(p, t) + layout.time_support(p, t + 1)))
            register += sorted(set(layout.time_support(q, t) + layout.time_support(q, t + 1)))
            before = {**layout.time_bits(p, t), **layout.time_bits(q, t)}
            after = {**layout.time_bits(p, t + 1), **layout.time_bits(q, t + 1)}
            b = _basis_vector(register, before)
            a = _basis_vector(register, after)
            unitary = gate_matrix(gate)
            matrix = 0.5 * (np.kron(np.eye(4), np.outer(b, b) + np.outer(a, a))
                            - np.kron(unitary, np.outer(a, b)) - np.kron(unitary.conj().T, np.outer(b, a)))
            qubits = (layout.data(p), layout.data(q)) + tuple(register)
            terms.append(Term("prop", qubits, sp.csr_matrix(matrix), f"prop[{t + 1},{p},{q}]"))
    return terms


def arcs(shared: Sequence[int], depth: int) -> List[List[int]]:
    """ Times between consecutive shared layers: after layer c and up to layer c' """
    arcs_list = list()
    for k, c in enumerate(shared):
        following = shared[(k + 1) % len(shared)]
        length = (following - c) % depth or depth
        arcs_list.append([(c + 1 + d) % depth for d in range(length)])
    return arcs_list


def causal_terms(circuit: Circuit, layout: RegisterLayout) -> List[Term]:
    """ Penalise p inside an arc between two layers shared with q while q is outside it """
    terms = list()
    arch = circuit.arch
    depth = layout.depth
    edges = sorted(arch.interaction_graph().edges)
    for u, v in edges:
        shared = arch.shared_layers(u, v)
        if len(shared) <= 1:
            continue
        for p, q in ((u, v), (v, u)):
            for arc in arcs(shared, depth):
                outside = [t for t in range(depth) if t not in arc]
                inside_pieces = layout.interval_pieces(p, arc)
                outside_pieces = layout.interval_pieces(q, outside)
                qubits = sorted({qubit for piece in inside_pieces + outside_pieces for qubit in piece})

                def predicate(bits, inside_pieces=inside_pieces, outside_pieces=outside_pieces):
                    return (any(_matches(bits, piece) for piece in inside_pieces)
                            and any(_matches(bits, piece) for piece in outside_pieces))

                terms.append(_diagonal_term("causal", qubits, predicate, f"causal[{p},{q},{arc[0]}..{arc[-1]}]"))
    return terms


def square_cycles(graph) -> List[Tuple[int, int, int, int]]:
    """ 4-cycles of the interaction graph, one rotation and orientation each """
    cycles = set()
    for cycle in itertools.permutations(sorted(graph.nodes), 4):
        if cycle[0] != min(cycle) or cycle[1] > cycle[3]:
            continue
        if all(graph.has_edge(cycle[k], cycle[(k + 1) % 4]) for k in range(4)):
            cycles.add(cycle)
    return sorted(cycles)


def cyclic_difference(d: int, depth: int) -> int:
    """ Representative of d mod depth in (-depth / 2, depth / 2] """
    d %= depth
    return d - depth if d > depth // 2 else d


def winding(times: Sequence[int], depth: int) -> int:
    """ Sum of the cyclic time differences around a closed walk, a multiple of depth """
    return sum(cyclic_difference(times[(k + 1) % len(times)] - times[k], depth) for k in range(len(times)))


def arc_lookup(circuit: Circuit, p: int, q: int) -> Optional[Dict[int, int]]:
    """ Arc index of every time for the layers shared by p and q, None when they share at most one layer """
    shared = circuit.arch.shared_layers(p, q)
    if len(shared) <= 1:
        return None
    return {t: index for index, arc in enumerate(arcs(shared, circuit.depth)) for t in arc}


def _square_bits(layout: RegisterLayout, cycle: Sequence[int], times: Sequence[int]) -> Dict[int, int]:
    bits = dict()
    for wire, t in zip(cycle, times):
        bits.update(layout.time_bits(wire, t))
    return bits


def window_terms(circuit: Circuit, layout: RegisterLayout) -> List[Term]:
    """ Penalise a non-zero winding of the time differences around every square of the interaction graph.
    Only tuples that every causal check of the square accepts need a winding check. Each one gets a diagonal
    projector on the fewest register qubits that still miss all accepted tuples of zero winding.
    """
    terms = list()
    depth = layout.depth
    for cycle in square_cycles(circuit.arch.interaction_graph()):
        lookups = [arc_lookup(circuit, cycle[k], cycle[(k + 1) % 4]) for k in range(4)]
        allowed, wound = list(), list()
        for times in itertools.product(range(depth), repeat=4):
            if all(lookup is None or lookup[times[k]] == lookup[times[(k + 1) % 4]]
                   for k, lookup in enumerate(lookups)):
                (wound if winding(times, depth) else allowed).append(times)
        allowed_bits = [_square_bits(layout, cycle, times) for times in allowed]
        conditions = list()
        for times in wound:
            bits = _square_bits(layout, cycle, times)
            if any(_matches(bits, condition) for condition in conditions):
                continue
            support = {qubit for wire, t in zip(cycle, times) for qubit in layout.time_support(wire, t)}
            condition = {qubit: bits[qubit] for qubit in support}
            for qubit in sorted(support, reverse=True):
                narrowed = {q: v for q, v in condition.items() if q != qubit}
                if not any(_matches(other, narrowed) for other in allowed_bits):
                    condition = narrowed
            conditions.append(condition)
            terms.append(_diagonal_term("window", sorted(condition),
                                        lambda local, condition=condition: _matches(local, condition),
                                        f"window{list(cycle)}{list(times)}"))
    return terms


class SpectrumResult(NamedTuple):
    ground_energy: float
    kernel_dim: int
    gap: float
    eigenvalues: np.ndarray

    def to_dict(self) -> Dict:
        return {"ground_energy": self.ground_energy, "kernel_dim": self.kernel_dim, "gap": self.gap}


def hamiltonian_spectrum(operator: sp.spmatrix, dense_limit: int = 4096, num_eigenvalues: int = 16) -> SpectrumResult:
    """ Dense eigh up to dense_limit, eigsh on the smallest eigenvalues otherwise """
    dimension = operator.shape[0]
    if dimension <= dense_limit:
        dense = operator.toarray()
        eigenvalues = np.linalg.eigvalsh((dense + dense.conj().T) / 2)
    else:
        count = min(num_eigenvalues, dimension - 2)
        eigenvalues = np.sort(eigsh(operator, k=count, which="SA", return_eigenvectors=False))
    kernel = int(np.sum(eigenvalues < KERNEL_TOLERANCE))
    excited = eigenvalues[eigenvalues >= KERNEL_TOLERANCE]
    gap = float(excited[0]) if len(excited) else math.inf
    return SpectrumResult(ground_energy=float(eigenvalues[0]), kernel_dim=kernel, gap=gap, eigenvalues=eigenvalues)


class CodeHamiltonian:
    """ H_clock + H_init + H_prop + H_causal (+ H_window) of a circular circuit with k logical inputs """

    def __init__(self, circuit: Circuit, k: int, include_wrap: bool = True, include_window: bool = True,
                 dense_limit: int = 4096, logger_name: str = DEFAULT_LOGGER_NAME):
        self.__logger = logging.getLogger(f"{logger_name}.{__name__}")
        if not circuit.arch.circular:
            raise SpacetimeError(ErrorCodes.NON_CIRCULAR_ARCHITECTURE, "the code Hamiltonian needs a circular circuit")
        if not 0 <= k <= circuit.n:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"k={k} outside [0, {circuit.n}]")
        self.__circuit = circuit
        self.__k = k
        self.__layout = RegisterLayout(circuit.n, circuit.depth)
        self.__dense_limit = dense_limit
        self.__terms = (clock_terms(self.__layout) + init_terms(self.__layout, k, include_wrap)
                        + prop_terms(circuit, self.__layout) + causal_terms(circuit, self.__layout)
                        + (window_terms(circuit, self.__layout) if include_window else []))
        self.__operators = dict()
        support = max(len(term.qubits) for term in self.__terms)
        if support > MAX_SUPPORT:
            self.__logger.warning(f"A term touches {support} qubits, more than {MAX_SUPPORT}")
        self.__logger.debug(f"Code Hamiltonian on {self.__layout.num_qubits} qubits with {len(self.__terms)} terms")

    @property
    def circuit(self) -> Circuit:
        return self.__circuit

    @property
    def layout(self) -> RegisterLayout:
        return self.__layout

    @property
    def k(self) -> int:
        return self.__k

    @property
    def terms(self) -> List[Term]:
        return self.__terms

    @property
    def num_qubits(self) -> int:
        return self.__layout.num_qubits

    def family_operator(self, family: str) -> sp.csr_matrix:
        if family not in FAMILIES:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown term family {family}")
        if family not in self.__operators:
            dimension = 1 << self.num_qubits
            operator = sp.csr_matrix((dimension, dimension), dtype=complex)
            for term in self.__terms:
                if term.family == family:
                    operator = operator + embed_operator(term.matrix, term.qubits, self.num_qubits)
            self.__operators[family] = operator.tocsr()
        return self.__operators[family]

    def operator(self) -> sp.csr_matrix:
        if "total" not in self.__operators:
            total = self.family_operator(FAMILIES[0])
            for family in FAMILIES[1:]:
                total = total + self.family_operator(family)
            self.__operators["total"] = total.tocsr()
        return self.__operators["total"]

    def spectrum(self) -> SpectrumResult:
        result = hamiltonian_spectrum(self.operator(), self.__dense_limit, num_eigenvalues=(1 << self.__k) + 8)
        self.__logger.info(f"Spectrum: ground {result.ground_energy:.3e}, kernel {result.kernel_dim}, "
                           f"gap {result.gap:.6f}")
        return result

    def locality_report(self) -> Dict:
        per_qubit = np.zeros(self.num_qubits, dtype=int)
        for term in self.__terms:
            per_qubit[list(term.qubits)] += 1
        families = {family: sum(term.family == family for term in self.__terms) for family in FAMILIES}
        return {"num_qubits": self.num_qubits, "terms": len(self.__terms), "families": families,
                "max_support": max(len(term.qubits) for term in self.__terms),
                "max_terms_per_qubit": int(per_qubit.max())}

    def clock_valid_indices(self) -> np.ndarray:
        """ Basis indices where every clock register is a domain wall """
        layout = self.__layout
        valid = [r for r in range(1 << layout.register_bits) if layout.register_times(r) is not None]
        valid = np.asarray(valid, dtype=np.int64)
        data = np.arange(1 << layout.n, dtype=np.int64)
        return ((data[:, None] << layout.register_bits) | valid[None, :]).ravel()

    def commutator_norm(self, first: str = "causal", second: str = "prop", clock_valid_only: bool = True) -> float:
        a, b = self.family_operator(first), self.family_operator(second)
        commutator = (a @ b - b @ a).tocsr()
        if clock_valid_only:
            indices = self.clock_valid_indices()
            commutator = commutator[indices][:, indices]
        commutator.eliminate_zeros()
        if commutator.nnz == 0:
            return 0.0
        if commutator.shape[0] <= self.__dense_limit:
            return float(np.linalg.norm(commutator.toarray(), 2))
        return float(sparse_norm(commutator))

    def to_json(self) -> Dict:
        return {"n": self.__circuit.n, "depth": self.__circuit.depth, "k": self.__k,
                "terms": [term.to_dict() for term in self.__terms]}


def build_h_clock(layout: RegisterLayout) -> sp.csr_matrix:
    return _sum_terms(clock_terms(layout), layout.num_qubits)


def build_h_init(layout: RegisterLayout, k: int, include_wrap: bool = True) -> sp.csr_matrix:
    return _sum_terms(init_terms(layout, k, include_wrap), layout.num_qubits)


def build_h_prop(circuit: Circuit, layout: RegisterLayout) -> sp.csr_matrix:
    return _sum_terms(prop_terms(circuit, layout), layout.num_qubits)


def build_h_causal(circuit: Circuit, layout: RegisterLayout) -> sp.csr_matrix:
    return _sum_terms(causal_terms(circuit, layout), layout.num_qubits)


def _sum_terms(terms: Sequence[Term], num_qubits: int) -> sp.csr_matrix:
    dimension = 1 << num_qubits
    operator = sp.csr_matrix((dimension, dimension), dtype=complex)
    for term in terms:
        operator = operator + embed_operator(term.matrix, term.qubits, num_qubits)
    return operator.tocsr()


def build_code_hamiltonian(circuit: Circuit, k: int, **kwargs) -> sp.csr_matrix:
    return CodeHamiltonian(circuit, k, **kwargs).operator()


def canonical_lift(circuit: Circuit, tau: Sequence[int]) -> Tuple[int, ...]:
    """ Lifted times of a valid configuration, starting at its canonical window on circular circuits """
    arch = circuit.arch
    if not is_valid(arch, tau):
        raise SpacetimeError(ErrorCodes.INVALID_CONFIGURATION, f"{tuple(tau)} is not valid")
    if not arch.circular:
        return tuple(tau)
    start, _ = canonical_window(tau, arch.depth)
    return tuple(start + (t - start) % arch.depth for t in tau)


def partial_unitary(circuit: Circuit, tau: Sequence[int], state: Optional[np.ndarray] = None,
                    order_seed: Optional[int] = None) -> np.ndarray:
    """ U(tau <- 0): the gates of the past causal cone of a configuration.
    :param circuit: layered circuit
    :param tau: valid configuration
    :param state: input vector, the full 2^n x 2^n matrix is returned when omitted
    :param order_seed: when given, gates are applied along a random linear extension of the cone
    :return: output vector or unitary matrix
    """
    n = circuit.n
    lift = canonical_lift(circuit, tau)
    depth = circuit.depth
    slots = list()
    for layer_index in range(max(lift)):
        c = layer_index % depth
        for (p, q), gate in zip(circuit.arch.layers[c], circuit.gates[c]):
            if layer_index < lift[p - 1]:
                slots.append((layer_index, p, q, gate))
    if order_seed is not None:
        rng = np.random.default_rng(order_seed)
        pending = {qubit: [k for k, s in enumerate(slots) if qubit in s[1:3]] for qubit in range(1, n + 1)}
        ordered = list()
        while len(ordered) < len(slots):
            heads = sorted({queue[0] for queue in pending.values() if queue})
            ready = [k for k in heads if pending[slots[k][1]][0] == k and pending[slots[k][2]][0] == k]
            chosen = ready[int(rng.integers(len(ready)))]
            pending[slots[chosen][1]].pop(0)
            pending[slots[chosen][2]].pop(0)
            ordered.append(slots[chosen])
        slots = ordered
    vector = np.eye(1 << n, dtype=complex) if state is None else np.asarray(state, dtype=complex)
    for _, p, q, gate in slots:
        if is_identity_gate(gate):
            continue
        matrix = gate_matrix(gate)
        if vector.ndim == 2:
            vector = np.stack([apply_gate(column, matrix, p, q, n) for column in vector.T], axis=1)
        else:
            vector = apply_gate(vector, matrix, p, q, n)
    return vector


def history_state(circuit: Circuit, input_state: np.ndarray, cap: int = DEFAULT_STATE_CAP) -> np.ndarray:
    """ Uniform superposition of |tau> U(tau <- 0)|input> over all valid configurations """
    layout = RegisterLayout(circuit.n, circuit.depth)
    configs = enumerate_valid(circuit.arch, cap)
    amplitudes = np.zeros((1 << layout.n, 1 << layout.register_bits), dtype=complex)
    for tau in configs:
        amplitudes[:, layout.register_index(tau)] = partial_unitary(circuit, tau, input_state)
    return amplitudes.reshape(-1) / math.sqrt(len(configs))


def clock_marginal(layout: RegisterLayout, state: np.ndarray, p: int) -> np.ndarray:
    """ Reduced density matrix of the clock register C_p """
    qubits = [layout.clock(p, j) for j in range(1, layout.clock_length + 1)]
    return reduced_density_matrix(state, qubits, layout.num_qubits)


class RotatedLaplacian(NamedTuple):
    # 1/2 of the combinatorial Laplacian of the configuration graph
    laplacian: np.ndarray
    configs: List[Tuple[int, ...]]
    # max |W^dag H_prop W - laplacian (x) 1|
    kron_residual: float
    # max |W^dag W - 1|
    isometry_residual: float


def rotation(circuit: Circuit, configs: Sequence[Sequence[int]]) -> sp.csr_matrix:
    """ W = sum_tau |tau> U(tau <- 0) as a map from (configuration, input) pairs into the full space """
    layout = RegisterLayout(circuit.n, circuit.depth)
    data_size = 1 << layout.n
    rows, cols, values = list(), list(), list()
    for k, tau in enumerate(configs):
        unitary = partial_unitary(circuit, tau)
        register = layout.register_index(tau)
        for x in range(data_size):
            for d in range(data_size):
                if unitary[d, x] != 0:
                    rows.append((d << layout.register_bits) | register)
                    cols.append(k * data_size + x)
                    values.append(unitary[d, x])
    return sp.csr_matrix((values, (rows, cols)), shape=(1 << layout.num_qubits, len(configs) * data_size))


def rotated_laplacian(hamiltonian: CodeHamiltonian, cap: int = DEFAULT_STATE_CAP) -> RotatedLaplacian:
    circuit = hamiltonian.circuit
    graph = config_graph(circuit.arch, cap)
    configs = sorted(graph.nodes)
    laplacian = 0.5 * nx.laplacian_matrix(graph, nodelist=configs).toarray().astype(float)
    w = rotation(circuit, configs)
    rotated = (w.conj().T @ hamiltonian.family_operator("prop") @ w).toarray()
    expected = np.kron(laplacian, np.eye(1 << circuit.n))
    gram = (w.conj().T @ w).toarray()
    return RotatedLaplacian(laplacian=laplacian, configs=configs,
                            kron_residual=float(np.max(np.abs(rotated - expected))),
                            isometry_residual=float(np.max(np.abs(gram - np.eye(gram.shape[0])))))


def geometric_lemma_bound(delta_prop: float, overlap_cos2: float) -> float:
    """ Lambda sin^2(theta / 2) with Lambda = min(1, delta_prop) and cos^2(theta) = overlap_cos2 """
    if not (0.0 <= delta_prop and 0.0 <= overlap_cos2 <= 1.0):
        raise SpacetimeError(ErrorCodes.OUT_OF_RANGE_INPUT, f"inputs {delta_prop}, {overlap_cos2} out of range")
    theta = math.acos(math.sqrt(overlap_cos2))
    return min(1.0, delta_prop) * math.sin(theta / 2) ** 2


class GeometricLemmaReport(NamedTuple):
    bound: float
    gap: float
    delta_rest: float
    overlap_cos2: float
    holds: bool


def kernel_angle_cos2(projector_diagonal: np.ndarray, kernel_basis: np.ndarray) -> float:
    """ Largest overlap between the two kernels away from their intersection """
    restricted = kernel_basis.conj().T @ (projector_diagonal[:, None] * kernel_basis)
    overlaps = np.linalg.eigvalsh((restricted + restricted.conj().T) / 2)
    below = overlaps[overlaps < 1.0 - 1e-9]
    return float(max(0.0, below.max())) if len(below) else 0.0


def geometric_lemma_check(hamiltonian: CodeHamiltonian) -> GeometricLemmaReport:
    """ Splits H into H_init and the rest and compares the resulting bound with the exact gap """
    total = hamiltonian.operator().toarray()
    init = hamiltonian.family_operator("init").diagonal().real
    rest = total - np.diag(init)
    eigenvalues, vectors = np.linalg.eigh((rest + rest.conj().T) / 2)
    kernel = vectors[:, eigenvalues < KERNEL_TOLERANCE]
    excited = eigenvalues[eigenvalues >= KERNEL_TOLERANCE]
    delta_rest = float(excited[0]) if len(excited) else 1.0
    cos2 = kernel_angle_cos2((init < KERNEL_TOLERANCE).astype(float), kernel)
    bound = geometric_lemma_bound(delta_rest, cos2)
    gap = hamiltonian_spectrum(hamiltonian.operator(), dense_limit=total.shape[0]).gap
    return GeometricLemmaReport(bound=bound, gap=gap, delta_rest=delta_rest, overlap_cos2=cos2,
                                holds=bool(bound <= gap + 1e-10))


class FidelityCount(NamedTuple):
    ratio: Fraction
    lower_bound: Fraction
    compatible: int
    total: int
    padded_layers: int


def window_count(ell: int, h: int) -> int:
    """ Configurations of B_ell with minimal time 0 and every time at most h """
    if h == 0:
        return 1
    return count_bitonic(h) ** (1 << (ell - h)) - count_bitonic(h - 1) ** (1 << (ell - h + 1))


def fidelity_counting(ell: int, m: int, pad: float) -> FidelityCount:
    """ Fraction of circular configurations whose window lies inside the identity-padded tail
    :param ell: block rank
    :param m: number of blocks
    :param pad: fraction of the D = m ell layers that are padding, at the end of the circuit
    :return: exact ratio and the (P - ell + 1) / D lower bound
    """
    depth = ell * m
    padded = math.floor(pad * depth)
    if padded < ell:
        raise SpacetimeError(ErrorCodes.SHORT_PAD_REGION, f"{padded} padded layers, at least {ell} needed")
    first = depth - padded
    compatible = sum(window_count(ell, min(depth - 1 - w, ell - 1)) for w in range(first, depth))
    total = depth * (count_bitonic(ell) - v_count(ell))
    return FidelityCount(ratio=Fraction(compatible, total), lower_bound=Fraction(padded - ell + 1, depth),
                         compatible=compatible, total=total, padded_layers=padded)
