"""
Pauli stabilizers of the spacetime code and energy-based detection of Pauli errors.
"""
import logging
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .architecture import Architecture, Circuit, bitonic_layer
from .error_codes import ErrorCodes, SpacetimeError
from .hamiltonian import CodeHamiltonian, RegisterLayout, term_expectation
from .logger_formatter import DEFAULT_LOGGER_NAME
from .pauli import PauliString, random_pauli
from .statevector import inverse_gate

# Relative slack under 1 / D^2 when deciding that a term detects an error
THRESHOLD_SLACK = 1e-6
# Case labels of the syntactic classifier, in the order they are tested
CASES = ("1", "2.1", "2.2", "3.1", "3.2.1.1", "3.2.1.2", "3.2.2", "stabilizer")

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)

_LOGGER = logging.getLogger(f"{DEFAULT_LOGGER_NAME}.{__name__}")


def rect(circuit: Circuit, p: int, j: int) -> Tuple[int, ...]:
    """ Wires whose clock qubit j is toggled together with the one of wire p.
    The forward toggle of C_{p,j} happens in layer j - 1 and the backward one in layer 2X + 1 - j (0-based).
    :param circuit: circular circuit
    :param p: 1-based wire
    :param j: clock position in 1..X
    :return: sorted wires {p, q1, q2, p'}, two of them coincide when both layers pair p the same way
    """
    layout = RegisterLayout(circuit.n, circuit.depth)
    x = layout.clock_length
    if not 1 <= j <= x:
        raise SpacetimeError(ErrorCodes.INDEX_OUT_OF_RANGE, f"clock position {j} outside [1, {x}]")
    arch = circuit.arch
    forward, backward = j - 1, 2 * x + 1 - j
    q1 = arch.partner(forward, p)
    q2 = arch.partner(backward, p)
    p_prime = arch.partner(backward, q1)
    if arch.partner(forward, q2) != p_prime:
        raise SpacetimeError(ErrorCodes.UNSUPPORTED_ARCHITECTURE,
                             f"layers {forward} and {backward} do not close a rectangle on wire {p}")
    return tuple(sorted({p, q1, q2, p_prime}))


def _qubit_bit(qubit: int, num_qubits: int) -> int:
    return 1 << (num_qubits - 1 - qubit)


def z_string(num_qubits: int, qubits: Sequence[int]) -> PauliString:
    chosen = set(qubits)
    return PauliString(0, "".join("Z" if q in chosen else "I" for q in range(num_qubits)))


class StabilizerGroup:
    """ Abelian group of Z-type Pauli strings stored as a GF(2) basis of z masks """

    def __init__(self, num_qubits: int, generators: Sequence[PauliString] = ()):
        self.__num_qubits = num_qubits
        self.__basis: Dict[int, int] = dict()
        self.__generators: List[PauliString] = list()
        for generator in generators:
            self.add(generator)

    @property
    def num_qubits(self) -> int:
        return self.__num_qubits

    @property
    def rank(self) -> int:
        return len(self.__basis)

    @property
    def generators(self) -> List[PauliString]:
        return list(self.__generators)

    def size(self) -> int:
        return 1 << self.rank

    def __reduce_mask(self, mask: int) -> int:
        for pivot in sorted(self.__basis, reverse=True):
            if mask & pivot:
                mask ^= self.__basis[pivot]
        return mask

    def add(self, generator: PauliString) -> bool:
        """ Adds a Z-type generator, returns False when it is already in the span """
        if generator.x_mask:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"{generator} is not Z-type")
        if generator.num_qubits != self.__num_qubits:
            raise SpacetimeError(ErrorCodes.DIMENSION_MISMATCH, f"{generator} on {self.__num_qubits} qubits")
        reduced = self.__reduce_mask(generator.z_mask)
        if not reduced:
            return False
        pivot = 1 << (reduced.bit_length() - 1)
        for key in list(self.__basis):
            if self.__basis[key] & pivot:
                self.__basis[key] ^= reduced
        self.__basis[pivot] = reduced
        self.__generators.append(generator)
        return True

    def contains_mask(self, z_mask: int) -> bool:
        return self.__reduce_mask(z_mask) == 0

    def contains(self, pauli: PauliString) -> bool:
        """ Membership up to phase """
        return pauli.x_mask == 0 and self.contains_mask(pauli.z_mask)

    def elements(self) -> List[PauliString]:
        masks = [0]
        for row in self.__basis.values():
            masks += [mask ^ row for mask in masks]
        return [z_string(self.__num_qubits, [q for q in range(self.__num_qubits)
                                             if mask & _qubit_bit(q, self.__num_qubits)])
                for mask in sorted(masks)]


def flag_stabilizer(layout: RegisterLayout) -> PauliString:
    return z_string(layout.num_qubits, [layout.flag(i) for i in range(1, layout.n + 1)])


def clock_stabilizers(circuit: Circuit) -> List[PauliString]:
    """ Z on clock qubit j of every wire of rect(p, j), one generator per distinct rectangle """
    layout = RegisterLayout(circuit.n, circuit.depth)
    seen = set()
    generators = list()
    for j in range(1, layout.clock_length + 1):
        for p in range(1, circuit.n + 1):
            wires = rect(circuit, p, j)
            if (wires, j) in seen:
                continue
            seen.add((wires, j))
            generators.append(z_string(layout.num_qubits, [layout.clock(w, j) for w in wires]))
    return generators


def stabilizer_set(circuit: Circuit) -> StabilizerGroup:
    """ Product closure of the flag stabilizer and the clock rectangle stabilizers """
    layout = RegisterLayout(circuit.n, circuit.depth)
    group = StabilizerGroup(layout.num_qubits, [flag_stabilizer(layout)] + clock_stabilizers(circuit))
    _LOGGER.debug(f"Stabilizer group of rank {group.rank} on {layout.num_qubits} qubits")
    return group


def clock_sign(circuit: Circuit, tau: Sequence[int], generator: PauliString) -> int:
    """ Eigenvalue of a Z-type generator on the register state encoding the configuration tau """
    layout = RegisterLayout(circuit.n, circuit.depth)
    if generator.x_mask or generator.num_qubits != layout.num_qubits:
        raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"{generator} is not a Z-type string of the layout")
    parity = bin(generator.z_mask & layout.register_index(tau)).count("1") % 2
    return -1 if parity else 1


def classify_pauli(layout: RegisterLayout, group: StabilizerGroup, pauli: PauliString) -> str:
    """ Case of the local detection argument a Pauli string falls into """
    letters = pauli.letters
    clock_qubits = [layout.clock(i, j) for i in range(1, layout.n + 1) for j in range(1, layout.clock_length + 1)]
    flag_qubits = [layout.flag(i) for i in range(1, layout.n + 1)]
    data_qubits = [layout.data(i) for i in range(1, layout.n + 1)]
    if any(letters[q] in "XY" for q in clock_qubits):
        return "1"
    flipped_flags = [q for q in flag_qubits if letters[q] in "XY"]
    if flipped_flags:
        return "2.1" if len(flipped_flags) == len(flag_qubits) else "2.2"
    if any(letters[q] != "I" for q in data_qubits):
        return "3.1"
    if group.contains(pauli):
        return "stabilizer"
    clock_mask = sum(_qubit_bit(q, layout.num_qubits) for q in clock_qubits)
    clock_part = pauli.z_mask & clock_mask
    clock_group = StabilizerGroup(layout.num_qubits, [g for g in group.generators if g.z_mask & clock_mask])
    if not clock_group.contains_mask(clock_part):
        return "3.2.1.1"
    return "3.2.1.2" if clock_part else "3.2.2"


class PauliEnergy(NamedTuple):
    # <psi| P^dag H P |psi>
    total: float
    best_term: str
    best_value: float
    per_term: List[float]


def pauli_energy(hamiltonian: CodeHamiltonian, pauli: PauliString, state: np.ndarray) -> PauliEnergy:
    """ Energy of P|psi> under the whole Hamiltonian and under every local term
    :param hamiltonian: code Hamiltonian
    :param pauli: error on all physical qubits
    :param state: ground state
    :return: PauliEnergy with the largest single-term expectation
    """
    if pauli.num_qubits != hamiltonian.num_qubits or np.asarray(state).size != 1 << hamiltonian.num_qubits:
        raise SpacetimeError(ErrorCodes.DIMENSION_MISMATCH,
                             f"{pauli.num_qubits}-qubit error on a {hamiltonian.num_qubits}-qubit Hamiltonian")
    corrupted = pauli.apply(state)
    total = float(np.real(np.vdot(corrupted, hamiltonian.operator() @ corrupted)))
    per_term = [term_expectation(term, corrupted, hamiltonian.num_qubits) for term in hamiltonian.terms]
    best = int(np.argmax(per_term))
    return PauliEnergy(total=total, best_term=hamiltonian.terms[best].label, best_value=per_term[best],
                       per_term=per_term)


def detection_threshold(depth: int) -> float:
    return (1.0 - THRESHOLD_SLACK) / depth ** 2


def detection_row(hamiltonian: CodeHamiltonian, group: StabilizerGroup, pauli: PauliString,
                  state: np.ndarray) -> Dict:
    energy = pauli_energy(hamiltonian, pauli, state)
    threshold = detection_threshold(hamiltonian.circuit.depth)
    return {"pauli": str(pauli), "case": classify_pauli(hamiltonian.layout, group, pauli),
            "best_term": energy.best_term, "expectation": energy.best_value, "threshold": threshold,
            "detected": bool(energy.best_value >= threshold)}


def detection_sweep(hamiltonian: CodeHamiltonian, state: np.ndarray, num_samples: int = 500,
                    seed: Optional[Union[int, np.random.Generator]] = None,
                    paulis: Optional[Sequence[PauliString]] = None) -> List[Dict]:
    """ Detection report of random non-stabilizer Pauli errors, or of the given ones
    :param hamiltonian: code Hamiltonian
    :param state: ground state
    :param num_samples: number of random errors when paulis is not given
    :param seed: seed of the error sampler
    :param paulis: explicit errors
    :return: one row per error
    """
    group = stabilizer_set(hamiltonian.circuit)
    if paulis is None:
        rng = np.random.default_rng(seed)
        paulis = list()
        while len(paulis) < num_samples:
            candidate = random_pauli(hamiltonian.num_qubits, rng)
            if not group.contains(candidate):
                paulis.append(candidate)
    rows = [detection_row(hamiltonian, group, pauli, state) for pauli in paulis]
    missed = sum(not row["detected"] for row in rows)
    _LOGGER.info(f"Detection sweep: {len(rows) - missed}/{len(rows)} errors detected")
    return rows


def stabilizer_energies(hamiltonian: CodeHamiltonian, state: np.ndarray) -> float:
    """ Largest single-term expectation of P|psi> over all stabilizers P """
    group = stabilizer_set(hamiltonian.circuit)
    return max(pauli_energy(hamiltonian, pauli, state).best_value for pauli in group.elements())


def flip_padded_circuit(core: Circuit) -> Circuit:
    """ Circular circuit J C I J, J being a bitonic block of identities closed by a layer of X (x) X gates
    and I an identity block. The result is equivalent to the identity when the core is.
    """
    ell = core.arch.rank
    half = core.n // 2
    block = [bitonic_layer(ell, c) for c in range(1, ell + 1)]
    flip_block = [["II"] * half for _ in range(ell - 1)] + [[np.kron(_PAULI_X, _PAULI_X)] * half]
    identity_block = [["II"] * half for _ in range(ell)]
    layers = block + list(core.arch.layers) + block + block
    gates = flip_block + [list(g) for g in core.gates] + identity_block + flip_block
    return Circuit(Architecture(core.n, layers, circular=True), gates)


def default_sweep_circuit() -> Circuit:
    """ Two wires, D = 12: H and S reach both wires inside the flip padding and are undone before it closes """
    forward = ["HI", "IH", "SI", "IS"]
    core_gates = forward + [inverse_gate(gate) for gate in reversed(forward)] + ["II"]
    core = Circuit(Architecture(2, [((1, 2),)] * len(core_gates)), [[gate] for gate in core_gates])
    return flip_padded_circuit(core)
