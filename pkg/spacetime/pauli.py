"""
Pauli strings with phases: multiplication, commutation and action on state vectors.
"""
from typing import Iterable, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .error_codes import ErrorCodes, SpacetimeError
from .statevector import reduced_density_matrix

PAULI_LETTERS = "IXYZ"
# (left, right) -> (power of i, product letter)
_PRODUCT_TABLE = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}
_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_SINGLE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliString(NamedTuple):
    """ i^phase times a tensor product of letters, letter 0 acts on qubit 0 (most significant bit) """
    phase: int
    letters: str

    @classmethod
    def from_string(cls, text: str) -> "PauliString":
        text = text.strip()
        phase = 0
        for prefix, value in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if text.startswith(prefix):
                phase, text = value, text[len(prefix):]
                break
        if not text or set(text) - set(PAULI_LETTERS):
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"{text} is not a Pauli string")
        return cls(phase, text)

    @property
    def num_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(letter != "I" for letter in self.letters)

    @property
    def x_mask(self) -> int:
        return self._mask("XY")

    @property
    def z_mask(self) -> int:
        return self._mask("ZY")

    def _mask(self, members: str) -> int:
        mask = 0
        for letter in self.letters:
            mask = (mask << 1) | (letter in members)
        return mask

    def support(self) -> List[int]:
        return [i for i, letter in enumerate(self.letters) if letter != "I"]

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.num_qubits != other.num_qubits:
            raise SpacetimeError(ErrorCodes.DIMENSION_MISMATCH, "Pauli strings of different lengths")
        phase = self.phase + other.phase
        letters = list()
        for left, right in zip(self.letters, other.letters):
            power, letter = _PRODUCT_TABLE[(left, right)]
            phase += power
            letters.append(letter)
        return PauliString(phase % 4, "".join(letters))

    def commutes(self, other: "PauliString") -> bool:
        anticommuting = sum(a != "I" and b != "I" and a != b for a, b in zip(self.letters, other.letters))
        return anticommuting % 2 == 0

    def apply(self, state: np.ndarray) -> np.ndarray:
        """ P|state> using P = i^(phase + #Y) X^x Z^z """
        size = 1 << self.num_qubits
        state = np.asarray(state, dtype=complex)
        if state.shape != (size,):
            raise SpacetimeError(ErrorCodes.DIMENSION_MISMATCH, f"state of size {state.size} for {self}")
        indices = np.arange(size)
        parity = np.zeros(size, dtype=np.int64)
        z_mask = self.z_mask
        while z_mask:
            low = z_mask & -z_mask
            parity ^= (indices & low) != 0
            z_mask ^= low
        factor = 1j ** ((self.phase + self.letters.count("Y")) % 4)
        result = np.empty_like(state)
        result[indices ^ self.x_mask] = factor * np.where(parity, -1.0, 1.0) * state
        return result

    def to_matrix(self) -> sp.csr_matrix:
        matrix = sp.identity(1, dtype=complex, format="csr")
        for letter in self.letters:
            matrix = sp.kron(matrix, _SINGLE_QUBIT[letter], format="csr")
        return (1j ** self.phase) * matrix

    def __str__(self) -> str:
        return f"{_PHASE_PREFIX[self.phase % 4]}{self.letters}"


def identity_string(num_qubits: int) -> PauliString:
    return PauliString(0, "I" * num_qubits)


def single_qubit_string(num_qubits: int, positions: Union[int, Iterable[int]], letter: str) -> PauliString:
    positions = {positions} if isinstance(positions, int) else set(positions)
    return PauliString(0, "".join(letter if i in positions else "I" for i in range(num_qubits)))


def random_pauli(num_qubits: int, rng: Optional[Union[int, np.random.Generator]] = None) -> PauliString:
    """ Uniform non-identity Pauli string with phase +1 """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    while True:
        letters = "".join(PAULI_LETTERS[int(k)] for k in rng.integers(4, size=num_qubits))
        if set(letters) != {"I"}:
            return PauliString(0, letters)


def depolarize(rho: np.ndarray, probability: float) -> np.ndarray:
    """ Independent single-qubit depolarizing channel on every qubit of a density matrix """
    num_qubits = int(np.log2(rho.shape[0]))
    for qubit in range(num_qubits):
        mixed = np.zeros_like(rho)
        for letter in "XYZ":
            operator = np.kron(np.kron(np.eye(1 << qubit), _SINGLE_QUBIT[letter]),
                               np.eye(1 << (num_qubits - qubit - 1)))
            mixed += operator @ rho @ operator.conj().T
        rho = (1 - probability) * rho + probability / 3 * mixed
    return rho


def depolarizing_term_energies(terms: Sequence, state: np.ndarray, num_qubits: int, probability: float) -> List[float]:
    """ Energy of every local term after depolarizing the reduced state of its support
    :param terms: objects with qubits (0-based) and a local matrix
    :param state: state vector on num_qubits qubits
    :param probability: depolarizing probability per qubit
    :return: energies in the order of the terms
    """
    if not 0.0 <= probability <= 1.0:
        raise SpacetimeError(ErrorCodes.OUT_OF_RANGE_INPUT, f"probability {probability} outside [0, 1]")
    energies = list()
    for term in terms:
        rho = depolarize(reduced_density_matrix(state, term.qubits, num_qubits), probability)
        local = term.matrix.toarray() if sp.issparse(term.matrix) else np.asarray(term.matrix)
        energies.append(float(np.real(np.trace(local @ rho))))
    return energies
