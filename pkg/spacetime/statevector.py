"""
Dense state-vector simulation of two-qubit layered circuits.
Qubit 1 is the most significant bit of the basis index.
"""
from typing import Optional, Union

import numpy as np

from .error_codes import ErrorCodes, SpacetimeError

# Tolerance used to accept a generic matrix as a unitary gate
UNITARY_TOLERANCE = 1e-12

_I2 = np.eye(2, dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)

# Two-qubit gate labels, the first tensor factor acts on the lower qubit of the pair
GATE_MATRICES = {
    "II": np.eye(4, dtype=complex),
    "HI": np.kron(_H, _I2),
    "IH": np.kron(_I2, _H),
    "SI": np.kron(_S, _I2),
    "IS": np.kron(_I2, _S),
    # Control on the first qubit of the pair
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}

# Labels whose inverse is the label itself
SELF_INVERSE_LABELS = frozenset({"II", "HI", "IH", "CNOT", "SWAP"})

Gate = Union[str, np.ndarray]


def is_unitary(matrix: np.ndarray, tolerance: float = UNITARY_TOLERANCE) -> bool:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    return bool(np.allclose(matrix.conj().T @ matrix, np.eye(matrix.shape[0]), rtol=0.0, atol=tolerance))


def gate_matrix(gate: Gate) -> np.ndarray:
    """ Resolve a gate label or a generic matrix into a 4x4 unitary
    :param gate: one of the GATE_MATRICES labels or a 4x4 complex array
    :return: the 4x4 matrix
    """
    if isinstance(gate, str):
        if gate not in GATE_MATRICES:
            raise SpacetimeError(ErrorCodes.INVALID_GATE, f"unknown gate label {gate}")
        return GATE_MATRICES[gate]
    matrix = np.asarray(gate, dtype=complex)
    if matrix.shape != (4, 4) or not is_unitary(matrix):
        raise SpacetimeError(ErrorCodes.INVALID_GATE, "generic gates must be 4x4 unitaries")
    return matrix


def inverse_gate(gate: Gate) -> Gate:
    if isinstance(gate, str) and gate in SELF_INVERSE_LABELS:
        return gate
    return gate_matrix(gate).conj().T


def is_identity_gate(gate: Gate) -> bool:
    if isinstance(gate, str):
        return gate == "II"
    return bool(np.allclose(np.asarray(gate), np.eye(4), rtol=0.0, atol=UNITARY_TOLERANCE))


def apply_gate(state: np.ndarray, unitary: np.ndarray, p: int, q: int, num_qubits: int) -> np.ndarray:
    """ Apply a two-qubit unitary on the 1-based qubits p and q, p is the first tensor factor """
    tensor = np.moveaxis(state.reshape((2,) * num_qubits), (p - 1, q - 1), (0, 1))
    shape = tensor.shape
    tensor = (unitary @ tensor.reshape(4, -1)).reshape(shape)
    return np.moveaxis(tensor, (0, 1), (p - 1, q - 1)).reshape(-1)


def apply_single_qubit(state: np.ndarray, unitary: np.ndarray, p: int, num_qubits: int) -> np.ndarray:
    tensor = np.moveaxis(state.reshape((2,) * num_qubits), p - 1, 0)
    shape = tensor.shape
    tensor = (unitary @ tensor.reshape(2, -1)).reshape(shape)
    return np.moveaxis(tensor, 0, p - 1).reshape(-1)


def simulate(circuit, state: np.ndarray) -> np.ndarray:
    """ Run a layered circuit on a state vector
    :param circuit: Circuit whose layers are applied in order
    :param state: input vector of dimension 2^n
    :return: output vector
    """
    num_qubits = circuit.n
    state = np.asarray(state, dtype=complex)
    if state.shape != (2 ** num_qubits,):
        raise SpacetimeError(ErrorCodes.DIMENSION_MISMATCH,
                             f"state of size {state.size} for a {num_qubits}-qubit circuit")
    for layer_index in range(circuit.depth):
        for (p, q), gate in zip(circuit.arch.layers[layer_index], circuit.gates[layer_index]):
            if isinstance(gate, str) and gate == "II":
                continue
            state = apply_gate(state, gate_matrix(gate), p, q, num_qubits)
    return state


def random_state(num_qubits: int, rng: Optional[Union[int, np.random.Generator]] = None) -> np.ndarray:
    """ Normalized complex Gaussian vector """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    vector = rng.normal(size=2 ** num_qubits) + 1j * rng.normal(size=2 ** num_qubits)
    return vector / np.linalg.norm(vector)


def basis_state(num_qubits: int, index: int) -> np.ndarray:
    vector = np.zeros(2 ** num_qubits, dtype=complex)
    vector[index] = 1.0
    return vector


def reduced_density_matrix(state: np.ndarray, qubits, num_qubits: int) -> np.ndarray:
    """ Partial trace onto the given 0-based qubits, kept in the given order """
    qubits = list(qubits)
    rest = [i for i in range(num_qubits) if i not in qubits]
    tensor = np.transpose(np.asarray(state).reshape((2,) * num_qubits), qubits + rest)
    matrix = tensor.reshape(2 ** len(qubits), -1)
    return matrix @ matrix.conj().T
