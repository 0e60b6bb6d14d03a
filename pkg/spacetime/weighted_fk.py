"""
Global-clock circuit Hamiltonian with Metropolis-weighted propagation.
The unary clock has L = T + n steps: n identity steps carrying the staggered input checks,
followed by the T gates of the circuit in layer order. The weights put probability 1 - eps
on the final time step.
"""
import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .architecture import Architecture, Circuit
from .error_codes import ErrorCodes, SpacetimeError
from .hamiltonian import SpectrumResult, Term, embed_operator, hamiltonian_spectrum
from .logger_formatter import DEFAULT_LOGGER_NAME
from .markov import DEFAULT_DENSE_LIMIT, ReversibleChain
from .statevector import apply_gate, gate_matrix, is_identity_gate

# Scale of every Metropolis transition, it keeps detailed balance at both endpoints
METROPOLIS_SCALE = 0.25

_LOGGER = logging.getLogger(f"{DEFAULT_LOGGER_NAME}.{__name__}")


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise SpacetimeError(ErrorCodes.INVALID_EPSILON, f"epsilon {epsilon} outside (0, 1)")


def fk_weights(num_steps: int, epsilon: float) -> np.ndarray:
    """ pi_t = eps / L for t < L and pi_L = 1 - eps """
    _check_epsilon(epsilon)
    weights = np.full(num_steps + 1, epsilon / num_steps)
    weights[-1] = 1.0 - epsilon
    return weights


def metropolis_transitions(weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """ (forward, backward) with forward[t] = P(t -> t + 1) and backward[t] = P(t + 1 -> t) """
    forward = METROPOLIS_SCALE * np.minimum(1.0, weights[1:] / weights[:-1])
    backward = METROPOLIS_SCALE * np.minimum(1.0, weights[:-1] / weights[1:])
    return forward, backward


def weighted_fk_chain(num_gates: int, n: int, epsilon: float) -> ReversibleChain:
    """ Metropolis walk on the clock times 0..T + n """
    num_steps = num_gates + n
    weights = fk_weights(num_steps, epsilon)
    forward, backward = metropolis_transitions(weights)
    transition = np.zeros((num_steps + 1, num_steps + 1))
    for t in range(num_steps):
        transition[t, t + 1] = forward[t]
        transition[t + 1, t] = backward[t]
    np.fill_diagonal(transition, 1.0 - transition.sum(axis=1))
    return ReversibleChain(list(range(num_steps + 1)), transition, weights, name="weighted-fk")


def _time_condition(clock: Dict[int, int], num_steps: int, t: int) -> Dict[int, int]:
    # c_t = 1 and c_(t+1) = 0 select time t on a unary clock
    condition = dict()
    if t >= 1:
        condition[clock[t]] = 1
    if t < num_steps:
        condition[clock[t + 1]] = 0
    return condition


class WeightedFK:
    """ Weighted Feynman-Kitaev Hamiltonian of a circuit with k logical inputs """

    def __init__(self, circuit: Circuit, epsilon: float, k: int, logger_name: str = DEFAULT_LOGGER_NAME):
        self.__logger = logging.getLogger(f"{logger_name}.{__name__}")
        _check_epsilon(epsilon)
        if not 0 <= k <= circuit.n:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"k={k} outside [0, {circuit.n}]")
        self.__n = circuit.n
        self.__k = k
        self.__epsilon = epsilon
        self.__steps = [((1, 2), "II")] * circuit.n
        for layer, gates in zip(circuit.arch.layers, circuit.gates):
            self.__steps.extend(zip(layer, gates))
        self.__num_gates = len(self.__steps) - circuit.n
        self.__weights = fk_weights(self.num_steps, epsilon)
        self.__terms = self.__clock_terms() + self.__input_terms() + self.__prop_terms()
        self.__operator = None
        self.__logger.debug(f"Weighted FK with T={self.__num_gates}, n={self.__n}, eps={epsilon}")

    @property
    def n(self) -> int:
        return self.__n

    @property
    def k(self) -> int:
        return self.__k

    @property
    def num_gates(self) -> int:
        return self.__num_gates

    @property
    def num_steps(self) -> int:
        return self.__num_gates + self.__n

    @property
    def num_qubits(self) -> int:
        return self.__n + self.num_steps

    @property
    def weights(self) -> np.ndarray:
        return self.__weights

    @property
    def terms(self) -> List[Term]:
        return self.__terms

    def clock_qubit(self, t: int) -> int:
        """ 0-based qubit of clock bit c_t, t in 1..L """
        return self.__n + t - 1

    def clock_index(self, t: int) -> int:
        """ Integer value of the clock register 1^t 0^(L - t) """
        return ((1 << t) - 1) << (self.num_steps - t)

    def step(self, t: int) -> Tuple[Tuple[int, int], object]:
        """ Pair and gate applied between times t - 1 and t """
        return self.__steps[t - 1]

    def __clock(self) -> Dict[int, int]:
        return {t: self.clock_qubit(t) for t in range(1, self.num_steps + 1)}

    def __clock_terms(self) -> List[Term]:
        projector = sp.csr_matrix(np.diag([0.0, 1.0, 0.0, 0.0]).astype(complex))
        return [Term("clock", (self.clock_qubit(t), self.clock_qubit(t + 1)), projector, f"clock[{t}]")
                for t in range(1, self.num_steps)]

    def __input_terms(self) -> List[Term]:
        # Ancilla i is checked at time i - k - 1, inside the identity steps
        terms = list()
        clock = self.__clock()
        for i in range(self.__k + 1, self.__n + 1):
            condition = _time_condition(clock, self.num_steps, i - self.__k - 1)
            qubits = tuple(sorted(condition)) + (i - 1,)
            required = [condition[q] for q in qubits[:-1]] + [1]
            diagonal = np.zeros(1 << len(qubits))
            diagonal[int("".join(map(str, required)), 2)] = 1.0
            terms.append(Term("input", qubits, sp.diags(diagonal).astype(complex).tocsr(), f"input[{i}]"))
        return terms

    def __prop_terms(self) -> List[Term]:
        terms = list()
        clock = self.__clock()
        forward, backward = metropolis_transitions(self.__weights)
        for t in range(1, self.num_steps + 1):
            # c_(t-1), c_t, c_(t+1) read 100 at time t - 1 and 110 at time t
            window = [(s, bit) for s, bit in ((t - 1, 1), (t, 0), (t + 1, 0)) if s in clock]
            register = [clock[s] for s, _ in window]
            b = np.zeros(1 << len(register))
            a = np.zeros(1 << len(register))
            b[int("".join(str(bit) for _, bit in window), 2)] = 1.0
            a[int("".join(str(1 if s == t else bit) for s, bit in window), 2)] = 1.0
            (p, q), gate = self.step(t)
            unitary = gate_matrix(gate)
            hop = math.sqrt(forward[t - 1] * backward[t - 1])
            matrix = (np.kron(np.eye(4), backward[t - 1] * np.outer(a, a) + forward[t - 1] * np.outer(b, b))
                      - hop * (np.kron(unitary, np.outer(a, b)) + np.kron(unitary.conj().T, np.outer(b, a))))
            terms.append(Term("prop", (p - 1, q - 1) + tuple(register), sp.csr_matrix(matrix), f"prop[{t}]"))
        return terms

    def operator(self) -> sp.csr_matrix:
        if self.__operator is None:
            dimension = 1 << self.num_qubits
            operator = sp.csr_matrix((dimension, dimension), dtype=complex)
            for term in self.__terms:
                operator = operator + embed_operator(term.matrix, term.qubits, self.num_qubits)
            self.__operator = operator.tocsr()
        return self.__operator

    def spectrum(self, dense_limit: int = DEFAULT_DENSE_LIMIT) -> SpectrumResult:
        return hamiltonian_spectrum(self.operator(), dense_limit, num_eigenvalues=(1 << self.__k) + 8)

    def __data_operator(self, t: int) -> np.ndarray:
        """ 2^n x 2^n matrix of the gate applied at step t """
        (p, q), gate = self.step(t)
        size = 1 << self.__n
        if is_identity_gate(gate):
            return np.eye(size, dtype=complex)
        unitary = gate_matrix(gate)
        return np.stack([apply_gate(column, unitary, p, q, self.__n) for column in np.eye(size, dtype=complex).T],
                        axis=1)

    def legal_operator(self) -> sp.csr_matrix:
        """ H on the unary clock states, basis index x * (L + 1) + t for data x and time t.
        Every term maps legal clocks to legal clocks and illegal ones cost at least 1, so the
        spectrum of H below 1 is the spectrum of this block.
        """
        size = self.num_steps + 1
        forward, backward = metropolis_transitions(self.__weights)
        data_eye = sp.identity(1 << self.__n, dtype=complex, format="csr")

        def unit(row: int, column: int) -> sp.csr_matrix:
            return sp.csr_matrix(([1.0], ([row], [column])), shape=(size, size), dtype=complex)

        operator = sp.csr_matrix(((1 << self.__n) * size, (1 << self.__n) * size), dtype=complex)
        values = np.arange(1 << self.__n)
        for i in range(self.__k + 1, self.__n + 1):
            ancilla = sp.diags(((values >> (self.__n - i)) & 1).astype(complex))
            check = i - self.__k - 1
            operator = operator + sp.kron(ancilla, unit(check, check))
        for t in range(1, self.num_steps + 1):
            hop = math.sqrt(forward[t - 1] * backward[t - 1])
            gate = sp.csr_matrix(self.__data_operator(t))
            operator = (operator
                        + sp.kron(data_eye, forward[t - 1] * unit(t - 1, t - 1) + backward[t - 1] * unit(t, t))
                        - hop * (sp.kron(gate, unit(t, t - 1)) + sp.kron(gate.conj().T, unit(t - 1, t))))
        return operator.tocsr()

    def legal_spectrum(self, dense_limit: int = DEFAULT_DENSE_LIMIT) -> SpectrumResult:
        return hamiltonian_spectrum(self.legal_operator(), dense_limit, num_eigenvalues=(1 << self.__k) + 8)

    def max_locality(self) -> int:
        return max(len(term.qubits) for term in self.__terms)


def build_weighted_fk(circuit: Circuit, epsilon: float, k: int) -> WeightedFK:
    return WeightedFK(circuit, epsilon, k)


def weighted_history_state(fk: WeightedFK, input_state: np.ndarray) -> np.ndarray:
    """ sum_t sqrt(pi_t) |1^t 0^(L - t)> U_t..U_1 |input> """
    data = np.asarray(input_state, dtype=complex)
    amplitudes = np.zeros((1 << fk.n, 1 << fk.num_steps), dtype=complex)
    amplitudes[:, fk.clock_index(0)] = math.sqrt(fk.weights[0]) * data
    for t in range(1, fk.num_steps + 1):
        (p, q), gate = fk.step(t)
        if not is_identity_gate(gate):
            data = apply_gate(data, gate_matrix(gate), p, q, fk.n)
        amplitudes[:, fk.clock_index(t)] = math.sqrt(fk.weights[t]) * data
    return amplitudes.reshape(-1)


def endpoint_weight(fk: WeightedFK, state: np.ndarray, t: Optional[int] = None) -> float:
    """ Probability of clock time t (default the final step) """
    t = fk.num_steps if t is None else t
    amplitudes = np.asarray(state).reshape(1 << fk.n, 1 << fk.num_steps)
    return float(np.sum(np.abs(amplitudes[:, fk.clock_index(t)]) ** 2))


class GapOverlapSweep(NamedTuple):
    rows: List[Dict]
    # max over the sweep of gap * min endpoint weight * T^2
    constant: float


def sweep_circuit(n: int, num_gates: int) -> Circuit:
    """ Identity gates on the pairs (1, 2), (3, 4), ..., num_gates of them """
    per_layer = n // 2
    if n < 2 or num_gates < 1 or num_gates % per_layer:
        raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"{num_gates} gates do not fill layers of {n} wires")
    layer = tuple((2 * r + 1, 2 * r + 2) for r in range(per_layer))
    return Circuit.identity(Architecture(n, [layer] * (num_gates // per_layer)))


def gap_overlap_sweep(epsilon: float, n: int, gate_counts: Sequence[int], k: int = 1,
                      dense_limit: int = DEFAULT_DENSE_LIMIT) -> GapOverlapSweep:
    """ Hamiltonian gap times the smaller endpoint weight, for several circuit sizes.
    The legal clock block does not depend on the gates, identity circuits stand for every circuit of T gates.
    """
    rows = list()
    for num_gates in gate_counts:
        fk = WeightedFK(sweep_circuit(n, num_gates), epsilon, k)
        gap = fk.legal_spectrum(dense_limit).gap
        overlap = float(min(fk.weights[0], fk.weights[-1]))
        product = gap * overlap
        rows.append({"T": num_gates, "n": n, "epsilon": epsilon, "gap": gap, "min_endpoint_weight": overlap,
                     "product": product, "scaled": product * num_gates ** 2})
    constant = max(row["scaled"] for row in rows) if rows else 0.0
    _LOGGER.info(f"Gap-overlap sweep over {len(rows)} sizes, constant {constant:.4e}")
    return GapOverlapSweep(rows=rows, constant=constant)
