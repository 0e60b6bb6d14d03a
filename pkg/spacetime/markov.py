"""
Reversible Markov chains on valid configurations and dyadic tilings: exact spectral gaps,
conductance, Cheeger bounds, the block decomposition calculator and a seeded sampler.
"""
import logging
import math
from fractions import Fraction
from typing import Dict, Hashable, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .architecture import Architecture, build_bitonic_block, build_circular
from .configurations import (DEFAULT_STATE_CAP, MoveDirection, available_moves, apply_move, canonical_window,
                             count_bitonic, enumerate_valid)
from .error_codes import ErrorCodes, SpacetimeError
from .logger_formatter import DEFAULT_LOGGER_NAME
from .tilings import bit_reverse, config_to_tiling, flip_edge, flippable_edges, tiling_to_config

# Row sums and detailed balance are checked to this tolerance
CHAIN_TOLERANCE = 1e-12
# Largest chain solved with a dense eigensolver
DEFAULT_DENSE_LIMIT = 4096
# Largest state space for the exhaustive Cheeger minimisation
EXHAUSTIVE_CUT_LIMIT = 20
# Sokal window constant for the integrated autocorrelation time
SOKAL_WINDOW = 5.0
# Golden ratio, the consecutive-overlap asymptote is its inverse
PHI = (1 + 5 ** 0.5) / 2

_LOGGER = logging.getLogger(f"{DEFAULT_LOGGER_NAME}.{__name__}")


class ReversibleChain:
    """ Row-stochastic transition matrix reversible with respect to pi """

    def __init__(self, states: Sequence[Hashable], transition, stationary: Sequence[float], name: str = "chain"):
        self.__states = list(states)
        self.__matrix = sp.csr_matrix(transition, dtype=float)
        self.__pi = np.asarray(stationary, dtype=float)
        self.__pi = self.__pi / self.__pi.sum()
        self.__name = name
        size = len(self.__states)
        if self.__matrix.shape != (size, size) or self.__pi.shape != (size,):
            raise SpacetimeError(ErrorCodes.DIMENSION_MISMATCH, f"{name}: {size} states for a "
                                                                f"{self.__matrix.shape} matrix")
        row_sums = np.asarray(self.__matrix.sum(axis=1)).reshape(-1)
        if np.max(np.abs(row_sums - 1.0)) > CHAIN_TOLERANCE or self.__matrix.min() < 0:
            raise SpacetimeError(ErrorCodes.NON_REVERSIBLE_CHAIN, f"{name}: rows are not probability vectors")
        flow = sp.diags(self.__pi) @ self.__matrix
        if size and abs(flow - flow.T).max() > CHAIN_TOLERANCE:
            raise SpacetimeError(ErrorCodes.NON_REVERSIBLE_CHAIN, f"{name}: detailed balance fails")
        components, _ = csgraph.connected_components(self.__matrix, directed=True, connection="strong")
        if components > 1:
            raise SpacetimeError(ErrorCodes.DISCONNECTED_GRAPH, f"{name}: {components} communicating classes")

    @property
    def states(self) -> List[Hashable]:
        return self.__states

    @property
    def matrix(self) -> sp.csr_matrix:
        return self.__matrix

    @property
    def stationary(self) -> np.ndarray:
        return self.__pi

    @property
    def name(self) -> str:
        return self.__name

    @property
    def size(self) -> int:
        return len(self.__states)

    def __repr__(self) -> str:
        return f"ReversibleChain({self.__name}, states={self.size})"


class GapResult(NamedTuple):
    states: int
    gap: float
    lambda2: float
    method: str
    residual: float

    def to_dict(self) -> Dict:
        return self._asdict()


class CheegerResult(NamedTuple):
    phi: float
    lower: float
    upper: float
    cut: Tuple[int, ...]


class Decomposition(NamedTuple):
    blocks: Tuple[np.ndarray, ...]
    theta: int
    states: List[Tuple[int, ...]]


class DecompositionReport(NamedTuple):
    gap: float
    aggregate_gap: float
    min_restricted_gap: float
    theta: int
    # 1/2 gap(aggregate) min gap(restricted)
    bound: float
    holds: bool
    # gap(aggregate) min gap(restricted) / theta^2
    conservative_bound: float
    conservative_holds: bool


def config_graph(arch: Architecture, cap: int = DEFAULT_STATE_CAP) -> nx.Graph:
    """ Valid configurations joined by single gate toggles """
    graph = nx.Graph()
    states = enumerate_valid(arch, cap)
    graph.add_nodes_from(states)
    for tau in states:
        for move in available_moves(arch, tau):
            graph.add_edge(tau, apply_move(arch, tau, move))
    _LOGGER.debug(f"Configuration graph of {arch}: {graph.number_of_nodes()} nodes, {graph.number_of_edges()} edges")
    return graph


def laplacian_spectrum(graph: nx.Graph) -> np.ndarray:
    """ Ascending eigenvalues of the combinatorial Laplacian """
    laplacian = nx.laplacian_matrix(graph, nodelist=sorted(graph.nodes)).toarray().astype(float)
    return np.linalg.eigvalsh(laplacian)


def chain_from_laplacian(graph: nx.Graph) -> ReversibleChain:
    """ P = I - L / ||L|| with uniform stationary distribution """
    if graph.number_of_nodes() == 0 or not nx.is_connected(graph):
        raise SpacetimeError(ErrorCodes.DISCONNECTED_GRAPH, "the configuration graph is not connected")
    nodes = sorted(graph.nodes)
    laplacian = nx.laplacian_matrix(graph, nodelist=nodes).astype(float)
    if len(nodes) <= DEFAULT_DENSE_LIMIT:
        norm = float(np.linalg.eigvalsh(laplacian.toarray())[-1])
    else:
        norm = float(eigsh(laplacian, k=1, which="LA", return_eigenvectors=False)[0])
    if norm == 0.0:
        return ReversibleChain(nodes, sp.identity(1), [1.0], name="laplacian")
    transition = sp.identity(len(nodes), format="csr") - laplacian / norm
    return ReversibleChain(nodes, transition, np.ones(len(nodes)), name="laplacian")


def toggle_chain(arch: Architecture, rate: Optional[float] = None, cap: int = DEFAULT_STATE_CAP) -> ReversibleChain:
    """ Lazy gate-toggle chain, every available move has probability rate (default 1/(n D)) """
    rate = 1.0 / (arch.n * arch.depth) if rate is None else float(rate)
    states = enumerate_valid(arch, cap)
    index = {tau: i for i, tau in enumerate(states)}
    rows, cols, values = list(), list(), list()
    for i, tau in enumerate(states):
        moves = available_moves(arch, tau)
        if len(moves) * rate > 1.0 + CHAIN_TOLERANCE:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"rate {rate} too large for {len(moves)} moves")
        for move in moves:
            rows.append(i)
            cols.append(index[apply_move(arch, tau, move)])
            values.append(rate)
        rows.append(i)
        cols.append(i)
        values.append(1.0 - len(moves) * rate)
    size = len(states)
    transition = sp.csr_matrix((values, (rows, cols)), shape=(size, size))
    return ReversibleChain(states, transition, np.ones(size), name=f"toggle[{arch.family}]")


def edge_flip_chain(ell: int, variant: str = "lazy", cap: int = DEFAULT_STATE_CAP) -> ReversibleChain:
    """ Edge-flip chain on rank-ell tilings, states ordered like the configurations of B_ell.
    lazy: pick a tile and one of its four sides, flip when flippable and hold otherwise.
    resample: pick again until the side is flippable, stationary distribution proportional to
    the number of flippable edges.
    """
    if variant not in ("lazy", "resample"):
        raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown edge-flip variant {variant}")
    configs = enumerate_valid(build_bitonic_block(ell), cap)
    tilings = [config_to_tiling(ell, tau) for tau in configs]
    index = {tau: i for i, tau in enumerate(configs)}
    rows, cols, values, degrees = list(), list(), list(), list()
    for i, tiling in enumerate(tilings):
        edges = flippable_edges(tiling)
        degrees.append(len(edges))
        weight = 1.0 / (1 << (ell + 1)) if variant == "lazy" else 1.0 / len(edges)
        for segment in edges:
            rows.append(i)
            cols.append(index[tiling_to_config(flip_edge(tiling, segment))])
            values.append(weight)
        rows.append(i)
        cols.append(i)
        values.append(1.0 - weight * len(edges))
    size = len(tilings)
    transition = sp.csr_matrix((values, (rows, cols)), shape=(size, size))
    stationary = np.ones(size) if variant == "lazy" else np.asarray(degrees, dtype=float)
    return ReversibleChain(tilings, transition, stationary, name=f"edge-flip[{variant}]")


def _symmetrized(chain: ReversibleChain) -> sp.csr_matrix:
    root = np.sqrt(chain.stationary)
    return sp.csr_matrix(sp.diags(root) @ chain.matrix @ sp.diags(1.0 / root))


def spectral_gap(chain: ReversibleChain, dense_limit: int = DEFAULT_DENSE_LIMIT, tol: float = 1e-8) -> GapResult:
    """ 1 - lambda_2 of a reversible chain
    :param chain: reversible chain
    :param dense_limit: largest size handled by a dense eigensolver
    :param tol: tolerance of the iterative solver
    :return: GapResult
    """
    size = chain.size
    if size == 1:
        return GapResult(states=1, gap=1.0, lambda2=0.0, method="trivial", residual=0.0)
    symmetric = _symmetrized(chain)
    if size <= dense_limit:
        dense = symmetric.toarray()
        eigenvalues = np.linalg.eigvalsh((dense + dense.T) / 2)
        lambda2 = float(eigenvalues[-2])
        return GapResult(states=size, gap=1.0 - lambda2, lambda2=lambda2, method="dense", residual=0.0)
    # Deflate the top eigenvector sqrt(pi) to -1 so that lambda_2 becomes the largest eigenvalue
    top = np.sqrt(chain.stationary)

    def matvec(x):
        x = np.asarray(x).reshape(-1)
        return symmetric @ x - 2.0 * top * (top @ x)

    operator = LinearOperator((size, size), matvec=matvec, dtype=float)
    start = np.linspace(1.0, 2.0, size)
    start -= top * (top @ start)
    start /= np.linalg.norm(start)
    try:
        eigenvalues, vectors = eigsh(operator, k=1, which="LA", v0=start, tol=tol)
    except ArpackNoConvergence as err:
        raise SpacetimeError(ErrorCodes.CONVERGENCE_FAILURE, f"eigsh did not converge on {chain}: {err}")
    lambda2 = float(eigenvalues[0])
    residual = float(np.linalg.norm(matvec(vectors[:, 0]) - lambda2 * vectors[:, 0]))
    if residual > max(tol, 1e-6) * 100:
        raise SpacetimeError(ErrorCodes.CONVERGENCE_FAILURE, f"eigsh residual {residual:.3e} on {chain}")
    return GapResult(states=size, gap=1.0 - lambda2, lambda2=lambda2, method="iterative", residual=residual)


def _cut_mask(chain: ReversibleChain, subset: Sequence[int]) -> np.ndarray:
    mask = np.zeros(chain.size, dtype=bool)
    mask[np.asarray(list(subset), dtype=int)] = True
    if not mask.any() or mask.all():
        raise SpacetimeError(ErrorCodes.INVALID_CUT, "a cut must be a proper non-empty subset")
    return mask


def conductance(chain: ReversibleChain, subset: Sequence[int]) -> float:
    """ Probability flow out of the cut over the stationary mass of its smaller side """
    mask = _cut_mask(chain, subset)
    pi = chain.stationary
    inside, outside = np.flatnonzero(mask), np.flatnonzero(~mask)
    flow = float(pi[inside] @ np.asarray(chain.matrix[inside][:, outside].sum(axis=1)).reshape(-1))
    return flow / min(pi[mask].sum(), pi[~mask].sum())


def cheeger_bound(chain: ReversibleChain, cuts: Optional[Sequence[Sequence[int]]] = None,
                  chunk: int = 1 << 14) -> CheegerResult:
    """ Minimal conductance, exhaustive over all cuts for small chains.
    Phi^2 / 2 <= gap <= 2 Phi
    """
    if cuts is not None:
        best = min(((conductance(chain, cut), tuple(sorted(int(i) for i in cut))) for cut in cuts),
                   key=lambda item: item[0])
        return CheegerResult(phi=best[0], lower=best[0] ** 2 / 2, upper=2 * best[0], cut=best[1])
    size = chain.size
    if size > EXHAUSTIVE_CUT_LIMIT:
        raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"{size} states need an explicit cut family")
    if size < 2:
        raise SpacetimeError(ErrorCodes.INVALID_CUT, "a single state has no proper cut")
    pi = chain.stationary
    flow_matrix = chain.matrix.toarray() * pi[:, None]
    bits = 1 << np.arange(size)
    best_phi, best_mask = math.inf, 0
    for first in range(1, (1 << size) - 1, chunk):
        masks = np.arange(first, min(first + chunk, (1 << size) - 1))
        inside = (masks[:, None] & bits[None, :]) != 0
        mass = inside @ pi
        flow = np.einsum("kx,xy,ky->k", inside.astype(float), flow_matrix, (~inside).astype(float))
        phi = flow / np.minimum(mass, 1.0 - mass)
        k = int(np.argmin(phi))
        if phi[k] < best_phi:
            best_phi, best_mask = float(phi[k]), int(masks[k])
    cut = tuple(i for i in range(size) if best_mask >> i & 1)
    return CheegerResult(phi=best_phi, lower=best_phi ** 2 / 2, upper=2 * best_phi, cut=cut)


def block_decomposition(ell: int, m: int, cap: int = DEFAULT_STATE_CAP) -> Decomposition:
    """ Window blocks of a circular product: Omega_r holds the configurations with every time in [r, r + ell] """
    arch = build_circular(ell, m)
    depth = arch.depth
    states = enumerate_valid(arch, cap)
    times = np.asarray(states, dtype=int)
    blocks = tuple(np.flatnonzero(np.all((times - r) % depth <= ell, axis=1)) for r in range(depth))
    multiplicity = np.zeros(len(states), dtype=int)
    for block in blocks:
        multiplicity[block] += 1
    theta = int(multiplicity.max())
    _LOGGER.debug(f"Block decomposition of ell={ell} m={m}: {len(blocks)} blocks, theta={theta}")
    return Decomposition(blocks=blocks, theta=theta, states=states)


def window_cuts(ell: int, m: int, states: Sequence[Sequence[int]]) -> List[np.ndarray]:
    """ Half-cycle cuts S_r = {canonical window start within D/2 after r} """
    depth = ell * m
    starts = np.asarray([canonical_window(tau, depth)[0] for tau in states])
    cuts = list()
    for r in range(depth):
        cut = np.flatnonzero((starts - r) % depth < depth / 2)
        if 0 < len(cut) < len(states):
            cuts.append(cut)
    return cuts


def overlap_ratio(ell: int, j: int) -> Fraction:
    """ a_{ell-j}^(2^j) / a_ell """
    if not 1 <= j < ell:
        raise SpacetimeError(ErrorCodes.INDEX_OUT_OF_RANGE, f"j={j} outside [1, {ell})")
    return Fraction(count_bitonic(ell - j) ** (1 << j), count_bitonic(ell))


def overlap_trend(ell_max: int) -> List[Dict]:
    rows = list()
    for ell in range(2, ell_max + 1):
        ratio = overlap_ratio(ell, 1)
        rows.append({"rank": ell, "ratio": float(ratio), "exact": f"{ratio.numerator}/{ratio.denominator}",
                     "inverse_phi": 1 / PHI, "inverse_phi_squared": PHI ** -2})
    return rows


def gap_trend(ell_max: int, dense_limit: int = DEFAULT_DENSE_LIMIT) -> List[Dict]:
    rows = list()
    for ell in range(1, ell_max + 1):
        result = spectral_gap(toggle_chain(build_bitonic_block(ell)), dense_limit=dense_limit)
        rows.append({"rank": ell, "states": result.states, "gap": result.gap, "method": result.method})
    return rows


def aggregate_chain(chain: ReversibleChain, decomposition: Decomposition) -> ReversibleChain:
    """ P(i, j) = pi(Omega_i & Omega_j) / (theta pi(Omega_i)) off the diagonal, residual mass on it """
    covered = np.zeros(chain.size, dtype=bool)
    for block in decomposition.blocks:
        covered[block] = True
    if not covered.all():
        raise SpacetimeError(ErrorCodes.NON_COVERING_DECOMPOSITION,
                             f"{int((~covered).sum())} states are outside every block")
    pi = chain.stationary
    count = len(decomposition.blocks)
    membership = np.zeros((count, chain.size))
    for i, block in enumerate(decomposition.blocks):
        membership[i, block] = 1.0
    overlap = (membership * pi) @ membership.T
    masses = np.diag(overlap).copy()
    transition = overlap / (decomposition.theta * masses[:, None])
    np.fill_diagonal(transition, 0.0)
    np.fill_diagonal(transition, 1.0 - transition.sum(axis=1))
    return ReversibleChain(list(range(count)), transition, masses, name="aggregate")


def restricted_chain(chain: ReversibleChain, block: Sequence[int]) -> ReversibleChain:
    """ Moves leaving the block are rejected onto the diagonal """
    block = np.asarray(list(block), dtype=int)
    inner = chain.matrix[block][:, block].toarray()
    np.fill_diagonal(inner, 0.0)
    np.fill_diagonal(inner, 1.0 - inner.sum(axis=1))
    return ReversibleChain([chain.states[i] for i in block], inner, chain.stationary[block], name="restricted")


def madras_randall_bound(chain: ReversibleChain, decomposition: Decomposition,
                         dense_limit: int = DEFAULT_DENSE_LIMIT) -> DecompositionReport:
    gap = spectral_gap(chain, dense_limit).gap
    aggregate_gap = spectral_gap(aggregate_chain(chain, decomposition), dense_limit).gap
    min_restricted = min(spectral_gap(restricted_chain(chain, block), dense_limit).gap
                         for block in decomposition.blocks)
    bound = 0.5 * aggregate_gap * min_restricted
    conservative = aggregate_gap * min_restricted / decomposition.theta ** 2
    _LOGGER.info(f"Decomposition bound {bound:.3e} against gap {gap:.3e}")
    return DecompositionReport(gap=gap, aggregate_gap=aggregate_gap, min_restricted_gap=min_restricted,
                               theta=decomposition.theta, bound=bound, holds=bool(gap >= bound - 1e-12),
                               conservative_bound=conservative, conservative_holds=bool(gap >= conservative - 1e-12))


class MCMCResult(NamedTuple):
    kind: str
    rank: int
    steps: int
    seed: int
    accepted: int
    tv_distance: Optional[float]
    tau_int: float
    gap_estimate: float
    rows: List[Dict]
    final_state: Tuple[int, ...]


def integrated_autocorrelation(series: np.ndarray, window: float = SOKAL_WINDOW) -> float:
    """ Sokal's self-consistent window estimate of the integrated autocorrelation time """
    centred = np.asarray(series, dtype=float) - np.mean(series)
    size = len(centred)
    if size < 2 or not centred.any():
        return 1.0
    spectrum = np.fft.rfft(centred, n=2 * size)
    autocovariance = np.fft.irfft(spectrum * np.conj(spectrum))[:size]
    rho = autocovariance / autocovariance[0]
    tau = 1.0
    for lag in range(1, size):
        tau += 2.0 * rho[lag]
        if lag >= window * tau:
            break
    return max(tau, 1.0)


def _edge_flip_step(tau: List[int], ell: int, qubit: int, side: int) -> bool:
    # Flips the chosen side of the tile owned by qubit, the pair of tiles keeps its qubits
    s = tau[qubit]
    t = ell - s
    a = qubit >> t
    b = bit_reverse(qubit & ((1 << t) - 1), t)
    if side < 2:
        if t == 0:
            return False
        neighbour_b = b + 1 if side == 0 else b - 1
        if neighbour_b < 0 or neighbour_b >= 1 << t or min(b, neighbour_b) % 2:
            return False
        other = (a << t) | bit_reverse(neighbour_b, t)
        step = 1
    else:
        if s == 0:
            return False
        neighbour_a = a + 1 if side == 2 else a - 1
        if neighbour_a < 0 or neighbour_a >= 1 << s or min(a, neighbour_a) % 2:
            return False
        other = (neighbour_a << t) | bit_reverse(b, t)
        step = -1
    if tau[other] != s:
        return False
    tau[qubit] += step
    tau[other] += step
    return True


def mcmc_run(kind: str, ell: int, steps: int, seed: int = 0, record_every: int = 1000,
             tv_limit: int = 10 ** 5) -> MCMCResult:
    """ Seeded walk on B_ell configurations
    :param kind: "toggle" (uniform gate slot and direction) or "edge-flip" (uniform tile and side)
    :param ell: rank of the bitonic block
    :param steps: number of steps
    :param seed: numpy seed
    :param record_every: period of the CSV rows
    :param tv_limit: largest state count for which the distance to uniform is reported
    :return: MCMCResult
    """
    if kind not in ("toggle", "edge-flip"):
        raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown chain {kind}")
    n = 1 << ell
    arch = build_bitonic_block(ell)
    options = n * ell if kind == "toggle" else 4 * n
    rng = np.random.default_rng(seed)
    choices = rng.integers(options, size=steps)
    tau = [0] * n
    total = count_bitonic(ell)
    visits = dict() if total <= tv_limit else None
    observable = np.empty(steps)
    applied = 0
    accepted = 0
    rows = list()
    for step, choice in enumerate(choices):
        choice = int(choice)
        if kind == "toggle":
            slot, direction = divmod(choice, 2)
            layer, pair = divmod(slot, n // 2)
            p, q = arch.layers[layer][pair]
            target = layer if direction == 0 else layer + 1
            moved = tau[p - 1] == tau[q - 1] == target
            if moved:
                delta = 1 if direction == 0 else -1
                tau[p - 1] += delta
                tau[q - 1] += delta
                applied += delta
        else:
            qubit, side = divmod(choice, 4)
            before = tau[qubit]
            moved = _edge_flip_step(tau, ell, qubit, side)
            if moved:
                applied += tau[qubit] - before
        accepted += moved
        observable[step] = applied
        if visits is not None:
            key = tuple(tau)
            visits[key] = visits.get(key, 0) + 1
        if record_every and (step + 1) % record_every == 0:
            rows.append({"step": step + 1, "applied_gates": applied, "width": max(tau) - min(tau)})
    tv = None
    if visits is not None and steps:
        uniform = 1.0 / total
        tv = 0.5 * (sum(abs(count / steps - uniform) for count in visits.values()) + (total - len(visits)) * uniform)
    tau_int = integrated_autocorrelation(observable)
    _LOGGER.info(f"{kind} walk ell={ell}: {accepted}/{steps} accepted, tau_int={tau_int:.2f}")
    return MCMCResult(kind=kind, rank=ell, steps=steps, seed=seed, accepted=accepted, tv_distance=tv,
                      tau_int=tau_int, gap_estimate=2.0 / (1.0 + tau_int), rows=rows, final_state=tuple(tau))
