"""
Valid partial configurations of architectures.
A configuration gives each qubit the number of its layers already applied: 0..D for linear
architectures, a residue mod D for circular ones.
"""
import collections
import functools
import logging
import math
import random
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

from .architecture import Architecture, rotl
from .error_codes import CapExceededError, ErrorCodes, SpacetimeError
from .logger_formatter import DEFAULT_LOGGER_NAME

Configuration = Tuple[int, ...]

# Default maximal number of states that an enumeration may visit
DEFAULT_STATE_CAP = 10 ** 6

_LOGGER = logging.getLogger(f"{DEFAULT_LOGGER_NAME}.{__name__}")


class MoveDirection(Enum):
    APPLY = "apply"
    UNAPPLY = "unapply"

    def __str__(self) -> str:
        return self.value


class Move(NamedTuple):
    # 1-based layer of the gate slot
    layer: int
    pair: Tuple[int, int]
    direction: MoveDirection


def _check_length(arch: Architecture, tau: Sequence[int]) -> None:
    if len(tau) != arch.n:
        raise SpacetimeError(ErrorCodes.LENGTH_MISMATCH, f"configuration of length {len(tau)} for {arch.n} qubits")


def _linear_violation(arch: Architecture, tau: Sequence[int]) -> bool:
    # A slot at depth d is violated iff min < d <= max for its two qubits
    for d, layer in enumerate(arch.layers, start=1):
        for p, q in layer:
            low, high = sorted((tau[p - 1], tau[q - 1]))
            if low < d <= high:
                return True
    return False


def _circular_lift_valid(arch: Architecture, lifted: Sequence[int]) -> bool:
    depth = arch.depth
    for c0, layer in enumerate(arch.layers):
        for p, q in layer:
            low, high = sorted((lifted[p - 1], lifted[q - 1]))
            if high - low >= depth or (high > low and (c0 - low) % depth <= high - low - 1):
                return False
    return True


def is_valid(arch: Architecture, tau: Sequence[int]) -> bool:
    """ Causal validity of a configuration.
    The circular case tries the lifts that start at one of the present residues; a valid
    configuration of a connected architecture always has such a lift.
    """
    _check_length(arch, tau)
    depth = arch.depth
    if arch.circular:
        if any(not 0 <= t < depth for t in tau):
            return False
        for start in sorted(set(tau)):
            lifted = [start + (t - start) % depth for t in tau]
            if _circular_lift_valid(arch, lifted):
                return True
        return False
    if any(not 0 <= t <= depth for t in tau):
        return False
    return not _linear_violation(arch, tau)


def apply_move(arch: Architecture, tau: Sequence[int], move: Move) -> Configuration:
    step = 1 if move.direction == MoveDirection.APPLY else -1
    new = list(tau)
    for qubit in move.pair:
        new[qubit - 1] += step
        if arch.circular:
            new[qubit - 1] %= arch.depth
    return tuple(new)


def _raw_moves(arch: Architecture, tau: Sequence[int]) -> List[Move]:
    depth = arch.depth
    partners = arch.partner_table
    moves = set()
    for q0, t in enumerate(tau):
        # Apply the gate waiting in layer t + 1
        if arch.circular or t < depth:
            c0 = t % depth
            r0 = int(partners[c0, q0])
            if tau[r0] == t:
                moves.add(Move(c0 + 1, (min(q0, r0) + 1, max(q0, r0) + 1), MoveDirection.APPLY))
        # Unapply the last applied gate
        if arch.circular or t > 0:
            c0 = (t - 1) % depth
            r0 = int(partners[c0, q0])
            if tau[r0] == t:
                moves.add(Move(c0 + 1, (min(q0, r0) + 1, max(q0, r0) + 1), MoveDirection.UNAPPLY))
    return sorted(moves, key=lambda move: (move.layer, move.pair, move.direction.value))


def _neighbours(arch: Architecture, tau: Configuration) -> List[Tuple[Move, Configuration]]:
    result = list()
    for move in _raw_moves(arch, tau):
        new = apply_move(arch, tau, move)
        if new == tau:
            continue
        # Linear toggles of a valid configuration are always valid
        if arch.circular and not is_valid(arch, new):
            continue
        result.append((move, new))
    return result


def available_moves(arch: Architecture, tau: Sequence[int]) -> List[Move]:
    """ Single gate toggles that keep the configuration valid
    :param arch: architecture
    :param tau: valid configuration
    :return: sorted list of moves
    """
    tau = tuple(tau)
    if not is_valid(arch, tau):
        raise SpacetimeError(ErrorCodes.INVALID_CONFIGURATION, f"{tau} is not valid")
    return [move for move, _ in _neighbours(arch, tau)]


def enumerate_valid(arch: Architecture, cap: int = DEFAULT_STATE_CAP) -> List[Configuration]:
    """ Breadth-first search over the toggle moves from the all-zero configuration
    :param arch: architecture
    :param cap: maximal number of states
    :return: sorted list of all valid configurations
    """
    start = tuple([0] * arch.n)
    seen = {start}
    queue = collections.deque([start])
    while queue:
        tau = queue.popleft()
        for _, new in _neighbours(arch, tau):
            if new not in seen:
                seen.add(new)
                if len(seen) > cap:
                    raise CapExceededError(cap, f"{arch} has more than {cap} valid configurations")
                queue.append(new)
    _LOGGER.debug(f"Enumerated {len(seen)} configurations of {arch}")
    return sorted(seen)


@functools.lru_cache(maxsize=None)
def count_bitonic(ell: int) -> int:
    """ a_ell = 2 a_{ell-1}^2 - a_{ell-2}^4 with a_0 = 1 and a_1 = 2 """
    if ell < 0:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} < 0")
    values = [1, 2]
    for _ in range(2, ell + 1):
        values.append(2 * values[-1] ** 2 - values[-2] ** 4)
    return values[ell]


def v_count(ell: int) -> int:
    """ Configurations of B_ell whose first layer is fully applied """
    return count_bitonic(ell - 1) ** 2 if ell >= 1 else 0


def count_first_layer_incomplete(ell: int) -> int:
    if ell < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} < 1")
    return count_bitonic(ell) - count_bitonic(ell - 1) ** 2


def count_product(ell: int, m: int) -> int:
    if ell < 1 or m < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} and repetitions {m} must be >= 1")
    shifts = (m - 1) * ell
    return (shifts + 1) * count_bitonic(ell) - shifts * count_bitonic(ell - 1) ** 2


def circular_count_verified(m: int) -> bool:
    """ The closed form for circular products is only established for m >= 2 """
    return m >= 2


def count_circular(ell: int, m: int) -> int:
    if ell < 1 or m < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} and repetitions {m} must be >= 1")
    if not circular_count_verified(m):
        _LOGGER.warning(f"Circular count for ell={ell} m={m} is outside the established range m >= 2")
    return count_first_layer_incomplete(ell) * m * ell


def count_qubit_at_zero(ell: int, m: int, mode: str = "linear") -> int:
    """ Number of valid configurations where a fixed qubit has time 0 """
    if ell < 1 or m < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} and repetitions {m} must be >= 1")
    if mode == "linear":
        product = 1
        for j in range(1, ell):
            product *= count_bitonic(j)
        return product
    if mode == "circular":
        return count_first_layer_incomplete(ell)
    raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, f"unknown mode {mode}")


def count_architecture(arch: Architecture) -> int:
    """ Closed-form count for the bitonic families """
    if arch.family == "bitonic":
        return count_bitonic(arch.block_rank)
    if arch.family == "product":
        return count_product(arch.block_rank, arch.repetitions)
    if arch.family == "circular":
        return count_circular(arch.block_rank, arch.repetitions)
    raise SpacetimeError(ErrorCodes.UNSUPPORTED_ARCHITECTURE, f"no closed form for {arch}")


def rank_block(ell: int, tau: Sequence[int]) -> int:
    """ Index of a valid configuration of B_ell.
    v-configurations (first layer applied) come first and are ranked by their two halves,
    the others are ranked by their even and odd sub-blocks.
    """
    if ell == 0:
        return 0
    a_prev = count_bitonic(ell - 1)
    v_prev = v_count(ell - 1)
    if min(tau) >= 1:
        half = 1 << (ell - 1)
        top = tuple(t - 1 for t in tau[:half])
        bottom = tuple(t - 1 for t in tau[half:])
        return rank_block(ell - 1, top) * a_prev + rank_block(ell - 1, bottom)
    x = rank_block(ell - 1, tuple(tau[0::2]))
    y = rank_block(ell - 1, tuple(tau[1::2]))
    h_only = a_prev - v_prev
    if x >= v_prev and y >= v_prev:
        index = (x - v_prev) * h_only + (y - v_prev)
    elif x < v_prev:
        index = h_only ** 2 + x * h_only + (y - v_prev)
    else:
        index = h_only ** 2 + v_prev * h_only + (x - v_prev) * v_prev + y
    return a_prev ** 2 + index


@functools.lru_cache(maxsize=1 << 16)
def unrank_block(ell: int, index: int) -> Configuration:
    if ell == 0:
        return (0,)
    a_prev = count_bitonic(ell - 1)
    v_prev = v_count(ell - 1)
    if index < a_prev ** 2:
        top, bottom = divmod(index, a_prev)
        return tuple(t + 1 for t in unrank_block(ell - 1, top) + unrank_block(ell - 1, bottom))
    j = index - a_prev ** 2
    h_only = a_prev - v_prev
    if j < h_only ** 2:
        u, w = divmod(j, h_only)
        x, y = v_prev + u, v_prev + w
    elif j < h_only ** 2 + v_prev * h_only:
        u, w = divmod(j - h_only ** 2, h_only)
        x, y = u, v_prev + w
    else:
        u, w = divmod(j - h_only ** 2 - v_prev * h_only, v_prev)
        x, y = v_prev + u, w
    even, odd = unrank_block(ell - 1, x), unrank_block(ell - 1, y)
    tau = [0] * (1 << ell)
    tau[0::2], tau[1::2] = even, odd
    return tuple(tau)


def canonical_window(tau: Sequence[int], depth: int) -> Tuple[int, int]:
    """ Start of the smallest cyclic window holding every time and its width
    :return: (residue following the largest cyclic gap, depth - largest gap)
    """
    residues = sorted(set(t % depth for t in tau))
    best_gap, start = -1, residues[0]
    for i, r in enumerate(residues):
        following = residues[(i + 1) % len(residues)]
        gap = (following - r) % depth or depth
        if gap > best_gap:
            best_gap, start = gap, following
    return start, depth - best_gap


def width(tau: Sequence[int], circular_depth: Optional[int] = None) -> int:
    if circular_depth is None:
        return max(tau) - min(tau)
    return canonical_window(tau, circular_depth)[1]


def _require_bitonic(arch: Architecture) -> Tuple[int, int]:
    if arch.block_rank is None:
        raise SpacetimeError(ErrorCodes.UNSUPPORTED_ARCHITECTURE, f"{arch} is not a bitonic family")
    if arch.circular and arch.repetitions < 2:
        raise SpacetimeError(ErrorCodes.UNSUPPORTED_ARCHITECTURE, "circular ranking needs m >= 2")
    return arch.block_rank, arch.repetitions


def _relative(tau: Sequence[int], start: int, ell: int, depth: Optional[int]) -> Configuration:
    # tau'[rotl^j(q)] = tau[q] - start with j = start mod ell
    relative = [0] * len(tau)
    for q, t in enumerate(tau):
        relative[rotl(q, ell, start % ell)] = (t - start) % depth if depth else t - start
    return tuple(relative)


def _absolute(relative: Sequence[int], start: int, ell: int, depth: Optional[int]) -> Configuration:
    tau = [0] * len(relative)
    for q in range(len(relative)):
        t = relative[rotl(q, ell, start % ell)] + start
        tau[q] = t % depth if depth else t
    return tuple(tau)


def rank(arch: Architecture, tau: Sequence[int]) -> int:
    """ Index of a valid configuration of a bitonic block, product or circular product.
    Products and circulars are partitioned by the window identified with each configuration.
    """
    ell, m = _require_bitonic(arch)
    tau = tuple(tau)
    if not is_valid(arch, tau):
        raise SpacetimeError(ErrorCodes.INVALID_CONFIGURATION, f"{tau} is not valid for {arch}")
    a_ell = count_bitonic(ell)
    v_ell = v_count(ell)
    if arch.circular:
        start, _ = canonical_window(tau, arch.depth)
        return start * (a_ell - v_ell) + rank_block(ell, _relative(tau, start, ell, arch.depth)) - v_ell
    last = (m - 1) * ell
    start = min(min(tau), last)
    relative_rank = rank_block(ell, _relative(tau, start, ell, None))
    if start < last:
        return start * (a_ell - v_ell) + relative_rank - v_ell
    return last * (a_ell - v_ell) + relative_rank


def unrank(arch: Architecture, index: int) -> Configuration:
    ell, m = _require_bitonic(arch)
    total = count_architecture(arch)
    if not 0 <= index < total:
        raise SpacetimeError(ErrorCodes.INDEX_OUT_OF_RANGE, f"index {index} outside [0, {total})")
    a_ell = count_bitonic(ell)
    v_ell = v_count(ell)
    if arch.circular:
        start, offset = divmod(index, a_ell - v_ell)
        return _absolute(unrank_block(ell, offset + v_ell), start, ell, arch.depth)
    last = (m - 1) * ell
    if index < last * (a_ell - v_ell):
        start, offset = divmod(index, a_ell - v_ell)
        return _absolute(unrank_block(ell, offset + v_ell), start, ell, None)
    return _absolute(unrank_block(ell, index - last * (a_ell - v_ell)), last, ell, None)


def sample_uniform(arch: Architecture, seed: Optional[Union[int, random.Random]] = None) -> Configuration:
    """ Unrank a uniform index, big counts are handled by random.Random.randrange """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return unrank(arch, rng.randrange(count_architecture(arch)))


def growth_constant_estimate(ell: int, phi: float = (1 + 5 ** 0.5) / 2) -> float:
    """ (a_ell * phi)^(1 / 2^ell), it converges to the doubly exponential growth rate """
    return math.exp((math.log(count_bitonic(ell)) + math.log(phi)) / (1 << ell))
