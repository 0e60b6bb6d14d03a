"""
Equal-area dyadic tilings of the unit square, HV-trees and their isomorphism with the
valid configurations of bitonic blocks.
Coordinates are exact: segments are stored in integer units of 2^-rank.
"""
import json
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .configurations import Configuration
from .error_codes import ErrorCodes, SpacetimeError
from .logger_formatter import DEFAULT_LOGGER_NAME

_LOGGER = logging.getLogger(f"{DEFAULT_LOGGER_NAME}.{__name__}")

# Sides of a rectangle, in the order used by the edge-flip chain
SIDES = ("up", "down", "right", "left")


def bit_reverse(value: int, bits: int) -> int:
    result = 0
    for _ in range(bits):
        result = (result << 1) | (value & 1)
        value >>= 1
    return result


class DyadicRectangle(NamedTuple):
    """ [a 2^-s, (a+1) 2^-s] x [b 2^-t, (b+1) 2^-t] """
    a: int
    b: int
    s: int
    t: int

    @property
    def area(self) -> Fraction:
        return Fraction(1, 1 << (self.s + self.t))

    def x_range(self, rank: int) -> Tuple[int, int]:
        unit = 1 << (rank - self.s)
        return self.a * unit, (self.a + 1) * unit

    def y_range(self, rank: int) -> Tuple[int, int]:
        unit = 1 << (rank - self.t)
        return self.b * unit, (self.b + 1) * unit


class Segment(NamedTuple):
    # "H" for a horizontal cut, "V" for a vertical one
    orientation: str
    # Coordinate of the cut and the extent along it, in units of 2^-rank
    fixed: int
    start: int
    end: int
    rank: int

    @property
    def midpoint(self) -> Tuple[Fraction, Fraction]:
        scale = 1 << self.rank
        along = Fraction(self.start + self.end, 2 * scale)
        across = Fraction(self.fixed, scale)
        return (along, across) if self.orientation == "H" else (across, along)


class DyadicTiling:
    """ 2^rank equal-area dyadic rectangles, kept sorted """

    def __init__(self, rank: int, rectangles: Iterable[Sequence[int]]):
        self.__rank = rank
        self.__rectangles = tuple(sorted(DyadicRectangle(*map(int, r)) for r in rectangles))

    @property
    def rank(self) -> int:
        return self.__rank

    @property
    def rectangles(self) -> Tuple[DyadicRectangle, ...]:
        return self.__rectangles

    def __eq__(self, other) -> bool:
        return isinstance(other, DyadicTiling) and (self.__rank, self.__rectangles) == (other.rank, other.rectangles)

    def __hash__(self) -> int:
        return hash((self.__rank, self.__rectangles))

    def __repr__(self) -> str:
        return f"DyadicTiling(rank={self.__rank}, rectangles={list(map(tuple, self.__rectangles))})"


class HVTree(NamedTuple):
    """ Complete binary tree of cut labels in heap order, 2^rank - 1 labels """
    rank: int
    labels: str

    def children(self, index: int) -> Tuple[int, int]:
        return 2 * index + 1, 2 * index + 2

    def is_internal(self, index: int) -> bool:
        return index < len(self.labels)


def check_hvtree(tree: HVTree) -> None:
    if len(tree.labels) != (1 << tree.rank) - 1 or set(tree.labels) - {"H", "V"}:
        raise SpacetimeError(ErrorCodes.INVALID_HVTREE, f"{tree} is not a complete H/V labeled tree")
    for index, label in enumerate(tree.labels):
        left, right = tree.children(index)
        if label == "H" and tree.is_internal(left) and tree.labels[left] == "V" and tree.labels[right] == "V":
            raise SpacetimeError(ErrorCodes.INVALID_HVTREE, f"H node {index} has two V children")


def all_horizontal(rank: int) -> DyadicTiling:
    """ The tiling of 2^rank stacked strips """
    return DyadicTiling(rank, [(0, b, 0, rank) for b in range(1 << rank)])


def config_to_tiling(ell: int, tau: Sequence[int]) -> DyadicTiling:
    """ Qubit q with time s owns the tile (q >> (ell - s), bitrev(q mod 2^(ell - s)), s, ell - s) """
    if len(tau) != 1 << ell:
        raise SpacetimeError(ErrorCodes.LENGTH_MISMATCH, f"configuration of length {len(tau)} for rank {ell}")
    rectangles = list()
    for q, s in enumerate(tau):
        t = ell - s
        rectangles.append((q >> t, bit_reverse(q & ((1 << t) - 1), t), s, t))
    return DyadicTiling(ell, rectangles)


def _tiling_to_raw_config(tiling: DyadicTiling) -> Configuration:
    tau = [0] * (1 << tiling.rank)
    for a, b, s, t in tiling.rectangles:
        tau[(a << t) | bit_reverse(b, t)] = s
    return tuple(tau)


def config_to_hvtree(ell: int, tau: Sequence[int]) -> HVTree:
    """ Root V for v-configurations (top and bottom halves one layer later), H otherwise (even and odd qubits) """
    if len(tau) != 1 << ell:
        raise SpacetimeError(ErrorCodes.LENGTH_MISMATCH, f"configuration of length {len(tau)} for rank {ell}")
    levels = [[tuple(tau)]]
    labels = list()
    for depth in range(ell):
        following = list()
        for node in levels[depth]:
            if min(node) >= 1:
                half = len(node) // 2
                labels.append("V")
                following.extend([tuple(t - 1 for t in node[:half]), tuple(t - 1 for t in node[half:])])
            else:
                if max(node) >= len(node).bit_length() - 1 and len(node) > 1:
                    raise SpacetimeError(ErrorCodes.INVALID_CONFIGURATION, f"{tuple(tau)} is not valid")
                labels.append("H")
                following.extend([node[0::2], node[1::2]])
        levels.append(following)
    if any(leaf != (0,) for leaf in levels[ell]):
        raise SpacetimeError(ErrorCodes.INVALID_CONFIGURATION, f"{tuple(tau)} is not valid")
    tree = HVTree(ell, "".join(labels))
    check_hvtree(tree)
    return tree


def hvtree_to_config(tree: HVTree) -> Configuration:
    check_hvtree(tree)

    def build(index: int, rank: int) -> Configuration:
        if rank == 0:
            return (0,)
        left, right = tree.children(index)
        first, second = build(left, rank - 1), build(right, rank - 1)
        if tree.labels[index] == "V":
            return tuple(t + 1 for t in first + second)
        merged = [0] * (1 << rank)
        merged[0::2], merged[1::2] = first, second
        return tuple(merged)

    return build(0, tree.rank)


def hvtree_to_tiling(tree: HVTree) -> DyadicTiling:
    """ Draw the bisector of every region, V splits the x range, H the y range """
    check_hvtree(tree)
    rectangles = list()
    stack = [(0, DyadicRectangle(0, 0, 0, 0))]
    while stack:
        index, region = stack.pop()
        if not tree.is_internal(index):
            rectangles.append(region)
            continue
        left, right = tree.children(index)
        a, b, s, t = region
        if tree.labels[index] == "V":
            stack.extend([(left, DyadicRectangle(2 * a, b, s + 1, t)), (right, DyadicRectangle(2 * a + 1, b, s + 1, t))])
        else:
            stack.extend([(left, DyadicRectangle(a, 2 * b, s, t + 1)), (right, DyadicRectangle(a, 2 * b + 1, s, t + 1))])
    return DyadicTiling(tree.rank, rectangles)


def _inside(rect: DyadicRectangle, region: DyadicRectangle) -> bool:
    return (rect.s >= region.s and rect.t >= region.t and rect.a >> (rect.s - region.s) == region.a
            and rect.b >> (rect.t - region.t) == region.b)


def tiling_to_hvtree(tiling: DyadicTiling) -> HVTree:
    """ Recover the cuts region by region, a V cut is chosen when both cuts exist """
    if not is_valid_tiling(tiling):
        raise SpacetimeError(ErrorCodes.INVALID_TILING, f"{tiling} is not an equal-area dyadic tiling")
    labels = ["H"] * ((1 << tiling.rank) - 1)
    stack = [(0, DyadicRectangle(0, 0, 0, 0), tiling.rectangles)]
    while stack:
        index, region, members = stack.pop()
        if index >= len(labels):
            continue
        a, b, s, t = region
        if all(rect.s > s for rect in members):
            labels[index] = "V"
            children = (DyadicRectangle(2 * a, b, s + 1, t), DyadicRectangle(2 * a + 1, b, s + 1, t))
        elif all(rect.t > t for rect in members):
            children = (DyadicRectangle(a, 2 * b, s, t + 1), DyadicRectangle(a, 2 * b + 1, s, t + 1))
        else:
            raise SpacetimeError(ErrorCodes.INVALID_TILING, f"region {tuple(region)} has no bisecting cut")
        for child_index, child in zip((2 * index + 1, 2 * index + 2), children):
            stack.append((child_index, child, tuple(rect for rect in members if _inside(rect, child))))
    tree = HVTree(tiling.rank, "".join(labels))
    check_hvtree(tree)
    return tree


def tiling_to_config(tiling: DyadicTiling) -> Configuration:
    return hvtree_to_config(tiling_to_hvtree(tiling))


def is_valid_tiling(tiling: DyadicTiling) -> bool:
    """ Exact check: 2^rank dyadic tiles of area 2^-rank, pairwise disjoint, total area 1 """
    rank, rectangles = tiling.rank, tiling.rectangles
    if len(rectangles) != 1 << rank:
        return False
    for a, b, s, t in rectangles:
        if min(a, b, s, t) < 0 or s + t != rank or a >= 1 << s or b >= 1 << t:
            return False
    if sum((rect.area for rect in rectangles), Fraction(0)) != 1:
        return False
    for i, first in enumerate(rectangles):
        x0, x1 = first.x_range(rank)
        y0, y1 = first.y_range(rank)
        for second in rectangles[i + 1:]:
            u0, u1 = second.x_range(rank)
            v0, v1 = second.y_range(rank)
            if x0 < u1 and u0 < x1 and y0 < v1 and v0 < y1:
                return False
    return True


def _flip_pairs(tiling: DyadicTiling) -> Dict[Segment, Tuple[Tuple[DyadicRectangle, ...], Tuple[DyadicRectangle, ...]]]:
    # Flippable edge -> (tiles it separates, tiles after the flip)
    rank = tiling.rank
    present = set(tiling.rectangles)
    pairs = dict()
    for rect in tiling.rectangles:
        a, b, s, t = rect
        if b % 2 == 0 and (a, b + 1, s, t) in present:
            above = DyadicRectangle(a, b + 1, s, t)
            x0, x1 = rect.x_range(rank)
            segment = Segment("H", rect.y_range(rank)[1], x0, x1, rank)
            pairs[segment] = ((rect, above), (DyadicRectangle(2 * a, b // 2, s + 1, t - 1),
                                              DyadicRectangle(2 * a + 1, b // 2, s + 1, t - 1)))
        if a % 2 == 0 and (a + 1, b, s, t) in present:
            right = DyadicRectangle(a + 1, b, s, t)
            y0, y1 = rect.y_range(rank)
            segment = Segment("V", rect.x_range(rank)[1], y0, y1, rank)
            pairs[segment] = ((rect, right), (DyadicRectangle(a // 2, 2 * b, s - 1, t + 1),
                                              DyadicRectangle(a // 2, 2 * b + 1, s - 1, t + 1)))
    return pairs


def flippable_edges(tiling: DyadicTiling) -> List[Segment]:
    """ Segments forming an entire edge of both tiles they border whose rotation stays dyadic """
    return sorted(_flip_pairs(tiling))


def flip_edge(tiling: DyadicTiling, segment: Segment) -> DyadicTiling:
    pairs = _flip_pairs(tiling)
    if segment not in pairs:
        raise SpacetimeError(ErrorCodes.REJECTED_FLIP, f"{segment} is not flippable")
    removed, added = pairs[segment]
    return DyadicTiling(tiling.rank, [r for r in tiling.rectangles if r not in removed] + list(added))


def segment_at(tiling: DyadicTiling, midpoint: Tuple[Fraction, Fraction]) -> Optional[Segment]:
    """ Flippable edge of the tiling centred at a point, None when there is none """
    for segment in _flip_pairs(tiling):
        if segment.midpoint == tuple(midpoint):
            return segment
    return None


def flippable_sides(tiling: DyadicTiling, rect: DyadicRectangle) -> Dict[str, Segment]:
    """ Sides of a tile that are flippable edges of the tiling """
    rank = tiling.rank
    x0, x1 = rect.x_range(rank)
    y0, y1 = rect.y_range(rank)
    sides = {"up": Segment("H", y1, x0, x1, rank), "down": Segment("H", y0, x0, x1, rank),
             "right": Segment("V", x1, y0, y1, rank), "left": Segment("V", x0, y0, y1, rank)}
    pairs = _flip_pairs(tiling)
    return {side: segment for side, segment in sides.items() if segment in pairs}


def segment_gate_map(ell: int) -> Dict[Tuple[int, Tuple[int, int]], Segment]:
    """ c-segments of the all-horizontal tiling keyed by their gate slot (1-based layer, 1-based pair).
    The gate of layer c on qubit q (bit ell - c clear) owns the horizontal segment of width
    2^-(c-1) centred at ((a + 1/2) 2^-(c-1), (b + 1) 2^-(ell-c+1)).
    """
    if ell < 1:
        raise SpacetimeError(ErrorCodes.INVALID_RANK, f"rank {ell} < 1")
    mapping = dict()
    for c in range(1, ell + 1):
        low_bits = ell - c + 1
        bit = 1 << (ell - c)
        for q in range(1 << ell):
            if q & bit:
                continue
            a = q >> low_bits
            b = bit_reverse(q & ((1 << low_bits) - 1), low_bits)
            mapping[(c, (q + 1, (q | bit) + 1))] = Segment("H", (b + 1) << (c - 1), a << low_bits,
                                                           (a + 1) << low_bits, ell)
    return mapping


def tiling_to_json(tiling: DyadicTiling) -> str:
    return json.dumps({"rank": tiling.rank, "rectangles": [list(rect) for rect in tiling.rectangles]})


def tiling_from_json(text: str) -> DyadicTiling:
    data = json.loads(text)
    return DyadicTiling(int(data["rank"]), data["rectangles"])


def tiling_to_svg(tiling: DyadicTiling, size: int = 256, highlight: Iterable[Segment] = ()) -> str:
    """ Render a tiling as a standalone SVG document, y grows upwards """
    scale = Fraction(size, 1 << tiling.rank)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for rect in tiling.rectangles:
        x0, x1 = rect.x_range(tiling.rank)
        y0, y1 = rect.y_range(tiling.rank)
        parts.append(f'<rect x="{float(x0 * scale):g}" y="{float(size - y1 * scale):g}" '
                     f'width="{float((x1 - x0) * scale):g}" height="{float((y1 - y0) * scale):g}" '
                     f'fill="white" stroke="black" stroke-width="1"/>')
    for segment in highlight:
        if segment.orientation == "H":
            x0, x1, y0, y1 = segment.start, segment.end, segment.fixed, segment.fixed
        else:
            x0, x1, y0, y1 = segment.fixed, segment.fixed, segment.start, segment.end
        parts.append(f'<line x1="{float(x0 * scale):g}" y1="{float(size - y0 * scale):g}" '
                     f'x2="{float(x1 * scale):g}" y2="{float(size - y1 * scale):g}" stroke="red" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts)
