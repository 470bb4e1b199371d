"""Geometry of lattice boxes: crossings, isometries, Markov configurations.

A box is an axis-aligned rectangle of lattice cells given by its lower-left
and upper-right corners.  The first coordinate is the column (x, growing
right), the second the row (y, growing up); up-right paths take +x or +y unit
steps.  The ordered crossing relations on boxes drive every invariance
statement in the package, so the predicates here are deliberately small and
heavily tested.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import HypothesesViolated, PreconditionViolated

Point = tuple[int, int]


def points_searrow(a: Point, b: Point) -> bool:
    """a is weakly left of and weakly above b."""
    return a[0] <= b[0] and a[1] >= b[1]


def points_nearrow(a: Point, b: Point) -> bool:
    """a is weakly left of and weakly below b."""
    return a[0] <= b[0] and a[1] <= b[1]


@dataclass(frozen=True, order=True)
class Box:
    """Lattice rectangle [x0, x1] x [y0, y1], corners inclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise PreconditionViolated(f"corners not ordered: {self!r}")

    @property
    def lo(self) -> Point:
        return (self.x0, self.y0)

    @property
    def hi(self) -> Point:
        return (self.x1, self.y1)

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def cells(self) -> Iterable[Point]:
        for y in range(self.y0, self.y1 + 1):
            for x in range(self.x0, self.x1 + 1):
                yield (x, y)

    def contains_cell(self, cell: Point) -> bool:
        return self.x0 <= cell[0] <= self.x1 and self.y0 <= cell[1] <= self.y1

    def contains_box(self, other: "Box") -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def intersects(self, other: "Box") -> bool:
        return (self.x0 <= other.x1 and other.x0 <= self.x1
                and self.y0 <= other.y1 and other.y0 <= self.y1)

    def intersection(self, other: "Box") -> "Box | None":
        if not self.intersects(other):
            return None
        return Box(max(self.x0, other.x0), max(self.y0, other.y0),
                   min(self.x1, other.x1), min(self.y1, other.y1))

    def translate(self, c: Point) -> "Box":
        return Box(self.x0 + c[0], self.y0 + c[1], self.x1 + c[0], self.y1 + c[1])

    def transpose(self) -> "Box":
        """Swap the two coordinates of both corners."""
        return Box(self.y0, self.x0, self.y1, self.x1)

    def negate(self) -> "Box":
        """Map through the origin; corners swap roles."""
        return Box(-self.x1, -self.y1, -self.x0, -self.y0)

    def to_json(self) -> list[int]:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def from_json(cls, data: Sequence[int]) -> "Box":
        if len(data) != 4:
            raise PreconditionViolated(f"box needs 4 integers, got {data!r}")
        return cls(int(data[0]), int(data[1]), int(data[2]), int(data[3]))


def bounding_box(boxes: Iterable[Box]) -> Box | None:
    boxes = list(boxes)
    if not boxes:
        return None
    return Box(min(b.x0 for b in boxes), min(b.y0 for b in boxes),
               max(b.x1 for b in boxes), max(b.y1 for b in boxes))


def cells_of(boxes: Iterable[Box]) -> frozenset[Point]:
    out: set[Point] = set()
    for b in boxes:
        out.update(b.cells())
    return frozenset(out)


# ---------------------------------------------------------------------------
# Crossing relations
# ---------------------------------------------------------------------------

class CrossingKind(enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    DISJOINT = "disjoint"
    OVERLAP = "overlap"


@dataclass(frozen=True)
class Crossing:
    """Full crossing classification of an ordered box pair.

    ``horizontal`` and ``vertical`` can both be true only for equal boxes,
    which is why both flags are kept instead of a single kind.
    """

    horizontal: bool
    vertical: bool
    disjoint: bool

    @property
    def kind(self) -> CrossingKind:
        if self.horizontal:
            return CrossingKind.HORIZONTAL
        if self.vertical:
            return CrossingKind.VERTICAL
        if self.disjoint:
            return CrossingKind.DISJOINT
        return CrossingKind.OVERLAP


def crosses_horizontally(u: Box, v: Box) -> bool:
    """Every corner-to-corner path of u traverses v from left to right."""
    return points_searrow(u.lo, v.lo) and points_searrow(v.hi, u.hi)


def crosses_vertically(u: Box, v: Box) -> bool:
    """Every corner-to-corner path of u traverses v from bottom to top."""
    return points_searrow(v.lo, u.lo) and points_searrow(u.hi, v.hi)


def are_disjoint(u: Box, v: Box) -> bool:
    return not u.intersects(v)


def classify(u: Box, v: Box) -> Crossing:
    return Crossing(
        horizontal=crosses_horizontally(u, v),
        vertical=crosses_vertically(u, v),
        disjoint=are_disjoint(u, v),
    )


def in_h_or_n(u: Box, v: Box) -> bool:
    return crosses_horizontally(u, v) or are_disjoint(u, v)


def in_v_or_n(u: Box, v: Box) -> bool:
    return crosses_vertically(u, v) or are_disjoint(u, v)


# ---------------------------------------------------------------------------
# Isometries
# ---------------------------------------------------------------------------

class IsometryKind(enum.Enum):
    TRANSLATE = "translate"
    SWAP_AXES = "swap-axes"
    POINT_REFLECT = "point-reflect"


def apply_isometry(u: Box, kind: IsometryKind, c: Point = (0, 0)) -> Box:
    if kind is IsometryKind.TRANSLATE:
        return u.translate(c)
    if kind is IsometryKind.SWAP_AXES:
        return u.transpose()
    if kind is IsometryKind.POINT_REFLECT:
        return u.negate()
    raise PreconditionViolated(f"unknown isometry {kind!r}")


# ---------------------------------------------------------------------------
# Piecewise translations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TranslationBlock:
    boxes: frozenset[Box]
    offset: Point

    def image(self) -> frozenset[Box]:
        return frozenset(b.translate(self.offset) for b in self.boxes)


@dataclass(frozen=True)
class PiecewiseTranslation:
    """Injective map between finite box sets, a translation on each block."""

    blocks: tuple[TranslationBlock, ...]

    def __post_init__(self):
        seen: set[Box] = set()
        for blk in self.blocks:
            if seen & blk.boxes:
                raise PreconditionViolated("blocks share a domain box")
            seen.update(blk.boxes)
        images = [b.translate(blk.offset) for blk in self.blocks for b in blk.boxes]
        if len(set(images)) != len(images):
            raise PreconditionViolated("piecewise translation is not injective")

    def domain(self) -> frozenset[Box]:
        return frozenset(b for blk in self.blocks for b in blk.boxes)

    def image(self) -> frozenset[Box]:
        return frozenset(b.translate(blk.offset) for blk in self.blocks for b in blk.boxes)

    def apply(self, u: Box) -> Box:
        for blk in self.blocks:
            if u in blk.boxes:
                return u.translate(blk.offset)
        raise PreconditionViolated(f"{u!r} is not in the domain")

    def mapping(self) -> Mapping[Box, Box]:
        return {b: b.translate(blk.offset) for blk in self.blocks for b in blk.boxes}

    def to_json(self) -> list[dict]:
        return [{"boxes": sorted(b.to_json() for b in blk.boxes), "offset": list(blk.offset)}
                for blk in self.blocks]

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "PiecewiseTranslation":
        blocks = []
        for item in data:
            boxes = frozenset(Box.from_json(b) for b in item["boxes"])
            dx, dy = item["offset"]
            blocks.append(TranslationBlock(boxes, (int(dx), int(dy))))
        return cls(tuple(blocks))


def preserves_crossings(f: PiecewiseTranslation) -> tuple[bool, bool]:
    """Whether f preserves the horizontal-crossing and disjointness relations.

    Returns (horizontal_ok, disjoint_ok), quantified over ordered pairs of
    domain boxes.
    """
    fm = f.mapping()
    horizontal_ok = True
    disjoint_ok = True
    for u, v in itertools.permutations(fm, 2):
        fu, fv = fm[u], fm[v]
        if crosses_horizontally(u, v) != crosses_horizontally(fu, fv):
            horizontal_ok = False
        if are_disjoint(u, v) != are_disjoint(fu, fv):
            disjoint_ok = False
        if not horizontal_ok and not disjoint_ok:
            break
    return horizontal_ok, disjoint_ok


# ---------------------------------------------------------------------------
# Connectivity and Markov configurations
# ---------------------------------------------------------------------------

def connected_components(boxes: Iterable[Box]) -> list[frozenset[Box]]:
    """Components of the graph joining boxes whose cell sets intersect."""
    nodes = list(dict.fromkeys(boxes))
    seen: set[Box] = set()
    out: list[frozenset[Box]] = []
    for start in nodes:
        if start in seen:
            continue
        comp = {start}
        frontier = [start]
        while frontier:
            cur = frontier.pop()
            for other in nodes:
                if other not in comp and cur.intersects(other):
                    comp.add(other)
                    frontier.append(other)
        seen.update(comp)
        out.append(frozenset(comp))
    return out


@dataclass(frozen=True)
class MarkovTriple:
    """Three partitioned box sets (E, F, G), each split into an h-part and a v-part."""

    e1: frozenset[Box]
    e2: frozenset[Box]
    f1: frozenset[Box]
    f2: frozenset[Box]
    g1: frozenset[Box]
    g2: frozenset[Box]

    @property
    def e(self) -> frozenset[Box]:
        return self.e1 | self.e2

    @property
    def f(self) -> frozenset[Box]:
        return self.f1 | self.f2

    @property
    def g(self) -> frozenset[Box]:
        return self.g1 | self.g2


def _all_pairs(a: Iterable[Box], b: Iterable[Box]):
    return itertools.product(a, b)


def is_markov_triple(t: MarkovTriple) -> bool:
    # (i) cells shared by E and G lie inside F.
    f_cells = cells_of(t.f)
    if not (cells_of(t.e) & cells_of(t.g)) <= f_cells:
        return False
    # (ii) cross-index pairs are disjoint, and F consists of disjoint boxes.
    for a, b in itertools.chain(
            _all_pairs(t.e1, t.f2), _all_pairs(t.e2, t.f1),
            _all_pairs(t.f1, t.g2), _all_pairs(t.f2, t.g1),
            _all_pairs(t.g1, t.e2), _all_pairs(t.g2, t.e1)):
        if not are_disjoint(a, b):
            return False
    for a, b in itertools.combinations(t.f, 2):
        if not are_disjoint(a, b):
            return False
    # (iii) component-1 pairs cross horizontally or miss; component-2 vertically.
    for a, b in itertools.chain(_all_pairs(t.e1, t.f1), _all_pairs(t.f1, t.g1)):
        if not in_h_or_n(a, b):
            return False
    for a, b in itertools.chain(_all_pairs(t.e2, t.f2), _all_pairs(t.f2, t.g2)):
        if not in_v_or_n(a, b):
            return False
    return True


@dataclass(frozen=True)
class MarkovQuadruple:
    """Two Markov triples (E, F, G) and (E, F', G) with compatible middles."""

    e1: frozenset[Box]
    e2: frozenset[Box]
    f1: frozenset[Box]
    f2: frozenset[Box]
    fp1: frozenset[Box]
    fp2: frozenset[Box]
    g1: frozenset[Box]
    g2: frozenset[Box]


def is_markov_quadruple(q: MarkovQuadruple) -> bool:
    first = MarkovTriple(q.e1, q.e2, q.f1, q.f2, q.g1, q.g2)
    second = MarkovTriple(q.e1, q.e2, q.fp1, q.fp2, q.g1, q.g2)
    if not (is_markov_triple(first) and is_markov_triple(second)):
        return False
    for a, b in _all_pairs(q.f1, q.fp1):
        if not in_h_or_n(a, b):
            return False
    for a, b in _all_pairs(q.f2, q.fp2):
        if not in_v_or_n(a, b):
            return False
    for a, b in itertools.chain(_all_pairs(q.f1, q.fp2), _all_pairs(q.f2, q.fp1)):
        if not are_disjoint(a, b):
            return False
    f_cells = cells_of(q.f1 | q.f2)
    fp_cells = cells_of(q.fp1 | q.fp2)
    if not (f_cells & cells_of(q.g1 | q.g2)) <= fp_cells:
        return False
    if not (cells_of(q.e1 | q.e2) & fp_cells) <= f_cells:
        return False
    return True


def build_connecting_set(u1: Iterable[Box], u2: Iterable[Box],
                         w1: Iterable[Box], w2: Iterable[Box],
                         ) -> tuple[frozenset[Box], frozenset[Box]]:
    """Construct the middle set V making (U, V, W) a Markov triple.

    The hypotheses are those of the connecting lemma: component-1 pairs of
    U x W cross horizontally or miss, component-2 pairs vertically or miss,
    and cross-component pairs miss entirely.  Returns the partition (V1, V2);
    the union is the connecting set.  Raises PreconditionViolated when the
    partition hypotheses fail, and asserts the Markov-triple postcondition.
    """
    u1, u2 = frozenset(u1), frozenset(u2)
    w1, w2 = frozenset(w1), frozenset(w2)
    for a, b in _all_pairs(u1, w1):
        if not in_h_or_n(a, b):
            raise PreconditionViolated(f"({a!r}, {b!r}) not in H or N")
    for b, a in _all_pairs(w2, u2):
        if not in_h_or_n(b, a):
            raise PreconditionViolated(f"({b!r}, {a!r}) not in H or N")
    for a, b in itertools.chain(_all_pairs(u1, w2), _all_pairs(u2, w1)):
        if not are_disjoint(a, b):
            raise PreconditionViolated(f"({a!r}, {b!r}) not disjoint")

    u_all = u1 | u2
    w_all = w1 | w2

    def _crossers_in_u(w: Box) -> frozenset[Box]:
        return frozenset(u for u in u_all
                         if crosses_horizontally(u, w) or crosses_vertically(u, w))

    def _crossers_in_w(u: Box) -> frozenset[Box]:
        return frozenset(w for w in w_all
                         if crosses_horizontally(u, w) or crosses_vertically(u, w))

    v1: set[Box] = set()
    v2: set[Box] = set()
    for u, w in _all_pairs(u_all, w_all):
        horizontal = crosses_horizontally(u, w)
        vertical = crosses_vertically(u, w)
        if not (horizontal or vertical):
            continue
        comp_u = _component_containing(_crossers_in_u(w), u)
        comp_w = _component_containing(_crossers_in_w(u), w)
        region = cells_of(comp_u) & cells_of(comp_w)
        box = _cells_as_box(region)
        if box is None:
            raise PreconditionViolated(
                f"connecting region of ({u!r}, {w!r}) is not a box")
        if horizontal:
            v1.add(box)
        else:
            v2.add(box)

    triple = MarkovTriple(u1, u2, frozenset(v1), frozenset(v2), w1, w2)
    if not is_markov_triple(triple):
        raise PreconditionViolated("constructed set does not give a Markov triple")
    return frozenset(v1), frozenset(v2)


def _component_containing(boxes: frozenset[Box], member: Box) -> frozenset[Box]:
    for comp in connected_components(boxes):
        if member in comp:
            return comp
    raise PreconditionViolated(f"{member!r} missing from its own crossing graph")


def _cells_as_box(cells: frozenset[Point]) -> Box | None:
    if not cells:
        return None
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    box = Box(min(xs), min(ys), max(xs), max(ys))
    if box.area != len(cells):
        return None
    return box


# ---------------------------------------------------------------------------
# Statement-hypothesis validators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TowerScenario:
    """Ordered blocks, consecutive ones crossing horizontally, each translated."""

    blocks: tuple[TranslationBlock, ...]

    def map(self) -> PiecewiseTranslation:
        return PiecewiseTranslation(self.blocks)


@dataclass(frozen=True)
class BoxPermutationScenario:
    """Crossing lattice of wide and tall components, each translated."""

    row_blocks: tuple[TranslationBlock, ...]
    column_blocks: tuple[TranslationBlock, ...]

    def map(self) -> PiecewiseTranslation:
        return PiecewiseTranslation(self.row_blocks + self.column_blocks)


@dataclass(frozen=True)
class SlideScenario:
    """One interlocking piece shifted by a unit step, the other fixed."""

    moving_h: frozenset[Box]
    moving_v: frozenset[Box]
    fixed_h: frozenset[Box]
    fixed_v: frozenset[Box]
    offset: Point

    def map(self) -> PiecewiseTranslation:
        return PiecewiseTranslation((
            TranslationBlock(self.moving_h | self.moving_v, self.offset),
            TranslationBlock(self.fixed_h | self.fixed_v, (0, 0)),
        ))


@dataclass(frozen=True)
class ColumnTranspositionScenario:
    """Two connected tall components translated horizontally across wide boxes."""

    wide: frozenset[Box]
    bystanders: frozenset[Box]
    group_a: frozenset[Box]
    group_b: frozenset[Box]
    shift_a: int
    shift_b: int

    def map(self) -> PiecewiseTranslation:
        return PiecewiseTranslation((
            TranslationBlock(self.wide | self.bystanders, (0, 0)),
            TranslationBlock(self.group_a, (self.shift_a, 0)),
            TranslationBlock(self.group_b, (self.shift_b, 0)),
        ))


@dataclass(frozen=True)
class InitialConditionsScenario:
    upstream: frozenset[Box]
    middle: frozenset[Box]
    downstream: frozenset[Box]
    offset: Point


@dataclass(frozen=True)
class GeodesicScenario:
    u_boxes: frozenset[Box]
    v_boxes: frozenset[Box]
    u_excluded: Box
    v_excluded: Box
    offset: Point


@dataclass(frozen=True)
class RestrictedScenario:
    u: Box
    region_u: frozenset[Point]
    v: Box
    region_v: frozenset[Point]
    w: Box
    x: Box
    offset: Point


@dataclass(frozen=True)
class DisjointnessScenario:
    upstream: frozenset[Box]
    middle: frozenset[Box]
    downstream: frozenset[Box]
    offset: Point
    targets: tuple[Box, ...]


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    failures: tuple[str, ...]

    def raise_if_failed(self):
        if not self.ok:
            raise HypothesesViolated(self.failures)


def _check_all_h(failures, label, left, right):
    for a, b in _all_pairs(left, right):
        if not crosses_horizontally(a, b):
            failures.append(f"{label}: ({a!r}, {b!r}) does not cross horizontally")
            return


def _check_all_n(failures, label, left, right):
    for a, b in _all_pairs(left, right):
        if not are_disjoint(a, b):
            failures.append(f"{label}: ({a!r}, {b!r}) not disjoint")
            return


def _check_preserves_h_and_n(failures, f: PiecewiseTranslation):
    h_ok, n_ok = preserves_crossings(f)
    if not h_ok:
        failures.append("map does not preserve horizontal crossings")
    if not n_ok:
        failures.append("map does not preserve disjointness")


def validate_statement_hypotheses(scenario) -> ValidationResult:
    """Check the hypotheses of the invariance statement the scenario encodes.

    Returns a result whose ``failures`` name the first violated condition of
    each group; an empty tuple means all hypotheses hold.
    """
    failures: list[str] = []
    if isinstance(scenario, TowerScenario):
        blocks = scenario.blocks
        for i in range(len(blocks) - 1):
            _check_all_h(failures, f"tower step {i}", blocks[i].boxes, blocks[i + 1].boxes)
            _check_all_h(failures, f"tower step {i} (image)",
                         blocks[i].image(), blocks[i + 1].image())
    elif isinstance(scenario, BoxPermutationScenario):
        rows, cols = scenario.row_blocks, scenario.column_blocks
        for rb, cb in _all_pairs(rows, cols):
            _check_all_h(failures, "row x column", rb.boxes, cb.boxes)
            _check_all_h(failures, "row x column (image)", rb.image(), cb.image())
        for group in (rows, cols):
            for a, b in itertools.combinations(group, 2):
                _check_all_n(failures, "distinct components", a.boxes, b.boxes)
                _check_all_n(failures, "distinct components (image)", a.image(), b.image())
    elif isinstance(scenario, SlideScenario):
        if scenario.offset not in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            failures.append(f"offset {scenario.offset!r} is not a unit step")
        for a, b in _all_pairs(scenario.moving_h, scenario.fixed_h):
            if not in_h_or_n(a, b):
                failures.append(f"moving-h x fixed-h: ({a!r}, {b!r}) not in H or N")
                break
        for b, a in _all_pairs(scenario.fixed_v, scenario.moving_v):
            if not in_h_or_n(b, a):
                failures.append(f"fixed-v x moving-v: ({b!r}, {a!r}) not in H or N")
                break
        _check_all_n(failures, "moving-h x fixed-v", scenario.moving_h, scenario.fixed_v)
        _check_all_n(failures, "moving-v x fixed-h", scenario.moving_v, scenario.fixed_h)
        _check_preserves_h_and_n(failures, scenario.map())
    elif isinstance(scenario, ColumnTranspositionScenario):
        _check_all_n(failures, "group-a x group-b", scenario.group_a, scenario.group_b)
        _check_all_n(failures, "bystanders x tall",
                     scenario.bystanders, scenario.group_a | scenario.group_b)
        _check_all_h(failures, "wide x tall",
                     scenario.wide, scenario.group_a | scenario.group_b)
        for name, group in (("a", scenario.group_a), ("b", scenario.group_b)):
            if group and len(connected_components(group)) != 1:
                failures.append(f"group {name} is not connected")
        f = scenario.map()
        moved = frozenset(itertools.chain(
            (b.translate((scenario.shift_a, 0)) for b in scenario.group_a),
            (b.translate((scenario.shift_b, 0)) for b in scenario.group_b)))
        hull = bounding_box(scenario.group_a | scenario.group_b | moved)
        if hull is not None:
            for b in scenario.bystanders:
                if hull.intersects(b):
                    failures.append("no separating box: bystanders meet the tall hull")
                    break
        _check_preserves_h_and_n(failures, f)
    elif isinstance(scenario, (InitialConditionsScenario, DisjointnessScenario)):
        shifted = frozenset(b.translate(scenario.offset) for b in scenario.middle)
        _check_all_h(failures, "upstream x middle", scenario.upstream, scenario.middle)
        _check_all_h(failures, "middle x downstream", scenario.middle, scenario.downstream)
        _check_all_h(failures, "upstream x shifted middle", scenario.upstream, shifted)
        _check_all_h(failures, "shifted middle x downstream", shifted, scenario.downstream)
        if isinstance(scenario, DisjointnessScenario):
            for t in scenario.targets:
                if t not in scenario.middle:
                    failures.append(f"target {t!r} is not one of the middle boxes")
    elif isinstance(scenario, GeodesicScenario):
        w, x = scenario.u_excluded, scenario.v_excluded
        _check_all_h(failures, "u x excluded", scenario.u_boxes, {w})
        if not crosses_horizontally(w, x):
            failures.append(f"({w!r}, {x!r}) does not cross horizontally")
        if not crosses_horizontally(w, x.translate(scenario.offset)):
            failures.append("excluded pair does not cross after the shift")
        _check_all_h(failures, "excluded x v", {x}, scenario.v_boxes)
    elif isinstance(scenario, RestrictedScenario):
        _validate_restricted(failures, scenario)
    else:
        raise PreconditionViolated(f"unknown scenario type {type(scenario).__name__}")
    return ValidationResult(not failures, tuple(failures))


def _iter_region_paths(box: Box, region: frozenset[Point]):
    """Up-right corner-to-corner paths of ``box`` staying inside ``region``."""
    end = box.hi

    def _extend(path):
        x, y = path[-1]
        if (x, y) == end:
            yield tuple(path)
            return
        for nxt in ((x + 1, y), (x, y + 1)):
            if nxt[0] <= box.x1 and nxt[1] <= box.y1 and nxt in region:
                path.append(nxt)
                yield from _extend(path)
                path.pop()

    if box.lo in region:
        yield from _extend([box.lo])


def _path_crosses_h(path, w: Box) -> bool:
    hits_left = any(c[0] == w.x0 and w.y0 <= c[1] <= w.y1 for c in path)
    hits_right = any(c[0] == w.x1 and w.y0 <= c[1] <= w.y1 for c in path)
    return hits_left and hits_right


def _path_crosses_v(path, w: Box) -> bool:
    hits_bottom = any(c[1] == w.y0 and w.x0 <= c[0] <= w.x1 for c in path)
    hits_top = any(c[1] == w.y1 and w.x0 <= c[0] <= w.x1 for c in path)
    return hits_bottom and hits_top


def _validate_restricted(failures: list[str], sc: RestrictedScenario):
    region_u = frozenset(sc.region_u)
    region_v = frozenset(sc.region_v)
    if not all(sc.u.contains_cell(c) for c in region_u):
        failures.append("region for u leaves its box")
    if not all(sc.v.contains_cell(c) for c in region_v):
        failures.append("region for v leaves its box")
    u_paths = list(_iter_region_paths(sc.u, region_u))
    v_paths = list(_iter_region_paths(sc.v, region_v))
    if not u_paths:
        failures.append("no admissible u-path in its region")
    if not v_paths:
        failures.append("no admissible v-path in its region")
    if not all(sc.w.contains_cell(c) for c in sc.w.cells()) or not region_u >= frozenset(sc.w.cells()):
        failures.append("excluded box w is not inside the u-region")
    if not region_v >= frozenset(sc.x.cells()):
        failures.append("excluded box x is not inside the v-region")
    if any(not _path_crosses_h(p, sc.w) for p in u_paths):
        failures.append("some admissible u-path misses w left-to-right")
    if any(not _path_crosses_v(p, sc.x) for p in v_paths):
        failures.append("some admissible v-path misses x bottom-to-top")
    shifted_v_cells = frozenset((c[0] + sc.offset[0], c[1] + sc.offset[1]) for c in region_v)
    w_cells = frozenset(sc.w.cells())
    if not (region_u & region_v) <= w_cells:
        failures.append("region overlap escapes w")
    if not (region_u & shifted_v_cells) <= w_cells:
        failures.append("region overlap escapes w after the shift")
    if not crosses_horizontally(sc.w, sc.x):
        failures.append("excluded boxes do not cross horizontally")
    if not crosses_horizontally(sc.w, sc.x.translate(sc.offset)):
        failures.append("excluded boxes do not cross horizontally after the shift")
