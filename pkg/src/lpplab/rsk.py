"""Integer partitions and the RSK-family correspondences.

Partitions are plain tuples of weakly decreasing positive integers, matched
to grids through the diagonal increment profile of last passage values.  The
three maps implemented here are the staircase encoding of a weight array
(which preserves all vertical-crossing partition functions), the scrambled
row/column correspondence driven by nested interval chains, and its
generalization to moon polyominoes driven by a box exhaustion.  Bijectivity
is certified by exhaustive enumeration up to a total-weight cutoff; inverses
are looked up from that enumeration rather than computed directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .boxes import Box, Point, crosses_horizontally
from .environments import (Environment, composition_count, enumerate_fillings,
                           from_matrix)
from .errors import (BudgetExceeded, InvalidChain, NegativeWeight, NotMoon,
                     PreconditionViolated, ShapeMismatch, WrongMode)
from .partition import delta_profile, multi_partition, single_partition
from .semiring import BOTTOM, NumericMode, SemiringTag

PartitionTuple = tuple[int, ...]
PartitionSequence = tuple[PartitionTuple, ...]


# ---------------------------------------------------------------------------
# Partition basics
# ---------------------------------------------------------------------------

def is_partition(parts: Sequence[int]) -> bool:
    return all(parts[i] >= parts[i + 1] for i in range(len(parts) - 1)) and \
        all(p > 0 for p in parts)


def trim(parts: Sequence[int]) -> PartitionTuple:
    """Drop trailing zeros; the canonical representation."""
    out = list(parts)
    while out and out[-1] == 0:
        out.pop()
    if not is_partition(out):
        raise PreconditionViolated(f"{parts!r} is not weakly decreasing")
    return tuple(out)


def partition_size(p: PartitionTuple) -> int:
    return sum(p)


def contains(inner: PartitionTuple, outer: PartitionTuple) -> bool:
    return len(inner) <= len(outer) and all(
        inner[i] <= outer[i] for i in range(len(inner)))


def is_horizontal_strip(mu: PartitionTuple, lam: PartitionTuple) -> bool:
    """Whether lam/mu is a horizontal strip (at most one new cell per column),
    equivalently the interlacing lam_1 >= mu_1 >= lam_2 >= mu_2 >= ..."""
    if not contains(mu, lam):
        return False
    padded = list(mu) + [0] * (len(lam) - len(mu))
    return all(lam[i + 1] <= padded[i] for i in range(len(lam) - 1))


def strip_weight(mu: PartitionTuple, lam: PartitionTuple) -> int:
    return partition_size(lam) - partition_size(mu)


def symmetric_difference_size(a: PartitionTuple, b: PartitionTuple) -> int:
    """Cell count of the symmetric difference of the two diagrams."""
    rows = max(len(a), len(b))
    total = 0
    for i in range(rows):
        x = a[i] if i < len(a) else 0
        y = b[i] if i < len(b) else 0
        total += abs(x - y)
    return total


def horizontal_strip_extensions(mu: PartitionTuple, max_total: int) -> Iterator[PartitionTuple]:
    """All partitions lam with mu <= lam, lam/mu a horizontal strip, and
    |lam| <= max_total."""
    budget = max_total - partition_size(mu)
    if budget < 0:
        return

    rows = len(mu) + 1

    def rec(i: int, prev_new: int, acc: list[int], left: int):
        if i == rows:
            yield trim(tuple(acc))
            return
        base = mu[i] if i < len(mu) else 0
        upper_from_strip = mu[i - 1] if i >= 1 else None
        hi = base + left
        if upper_from_strip is not None:
            hi = min(hi, upper_from_strip)
        hi = min(hi, prev_new) if acc else hi
        for v in range(base, hi + 1):
            acc.append(v)
            yield from rec(i + 1, v, acc, left - (v - base))
            acc.pop()

    yield from rec(0, 10 ** 9, [], budget)


# ---------------------------------------------------------------------------
# Greene profile and the staircase encoding
# ---------------------------------------------------------------------------

def greene_shape(env: Environment, u: Box) -> PartitionTuple:
    """The diagonal increment profile as an integer partition."""
    if env.semiring is not SemiringTag.MAX_PLUS:
        raise WrongMode("greene_shape needs a max-plus environment")
    for c in u.cells():
        v = env.value_at(*c)
        if v is None or v < 0:
            raise NegativeWeight(f"cell {c} has weight {v!r}")
    return trim(delta_profile(env, u))


def staircase_region(u: Box) -> frozenset[Point]:
    """Cells of u on or above the anti-diagonal through the top-left corner."""
    return frozenset((x, y) for x, y in u.cells() if x + y >= u.x0 + u.y1)


def project_to_staircase(u: Box, parts: Sequence[Box]) -> tuple[Box, ...]:
    """Lift the start corner of each full-height part onto the staircase."""
    out = []
    for p in parts:
        if p.y0 != u.y0 or p.y1 != u.y1 or not u.contains_box(p):
            raise PreconditionViolated(f"{p!r} does not span the window vertically")
        y_new = max(u.y0, u.x0 + u.y1 - p.x0)
        out.append(Box(p.x0, y_new, p.x1, p.y1))
    return tuple(out)


def encode_phi(env: Environment) -> Environment:
    """The unique weight array on the staircase region with the same
    vertical-crossing partition functions as the input.

    Entries are corner-ratio combinations of diagonal multi-point values; the
    output window equals the input window with cells below the staircase
    masked out.
    """
    if env.mode is NumericMode.FLOAT64:
        raise WrongMode("the encoding map is exact; float environments drift")
    u = env.window
    ops = env.ops()
    region = staircase_region(u)

    values: dict[tuple[int, int], object] = {}
    zcache: dict[tuple[int, int], object] = {}

    def z(i: int, j: int):
        # value of the j-tuple crossing (u.lo; (i, u.y1)) diagonally
        if j == 0:
            return ops.one
        key = (i, j)
        if key not in zcache:
            box = Box(u.x0, u.y0, i, u.y1)
            from .partition import diagonal_endpoint
            zcache[key] = multi_partition(env, diagonal_endpoint(box, j))
        return zcache[key]

    for i in range(u.x0, u.x1 + 1):
        jmax = min(i - u.x0, u.height - 1)
        for j in range(jmax + 1):
            cell = (i, u.y1 - j)
            if j + u.x0 == i:
                val = ops.div(z(i, j + 1), z(i, j))
            else:
                num = ops.mul(z(i, j + 1), z(i - 1, j))
                den = ops.mul(z(i - 1, j + 1), z(i, j))
                val = ops.div(num, den)
            values[cell] = val

    rows = tuple(tuple(values.get((x, y)) for x in range(u.x0, u.x1 + 1))
                 for y in range(u.y0, u.y1 + 1))
    assert set(values) == set(region)
    return Environment(u, rows, env.semiring, env.mode)


# ---------------------------------------------------------------------------
# Scrambled correspondence
# ---------------------------------------------------------------------------

IntervalChain = tuple[tuple[int, int], ...]


def check_chain(chain: IntervalChain, n: int):
    """Nested intervals I_1 ⊂ ... ⊂ I_n = [1, n] with |I_i| = i."""
    if len(chain) != n:
        raise InvalidChain(f"chain needs {n} intervals, got {len(chain)}")
    for i, (lo, hi) in enumerate(chain, start=1):
        if hi - lo + 1 != i:
            raise InvalidChain(f"interval {i} has size {hi - lo + 1}, wants {i}")
        if i > 1:
            plo, phi = chain[i - 2]
            if not (lo <= plo and phi <= hi):
                raise InvalidChain(f"interval {i} does not contain interval {i - 1}")
    if chain and chain[-1] != (1, n):
        raise InvalidChain("last interval must be the full range")


def classic_chain(n: int, from_left: bool = True) -> IntervalChain:
    if from_left:
        return tuple((1, i) for i in range(1, n + 1))
    return tuple((n - i + 1, n) for i in range(1, n + 1))


def scrambled_rsk(env: Environment, row_chain: IntervalChain,
                  col_chain: IntervalChain) -> tuple[PartitionSequence, PartitionSequence]:
    """Partition-sequence pair recorded along two nested interval chains.

    The environment must be a nonnegative integer grid on (1,1;n,m).  The
    first output records the profiles of the vertical strips I_i x [1,m], the
    second those of the horizontal strips [1,n] x J_j.  With both chains
    growing from the left this is the classical correspondence between
    matrices and same-shape tableau pairs.
    """
    u = env.window
    if (u.x0, u.y0) != (1, 1):
        raise ShapeMismatch("grid must sit on (1,1;n,m)")
    n, m = u.width, u.height
    check_chain(row_chain, n)
    check_chain(col_chain, m)
    if env.semiring is not SemiringTag.MAX_PLUS:
        raise WrongMode("the correspondence is stated for max-plus integer grids")
    for c in u.cells():
        v = env.value_at(*c)
        if v is None or v < 0 or v != int(v):
            raise NegativeWeight(f"cell {c} has weight {v!r}")

    phi = [()]
    for lo, hi in row_chain:
        phi.append(trim(delta_profile(env, Box(lo, 1, hi, m))))
    psi = [()]
    for lo, hi in col_chain:
        psi.append(trim(delta_profile(env, Box(1, lo, n, hi))))
    return tuple(phi), tuple(psi)


def scrambled_weight_identities(env: Environment, row_chain: IntervalChain,
                                col_chain: IntervalChain,
                                phi: PartitionSequence,
                                psi: PartitionSequence) -> bool:
    """Row and column sums match the strip sizes at the step where each index
    first enters its chain."""
    u = env.window
    n, m = u.width, u.height
    for i in range(1, n + 1):
        step = next(s for s, (lo, hi) in enumerate(row_chain, start=1) if lo <= i <= hi)
        row_sum = sum(env.value_at(i, y) for y in range(1, m + 1))
        if row_sum != strip_weight(phi[step - 1], phi[step]):
            return False
    for j in range(1, m + 1):
        step = next(s for s, (lo, hi) in enumerate(col_chain, start=1) if lo <= j <= hi)
        col_sum = sum(env.value_at(x, j) for x in range(1, n + 1))
        if col_sum != strip_weight(psi[step - 1], psi[step]):
            return False
    return True


# ---------------------------------------------------------------------------
# Moon polyominoes
# ---------------------------------------------------------------------------

def moon_check(cells: Iterable[Point]) -> bool:
    """Convex interval rows/columns, totally ordered by containment."""
    cells = frozenset(cells)
    if not cells:
        return True
    rows: dict[int, list[int]] = {}
    cols: dict[int, list[int]] = {}
    for x, y in cells:
        rows.setdefault(y, []).append(x)
        cols.setdefault(x, []).append(y)

    def interval(vals: list[int]) -> tuple[int, int] | None:
        lo, hi = min(vals), max(vals)
        return (lo, hi) if len(vals) == hi - lo + 1 else None

    for sections in (rows, cols):
        ivals = []
        for vals in sections.values():
            iv = interval(vals)
            if iv is None:
                return False
            ivals.append(iv)
        for a, b in itertools.combinations(ivals, 2):
            a_in_b = b[0] <= a[0] and a[1] <= b[1]
            b_in_a = a[0] <= b[0] and b[1] <= a[1]
            if not (a_in_b or b_in_a):
                return False
    return True


def maximal_boxes(cells: frozenset[Point]) -> list[Box]:
    rows: dict[int, tuple[int, int]] = {}
    for x, y in cells:
        lo, hi = rows.get(y, (x, x))
        rows[y] = (min(lo, x), max(hi, x))
    out = []
    for y, (lo, hi) in rows.items():
        ys = [yy for yy, iv in rows.items() if iv[0] <= lo and hi <= iv[1]]
        box = Box(lo, min(ys), hi, max(ys))
        if all(c in cells for c in box.cells()) and box not in out:
            if not any(b != box and b.contains_box(box) for b in out):
                out.append(box)
    out = [b for b in out if not any(o != b and o.contains_box(b) for o in out)]
    return out


def box_exhaustion(cells: Iterable[Point]) -> tuple[Box | None, ...]:
    """A canonical box exhaustion of a moon polyomino.

    Maximal boxes are visited in horizontal-crossing order; between two of
    them columns are removed (left side first) and then rows are added
    (downward first).  The sequence starts and ends with the empty box,
    every step adds one row or removes one column, and the union of the
    boxes is the input cell set.
    """
    cells = frozenset(cells)
    if not moon_check(cells):
        raise NotMoon("cell set is not a moon polyomino")
    if not cells:
        return (None, None)
    maxes = maximal_boxes(cells)
    maxes.sort(key=lambda b: (-b.width, b.height))
    for a, b in zip(maxes, maxes[1:]):
        if not crosses_horizontally(a, b):
            raise NotMoon("maximal boxes do not cross in order")

    seq: list[Box | None] = [None]
    first = maxes[0]
    cur = Box(first.x0, first.y0, first.x1, first.y0)
    seq.append(cur)
    while cur != first:
        cur = Box(cur.x0, cur.y0, cur.x1, cur.y1 + 1)
        seq.append(cur)
    for target in maxes[1:]:
        while cur.x0 < target.x0:
            cur = Box(cur.x0 + 1, cur.y0, cur.x1, cur.y1)
            seq.append(cur)
        while cur.x1 > target.x1:
            cur = Box(cur.x0, cur.y0, cur.x1 - 1, cur.y1)
            seq.append(cur)
        while cur.y0 > target.y0:
            cur = Box(cur.x0, cur.y0 - 1, cur.x1, cur.y1)
            seq.append(cur)
        while cur.y1 < target.y1:
            cur = Box(cur.x0, cur.y0, cur.x1, cur.y1 + 1)
            seq.append(cur)
    while cur.width > 1:
        cur = Box(cur.x0 + 1, cur.y0, cur.x1, cur.y1)
        seq.append(cur)
    seq.append(None)
    assert exhaustion_is_valid(tuple(seq), cells)
    return tuple(seq)


def exhaustion_is_valid(seq: Sequence[Box | None], cells: frozenset[Point]) -> bool:
    if len(seq) < 2 or seq[0] is not None or seq[-1] is not None:
        return False
    union: set[Point] = set()
    for a, b in zip(seq, seq[1:]):
        if not _valid_step(a, b):
            return False
    for b in seq:
        if b is not None:
            if not all(c in cells for c in b.cells()):
                return False
            union.update(b.cells())
    return union == set(cells)


def _valid_step(a: Box | None, b: Box | None) -> bool:
    if a is None and b is None:
        return True
    if a is None:
        return b is not None and b.height == 1
    if b is None:
        return a.width == 1
    if b.x0 == a.x0 and b.x1 == a.x1:  # row added
        grew_down = b.y0 == a.y0 - 1 and b.y1 == a.y1
        grew_up = b.y0 == a.y0 and b.y1 == a.y1 + 1
        return grew_down or grew_up
    if b.y0 == a.y0 and b.y1 == a.y1:  # column removed
        shrunk_left = b.x0 == a.x0 + 1 and b.x1 == a.x1
        shrunk_right = b.x0 == a.x0 and b.x1 == a.x1 - 1
        return shrunk_left or shrunk_right
    return False


def _filling_env(filling: Mapping[Point, int], window: Box) -> Environment:
    rows = tuple(tuple(filling.get((x, y)) for x in range(window.x0, window.x1 + 1))
                 for y in range(window.y0, window.y1 + 1))
    return Environment(window, rows, SemiringTag.MAX_PLUS, NumericMode.EXACT_INT)


def moon_rsk(filling: Mapping[Point, int],
             exhaustion: Sequence[Box | None]) -> PartitionSequence:
    """Profile sequence of a moon-polyomino filling along a box exhaustion."""
    cells = frozenset(filling)
    if not exhaustion_is_valid(tuple(exhaustion), cells):
        raise ShapeMismatch("exhaustion does not match the filling's cell set")
    if any(v < 0 for v in filling.values()):
        raise NegativeWeight("filling must be nonnegative")
    if not cells:
        return ((), ())
    from .boxes import bounding_box
    window = bounding_box([b for b in exhaustion if b is not None])
    env = _filling_env(filling, window)
    out: list[PartitionTuple] = []
    for b in exhaustion:
        out.append(() if b is None else trim(delta_profile(env, b)))
    return tuple(out)


def moon_strip_conditions(exhaustion: Sequence[Box | None],
                          seq: PartitionSequence) -> bool:
    """Consecutive profiles differ by horizontal strips, growing on row-add
    steps and shrinking on column-remove steps."""
    for (a, b), (la, lb) in zip(zip(exhaustion, exhaustion[1:]), zip(seq, seq[1:])):
        if a is None and b is None:
            ok = la == lb == ()
        elif a is None or (b is not None and b.contains_box(a)):
            ok = is_horizontal_strip(la, lb)
        else:
            ok = is_horizontal_strip(lb, la)
        if not ok:
            return False
    return True


def moon_weight_identity(filling: Mapping[Point, int],
                         exhaustion: Sequence[Box | None],
                         seq: PartitionSequence) -> bool:
    """Symmetric-difference size of consecutive profiles equals the filling
    weight on the symmetric difference of the boxes."""
    for (a, b), (la, lb) in zip(zip(exhaustion, exhaustion[1:]), zip(seq, seq[1:])):
        cells_a = frozenset(a.cells()) if a is not None else frozenset()
        cells_b = frozenset(b.cells()) if b is not None else frozenset()
        weight = sum(filling[c] for c in cells_a ^ cells_b)
        if symmetric_difference_size(la, lb) != weight:
            return False
    return True


# ---------------------------------------------------------------------------
# Bijectivity verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BijectionReport:
    fillings: int
    distinct_outputs: int
    injective: bool
    admissible: bool
    identities_ok: bool
    counts_by_total: tuple[int, ...]
    expected_counts_by_total: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return (self.injective and self.admissible and self.identities_ok
                and self.counts_by_total == self.expected_counts_by_total)

    def to_json(self) -> dict:
        return {
            "fillings": self.fillings,
            "distinct_outputs": self.distinct_outputs,
            "injective": self.injective,
            "admissible": self.admissible,
            "identities_ok": self.identities_ok,
            "counts_by_total": list(self.counts_by_total),
            "expected_counts_by_total": list(self.expected_counts_by_total),
            "ok": self.ok,
        }


MAX_ENUMERATION = 2_000_000


def _budget_guard(cells: int, cutoff: int):
    total = sum(composition_count(c, cells) for c in range(cutoff + 1))
    if total > MAX_ENUMERATION:
        raise BudgetExceeded(f"{total} fillings exceed the enumeration budget")


def verify_scrambled_bijection(n: int, m: int, row_chain: IntervalChain,
                               col_chain: IntervalChain, cutoff: int) -> BijectionReport:
    """Enumerate all grids with sum <= cutoff and certify the scrambled map:
    injective, outputs admissible same-shape tableau pairs, weight identities
    exact, and per-total image counts matching an independent tableau-pair
    enumeration."""
    _budget_guard(n * m, cutoff)
    window = Box(1, 1, n, m)
    cells = list(window.cells())
    seen: dict[tuple, int] = {}
    counts = [0] * (cutoff + 1)
    admissible = True
    identities = True
    total_fillings = 0
    for filling in enumerate_fillings(cells, cutoff):
        total_fillings += 1
        env = _filling_env(filling, window)
        phi, psi = scrambled_rsk(env, row_chain, col_chain)
        key = (phi, psi)
        total = sum(filling.values())
        if key in seen:
            pass  # collision; injectivity fails below
        seen[key] = seen.get(key, 0) + 1
        counts[total] += 1
        if not _scrambled_admissible(phi, psi):
            admissible = False
        if not scrambled_weight_identities(env, row_chain, col_chain, phi, psi):
            identities = False
    injective = all(v == 1 for v in seen.values())
    expected = tuple(_tableau_pair_count(n, m, c) for c in range(cutoff + 1))
    return BijectionReport(total_fillings, len(seen), injective, admissible,
                           identities, tuple(counts), expected)


def _scrambled_admissible(phi: PartitionSequence, psi: PartitionSequence) -> bool:
    for seq in (phi, psi):
        if seq[0] != ():
            return False
        for a, b in zip(seq, seq[1:]):
            if not is_horizontal_strip(a, b):
                return False
    return phi[-1] == psi[-1]


def _tableau_count(length: int, shape: PartitionTuple) -> int:
    """Number of horizontal-strip chains from the empty partition to shape."""
    if len(shape) > length:
        return 0

    def rec(steps: int, cur: PartitionTuple) -> int:
        if steps == 0:
            return 1 if cur == () else 0
        total = 0
        for prev in _strip_shrinkages(cur):
            total += rec(steps - 1, prev)
        return total

    return rec(length, shape)


def _strip_shrinkages(lam: PartitionTuple) -> Iterator[PartitionTuple]:
    """All mu with mu <= lam and lam/mu a horizontal strip."""
    bounds = []
    for i in range(len(lam)):
        lo = lam[i + 1] if i + 1 < len(lam) else 0
        hi = lam[i]
        bounds.append((lo, hi))

    def rec(i: int, acc: list[int]):
        if i == len(bounds):
            yield trim(tuple(acc))
            return
        lo, hi = bounds[i]
        hi = min(hi, acc[-1]) if acc else hi
        for v in range(lo, hi + 1):
            acc.append(v)
            yield from rec(i + 1, acc)
            acc.pop()

    yield from rec(0, [])


def _partitions_of(total: int) -> Iterator[PartitionTuple]:
    def rec(remaining: int, cap: int, acc: list[int]):
        if remaining == 0:
            yield tuple(acc)
            return
        for v in range(min(cap, remaining), 0, -1):
            acc.append(v)
            yield from rec(remaining - v, v, acc)
            acc.pop()

    yield from rec(total, total if total else 1, [])


def _tableau_pair_count(n: int, m: int, total: int) -> int:
    count = 0
    for lam in _partitions_of(total):
        count += _tableau_count(n, lam) * _tableau_count(m, lam)
    return count


def verify_moon_bijection(cells: Iterable[Point],
                          exhaustion: Sequence[Box | None] | None,
                          cutoff: int) -> BijectionReport:
    """Enumerate all fillings with sum <= cutoff and certify the moon map:
    injective, outputs satisfy the strip conditions, the symmetric-difference
    weight identity holds, and per-total image counts match an independent
    enumeration of admissible partition sequences."""
    cells = frozenset(cells)
    if exhaustion is None:
        exhaustion = box_exhaustion(cells)
    exhaustion = tuple(exhaustion)
    _budget_guard(len(cells), cutoff)
    cell_list = sorted(cells)
    seen: dict[tuple, int] = {}
    counts = [0] * (cutoff + 1)
    admissible = True
    identities = True
    total_fillings = 0
    for filling in enumerate_fillings(cell_list, cutoff):
        total_fillings += 1
        seq = moon_rsk(filling, exhaustion)
        seen[seq] = seen.get(seq, 0) + 1
        counts[sum(filling.values())] += 1
        if not moon_strip_conditions(exhaustion, seq):
            admissible = False
        if not moon_weight_identity(filling, exhaustion, seq):
            identities = False
    injective = all(v == 1 for v in seen.values())
    expected = _admissible_sequence_counts(exhaustion, cutoff)
    return BijectionReport(total_fillings, len(seen), injective, admissible,
                           identities, tuple(counts), expected)


def _admissible_sequence_counts(exhaustion: Sequence[Box | None],
                                cutoff: int) -> tuple[int, ...]:
    """Count admissible partition sequences by implied filling weight.

    Each cell enters the exhaustion once and leaves once, so the filling
    weight is half the accumulated symmetric-difference size.
    """
    counts = [0] * (cutoff + 1)
    steps = list(zip(exhaustion, exhaustion[1:]))

    def rec(i: int, cur: PartitionTuple, acc: int):
        if acc > 2 * cutoff:
            return
        if i == len(steps):
            if cur == () and acc % 2 == 0 and acc // 2 <= cutoff:
                counts[acc // 2] += 1
            return
        a, b = steps[i]
        if a is None and b is None:
            if cur == ():
                rec(i + 1, cur, acc)
            return
        if a is None or (b is not None and b.contains_box(a)):
            budget = (2 * cutoff - acc) + partition_size(cur)
            for nxt in horizontal_strip_extensions(cur, budget):
                rec(i + 1, nxt, acc + strip_weight(cur, nxt))
        else:
            for nxt in _strip_shrinkages(cur):
                rec(i + 1, nxt, acc + strip_weight(nxt, cur))

    rec(0, (), 0)
    return tuple(counts)
