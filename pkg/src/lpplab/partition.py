"""Partition functions over both semirings.

Single-box values use the standard corner recursion.  Multi-point values are
dispatched by endpoint shape: diagonal families get a column-sweep frontier
DP over non-crossing row tuples, cell-disjoint groups factor into a product,
and anything else falls back to explicit path enumeration.  The brute-force
enumerator doubles as the oracle that every optimized route is tested
against.
"""

from __future__ import annotations

import enum
import functools
import itertools
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .boxes import Box, Point, are_disjoint, bounding_box, points_nearrow
from .environments import Environment, transpose_env
from .errors import (BudgetExceeded, InfeasibleEndpoint, NoAdmissiblePath,
                     NoFeasiblePair, OutOfWindow, PreconditionViolated,
                     UnsupportedEndpointShape, WrongSemiring)
from .rng import RandomSource, UniformStream
from .semiring import BOTTOM, NumericMode, SemiringTag

Endpoint = tuple[Box, ...]
Path = tuple[Point, ...]

DEFAULT_PATH_BUDGET = 2_000_000


class Orientation(enum.Enum):
    ROW_SHIFTED = "rows"
    COLUMN_SHIFTED = "columns"


def diagonal_endpoint(base: Box, k: int, orientation: Orientation = Orientation.ROW_SHIFTED) -> Endpoint:
    """The k-tuple of corner-shifted copies of ``base`` whose disjoint paths
    cross it diagonally."""
    if not 1 <= k <= min(base.width, base.height):
        raise PreconditionViolated(f"k={k} exceeds min(width, height) of {base!r}")
    parts = []
    for i in range(k):
        if orientation is Orientation.ROW_SHIFTED:
            lo = (base.x0 + i, base.y0)
            hi = (base.x1 - (k - 1 - i), base.y1)
        else:
            lo = (base.x0, base.y0 + i)
            hi = (base.x1, base.y1 - (k - 1 - i))
        parts.append(Box(lo[0], lo[1], hi[0], hi[1]))
    return tuple(parts)


class EndpointFamily(enum.Enum):
    DIAGONAL = "D"
    DIAGONAL_TRANSPOSED = "Dhat"
    TO_RIGHT_EDGE = "H"
    TO_TOP_EDGE = "V"
    ALL_HORIZONTAL = "Hbar"
    ALL_VERTICAL = "Vbar"


def endpoint_family(u: Box, family: EndpointFamily | str) -> list[Endpoint]:
    """The named endpoint family of the box, in a canonical order."""
    if isinstance(family, str):
        family = EndpointFamily(family)
    if family is EndpointFamily.DIAGONAL:
        kmax = min(u.width, u.height)
        return [diagonal_endpoint(u, k) for k in range(1, kmax + 1)]
    if family is EndpointFamily.DIAGONAL_TRANSPOSED:
        kmax = min(u.width, u.height)
        return [diagonal_endpoint(u, k, Orientation.COLUMN_SHIFTED)
                for k in range(1, kmax + 1)]
    if family is EndpointFamily.TO_RIGHT_EDGE:
        out = []
        for i in range(u.height):
            out.extend(endpoint_family(Box(u.x0, u.y0, u.x1, u.y1 - i),
                                       EndpointFamily.DIAGONAL))
        return out
    if family is EndpointFamily.TO_TOP_EDGE:
        out = []
        for i in range(u.width):
            out.extend(endpoint_family(Box(u.x0, u.y0, u.x1 - i, u.y1),
                                       EndpointFamily.DIAGONAL))
        return out
    if family is EndpointFamily.ALL_HORIZONTAL:
        spans = [Box(u.x0, a, u.x1, b)
                 for a in range(u.y0, u.y1 + 1) for b in range(a, u.y1 + 1)]
        return _feasible_tuples(spans)
    if family is EndpointFamily.ALL_VERTICAL:
        spans = [Box(a, u.y0, b, u.y1)
                 for a in range(u.x0, u.x1 + 1) for b in range(a, u.x1 + 1)]
        return _feasible_tuples(spans)
    raise PreconditionViolated(f"unknown family {family!r}")


def _feasible_tuples(spans: list[Box]) -> list[Endpoint]:
    """All sorted tuples of the given boxes admitting disjoint paths.

    Partition values are invariant under reordering the parts, so one sorted
    representative per feasible subset is enough.
    """
    spans = sorted(spans)
    out: list[Endpoint] = []

    def extend(prefix: list[Box], start: int):
        if prefix:
            ep = tuple(prefix)
            if is_feasible(ep):
                out.append(ep)
            else:
                return  # supersets of an infeasible prefix stay infeasible
        for i in range(start, len(spans)):
            prefix.append(spans[i])
            extend(prefix, i + 1)
            prefix.pop()

    extend([], 0)
    return out


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=4096)
def box_paths(box: Box) -> tuple[Path, ...]:
    """All up-right corner-to-corner paths of the box."""
    w, h = box.width - 1, box.height - 1
    paths = []
    for rights in itertools.combinations(range(w + h), w):
        x, y = box.x0, box.y0
        cells = [(x, y)]
        right_set = set(rights)
        for step in range(w + h):
            if step in right_set:
                x += 1
            else:
                y += 1
            cells.append((x, y))
        paths.append(tuple(cells))
    return tuple(paths)


@functools.lru_cache(maxsize=4096)
def _box_path_sets(box: Box) -> tuple[frozenset[Point], ...]:
    return tuple(frozenset(p) for p in box_paths(box))


def path_count(box: Box) -> int:
    import math
    return math.comb(box.width + box.height - 2, box.width - 1)


def path_weight(env: Environment, path: Path):
    ops = env.ops()
    acc = ops.one
    for cell in path:
        v = env.value_at(*cell)
        if v is None:
            return ops.zero
        acc = ops.mul(acc, v)
    return acc


# ---------------------------------------------------------------------------
# Single-box values
# ---------------------------------------------------------------------------

def single_partition(env: Environment, u: Box):
    """Semiring sum over u-paths of the product of cell weights."""
    if not env.window.contains_box(u):
        raise OutOfWindow(f"{u!r} outside window {env.window!r}")
    ops = env.ops()
    width = u.width
    prev: list = [ops.zero] * width
    for y in range(u.y0, u.y1 + 1):
        cur: list = [ops.zero] * width
        for ix, x in enumerate(range(u.x0, u.x1 + 1)):
            if x == u.x0 and y == u.y0:
                best = ops.one
            else:
                best = prev[ix]
                if ix > 0:
                    best = ops.add(best, cur[ix - 1])
            v = env.value_at(x, y)
            cur[ix] = ops.zero if v is None else ops.mul(v, best)
        prev = cur
    return prev[-1]


def prefix_values(env: Environment, u: Box) -> dict[Point, object]:
    """Partition value from the corner of u to every cell of u."""
    ops = env.ops()
    out: dict[Point, object] = {}
    for y in range(u.y0, u.y1 + 1):
        for x in range(u.x0, u.x1 + 1):
            if x == u.x0 and y == u.y0:
                best = ops.one
            else:
                best = ops.zero
                if x > u.x0:
                    best = ops.add(best, out[(x - 1, y)])
                if y > u.y0:
                    best = ops.add(best, out[(x, y - 1)])
            v = env.value_at(x, y)
            out[(x, y)] = ops.zero if v is None else ops.mul(v, best)
    return out


# ---------------------------------------------------------------------------
# Multi-point values
# ---------------------------------------------------------------------------

def _diagonal_pattern(parts: Endpoint) -> tuple[Box, Orientation] | None:
    """Recognize a k-tuple as a diagonal family; returns (base, orientation)."""
    k = len(parts)
    try:
        base = Box(parts[0].x0, parts[0].y0, parts[-1].x1, parts[-1].y1)
    except PreconditionViolated:
        return None
    if k > min(base.width, base.height):
        return None
    if tuple(parts) == diagonal_endpoint(base, k, Orientation.ROW_SHIFTED):
        return base, Orientation.ROW_SHIFTED
    if tuple(parts) == diagonal_endpoint(base, k, Orientation.COLUMN_SHIFTED):
        return base, Orientation.COLUMN_SHIFTED
    return None


def _frontier_diagonal(env: Environment, base: Box, k: int):
    """Column-sweep DP for the row-shifted diagonal family of ``base``.

    Path i (1-based) runs from (x0+i-1, y0) to (x1-k+i, y1); disjointness is
    equivalent to non-crossing, with lower-indexed paths above higher ones in
    every shared column.  The state between columns is the tuple of exit rows
    of the paths continuing rightward.
    """
    ops = env.ops()
    x0, y0, x1, y1 = base.x0, base.y0, base.x1, base.y1

    col_weights: dict[tuple[int, int, int], object] = {}

    def segment(c: int, lo: int, hi: int):
        key = (c, lo, hi)
        if key not in col_weights:
            acc = ops.one
            for y in range(lo, hi + 1):
                v = env.value_at(c, y)
                if v is None:
                    acc = ops.zero
                    break
                acc = ops.mul(acc, v)
            col_weights[key] = acc
        return col_weights[key]

    def active(c: int) -> range:
        return range(max(1, c - x1 + k), min(k, c - x0 + 1) + 1)

    states: dict[tuple[int, ...], object] = {(): ops.one}
    for c in range(x0, x1 + 1):
        act = list(active(c))
        nxt = list(active(c + 1)) if c < x1 else []
        carried = [i for i in act if i in (set(active(c - 1)) if c > x0 else set())]
        new_states: dict[tuple[int, ...], object] = {}
        for state, val in states.items():
            entries = {}
            for idx, i in enumerate(carried):
                entries[i] = state[idx]
            starter = c - x0 + 1
            if starter in act and starter <= k and starter not in entries:
                entries[starter] = y0
            # choose exit rows from the top path down; each range is
            # independent because the bound uses the entry row above.
            choices: list[list[int]] = []
            ok = True
            ender = c - x1 + k
            for pos, i in enumerate(act):
                e = entries[i]
                upper = y1 if pos == 0 else entries[act[pos - 1]] - 1
                if i == ender:
                    if e <= y1 <= upper:
                        choices.append([y1])
                    else:
                        ok = False
                        break
                else:
                    if e > upper:
                        ok = False
                        break
                    choices.append(list(range(e, upper + 1)))
            if not ok:
                continue
            for combo in itertools.product(*choices):
                weight = val
                for i, r in zip(act, combo):
                    weight = ops.mul(weight, segment(c, entries[i], r))
                key = tuple(r for i, r in zip(act, combo) if i in nxt)
                if key in new_states:
                    new_states[key] = ops.add(new_states[key], weight)
                else:
                    new_states[key] = weight
        states = new_states
        if not states:
            return ops.zero
    return states.get((), ops.zero)


def multi_partition(env: Environment, parts: Sequence[Box],
                    budget: int = DEFAULT_PATH_BUDGET):
    """Partition value over tuples of pairwise disjoint paths.

    Supported shapes: diagonal families (frontier DP), endpoints whose parts
    split into cell-disjoint groups (product over groups), and small general
    tuples (path enumeration within the budget).
    """
    parts = tuple(parts)
    if not parts:
        return env.ops().one
    for p in parts:
        if not env.window.contains_box(p):
            raise OutOfWindow(f"{p!r} outside window {env.window!r}")
    if not is_feasible(parts):
        raise InfeasibleEndpoint(f"no disjoint paths for {parts!r}")
    return _multi_dispatch(env, parts, budget)


def _multi_dispatch(env: Environment, parts: Endpoint, budget: int):
    ops = env.ops()
    if len(parts) == 1:
        return single_partition(env, parts[0])
    diag = _diagonal_pattern(parts)
    if diag is not None:
        base, orientation = diag
        if orientation is Orientation.ROW_SHIFTED:
            return _frontier_diagonal(env, base, len(parts))
        return _frontier_diagonal(transpose_env(env), base.transpose(), len(parts))
    groups = _disjoint_groups(parts)
    if len(groups) > 1:
        acc = ops.one
        for grp in groups:
            acc = ops.mul(acc, _multi_dispatch(env, grp, budget))
        return acc
    return _brute_force_value(env, parts, budget)


def _disjoint_groups(parts: Endpoint) -> list[Endpoint]:
    """Group the parts so that different groups occupy disjoint cells."""
    n = len(parts)
    labels = list(range(n))

    def find(i):
        while labels[i] != i:
            labels[i] = labels[labels[i]]
            i = labels[i]
        return i

    for i, j in itertools.combinations(range(n), 2):
        if not are_disjoint(parts[i], parts[j]):
            labels[find(i)] = find(j)
    grouped: dict[int, list[Box]] = {}
    for i in range(n):
        grouped.setdefault(find(i), []).append(parts[i])
    return [tuple(v) for v in grouped.values()]


def brute_force_multi(env: Environment, parts: Sequence[Box],
                      budget: int = DEFAULT_PATH_BUDGET):
    """Oracle: explicit enumeration of disjoint path tuples."""
    parts = tuple(parts)
    if not parts:
        return env.ops().one
    for p in parts:
        if not env.window.contains_box(p):
            raise OutOfWindow(f"{p!r} outside window {env.window!r}")
    if not is_feasible(parts, budget):
        raise InfeasibleEndpoint(f"no disjoint paths for {parts!r}")
    return _brute_force_value(env, parts, budget)


def _check_budget(parts: Endpoint, budget: int):
    product = 1
    for p in parts:
        product *= path_count(p)
        if product > budget:
            raise BudgetExceeded(f"path tuple count {product} exceeds budget {budget}")


def _brute_force_value(env: Environment, parts: Endpoint, budget: int):
    _check_budget(parts, budget)
    ops = env.ops()
    order = sorted(range(len(parts)), key=lambda i: path_count(parts[i]))
    acc = ops.zero

    weights = []
    sets = []
    for i in order:
        weights.append([path_weight(env, p) for p in box_paths(parts[i])])
        sets.append(_box_path_sets(parts[i]))

    def rec(depth: int, used: frozenset[Point], weight):
        nonlocal acc
        if depth == len(order):
            acc = ops.add(acc, weight)
            return
        for pset, pw in zip(sets[depth], weights[depth]):
            if used & pset:
                continue
            rec(depth + 1, used | pset, ops.mul(weight, pw))

    rec(0, frozenset(), ops.one)
    return acc


@functools.lru_cache(maxsize=65536)
def is_feasible(parts: Endpoint, budget: int = DEFAULT_PATH_BUDGET) -> bool:
    """Whether some tuple of pairwise disjoint paths realizes the endpoint."""
    parts = tuple(parts)
    if not parts:
        return True
    groups = _disjoint_groups(parts)
    if len(groups) > 1:
        return all(is_feasible(g, budget) for g in groups)
    if len(parts) == 1:
        return True
    if _diagonal_pattern(parts) is not None:
        return True
    _check_budget(parts, budget)
    order = sorted(range(len(parts)), key=lambda i: path_count(parts[i]))
    sets = [_box_path_sets(parts[i]) for i in order]

    def rec(depth: int, used: frozenset[Point]) -> bool:
        if depth == len(order):
            return True
        return any(rec(depth + 1, used | pset)
                   for pset in sets[depth] if not (used & pset))

    return rec(0, frozenset())


# ---------------------------------------------------------------------------
# Profiles, boundaries, restrictions
# ---------------------------------------------------------------------------

def delta_profile(env: Environment, u: Box) -> tuple:
    """Successive diagonal increments: differences of Z(u^k) in max-plus,
    ratios in sum-product, with Z(u^0) the multiplicative identity."""
    ops = env.ops()
    kmax = min(u.width, u.height)
    prev = ops.one
    out = []
    for k in range(1, kmax + 1):
        cur = multi_partition(env, diagonal_endpoint(u, k))
        if cur is BOTTOM or prev is BOTTOM:
            raise NoAdmissiblePath(f"diagonal value of order {k} is unreachable")
        out.append(ops.div(cur, prev))
        prev = cur
    return tuple(out)


def boundary_partition(env: Environment, starts: Mapping[Point, float],
                       ends: Mapping[Point, float]):
    """Max-plus value with boundary increments at start and end points.

    ``-inf`` entries disable a point.  Raises when no start lies weakly
    below-left of any end.
    """
    if env.semiring is not SemiringTag.MAX_PLUS:
        raise WrongSemiring("boundary values are a max-plus notion")
    ops = env.ops()
    best = BOTTOM
    feasible = False
    for p, fp in starts.items():
        for q, gq in ends.items():
            if not points_nearrow(p, q):
                continue
            feasible = True
            if fp == float("-inf") or gq == float("-inf"):
                continue
            z = single_partition(env, Box(p[0], p[1], q[0], q[1]))
            if z is BOTTOM:
                continue
            best = ops.add(best, z + fp + gq)
    if not feasible:
        raise NoFeasiblePair("no ordered start/end pair")
    return best


def restricted_partition(env: Environment, u: Box, region: Iterable[Point]):
    """Partition value over u-paths staying inside the region."""
    region = frozenset(region)
    if not all(u.contains_cell(c) for c in region):
        raise PreconditionViolated("region leaves the box")
    ops = env.ops()
    values: dict[Point, object] = {}
    for y in range(u.y0, u.y1 + 1):
        for x in range(u.x0, u.x1 + 1):
            if (x, y) not in region:
                continue
            if x == u.x0 and y == u.y0:
                best = ops.one
            else:
                best = ops.zero
                if (x - 1, y) in values:
                    best = ops.add(best, values[(x - 1, y)])
                if (x, y - 1) in values:
                    best = ops.add(best, values[(x, y - 1)])
            v = env.value_at(x, y)
            values[(x, y)] = ops.zero if v is None else ops.mul(v, best)
    result = values.get(u.hi, ops.zero)
    if result is BOTTOM or (env.semiring is SemiringTag.SUM_PRODUCT and result == 0):
        raise NoAdmissiblePath("no admissible path through the region")
    return result


# ---------------------------------------------------------------------------
# Geodesics and quenched sampling
# ---------------------------------------------------------------------------

def leftmost_geodesic(env: Environment, u: Box) -> Path:
    """The geodesic that dominates every other one in the down-right order.

    Traceback from the top corner prefers the vertical predecessor on ties,
    which yields the path characterized by: for every geodesic cell v there
    is a returned cell v' with v weakly left of and weakly above v'.
    """
    if env.semiring is not SemiringTag.MAX_PLUS:
        raise WrongSemiring("geodesics are a max-plus notion")
    zs = prefix_values(env, u)
    cells = [u.hi]
    x, y = u.hi
    while (x, y) != u.lo:
        if x == u.x0:
            y -= 1
        elif y == u.y0:
            x -= 1
        else:
            vert, horiz = zs[(x, y - 1)], zs[(x - 1, y)]
            if vert is BOTTOM and horiz is BOTTOM:
                raise NoAdmissiblePath("no path reaches the corner")
            if horiz is BOTTOM or (vert is not BOTTOM and vert >= horiz):
                y -= 1
            else:
                x -= 1
        cells.append((x, y))
    return tuple(reversed(cells))


def all_geodesics(env: Environment, u: Box) -> list[Path]:
    """Every maximizing path (oracle-sized boxes only)."""
    if env.semiring is not SemiringTag.MAX_PLUS:
        raise WrongSemiring("geodesics are a max-plus notion")
    best = single_partition(env, u)
    return [p for p in box_paths(u) if path_weight(env, p) == best]


def disjoint_geodesics_exist(env: Environment, parts: Sequence[Box],
                             budget: int = DEFAULT_PATH_BUDGET) -> bool:
    """True iff disjoint geodesics exist for all parts simultaneously,
    detected by comparing the joint value with the sum of single values."""
    if env.semiring is not SemiringTag.MAX_PLUS:
        raise WrongSemiring("geodesics are a max-plus notion")
    parts = tuple(parts)
    joint = multi_partition(env, parts, budget)
    singles = env.ops().prod(single_partition(env, p) for p in parts)
    return joint == singles


def quenched_sample(env: Environment, u: Box, rng: RandomSource) -> Path:
    """Sample a u-path with probability proportional to its weight product,
    by exact backward transitions over prefix partition values."""
    if env.semiring is not SemiringTag.SUM_PRODUCT:
        raise WrongSemiring("quenched measures are a sum-product notion")
    zs = prefix_values(env, u)
    stream = UniformStream(rng)
    cells = [u.hi]
    x, y = u.hi
    while (x, y) != u.lo:
        if x == u.x0:
            y -= 1
        elif y == u.y0:
            x -= 1
        else:
            vert = zs[(x, y - 1)]
            horiz = zs[(x - 1, y)]
            total = vert + horiz
            if total == 0:
                raise NoAdmissiblePath("no admissible predecessor")
            if stream.next() < vert / total:
                y -= 1
            else:
                x -= 1
        cells.append((x, y))
    return tuple(reversed(cells))


# ---------------------------------------------------------------------------
# Determinantal route
# ---------------------------------------------------------------------------

def lgv_partition(env: Environment, parts: Sequence[Box]):
    """Sum-product exact value of a bottom-to-top endpoint family via the
    determinant of single-path values (nonintersecting path counting)."""
    if env.semiring is not SemiringTag.SUM_PRODUCT:
        raise WrongSemiring("the determinant route needs the sum-product semiring")
    if env.mode is NumericMode.FLOAT64:
        raise UnsupportedEndpointShape("exact mode required for the determinant route")
    parts = tuple(parts)
    if not parts:
        return env.ops().one
    y0 = parts[0].y0
    y1 = parts[0].y1
    if any(p.y0 != y0 or p.y1 != y1 for p in parts):
        raise UnsupportedEndpointShape("parts must share the same row span")
    starts = [p.x0 for p in parts]
    ends = [p.x1 for p in parts]
    if sorted(starts) != starts or len(set(starts)) != len(starts):
        raise UnsupportedEndpointShape("start columns must be strictly increasing")
    if sorted(ends) != ends or len(set(ends)) != len(ends):
        raise UnsupportedEndpointShape("end columns must be strictly increasing")
    k = len(parts)
    mat = [[_single_or_zero(env, starts[i], ends[j], y0, y1) for j in range(k)]
           for i in range(k)]
    return _determinant(mat)


def _single_or_zero(env: Environment, a: int, b: int, y0: int, y1: int):
    if a > b:
        return Fraction(0)
    v = single_partition(env, Box(a, y0, b, y1))
    return v


def _determinant(mat):
    k = len(mat)
    total = Fraction(0)
    for perm in itertools.permutations(range(k)):
        sign = 1
        seen = list(perm)
        for i in range(k):
            for j in range(i + 1, k):
                if seen[i] > seen[j]:
                    sign = -sign
        term = Fraction(1)
        for i in range(k):
            term *= mat[i][perm[i]]
        total += sign * term
    return total
