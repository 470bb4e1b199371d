"""Weight environments over a window box.

An environment assigns one scalar to every cell of its window (cells may be
masked out, e.g. for staircase-shaped images of the encoding map).  Samplers
for the three decoupled weight families are counter-based: the draw at a cell
depends only on (seed, stream, cell), never on iteration order.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .boxes import Box, Point
from .errors import (InvalidParams, NonPositiveWeight, OutOfWindow,
                     ShapeMismatch)
from .rng import RandomSource, np_uniforms
from .semiring import (BOTTOM, NumericMode, Semiring, SemiringTag,
                       semiring_for)


class Model(enum.Enum):
    GEOMETRIC = "geometric"
    EXPONENTIAL = "exponential"
    INVERSE_GAMMA = "inverse-gamma"
    BERNOULLI = "bernoulli"  # only used by negative controls


@dataclass(frozen=True)
class ParamSequences:
    """Sparse biinfinite parameter sequences with defaults.

    ``alpha`` is indexed by column, ``beta`` by row; unspecified indices take
    the default value.
    """

    alpha_default: float = 0.5
    beta_default: float = 0.5
    alpha: Mapping[int, float] = field(default_factory=dict)
    beta: Mapping[int, float] = field(default_factory=dict)

    def alpha_at(self, i: int) -> float:
        return self.alpha.get(i, self.alpha_default)

    def beta_at(self, j: int) -> float:
        return self.beta.get(j, self.beta_default)

    def validate_on(self, model: Model, window: Box):
        for x in range(window.x0, window.x1 + 1):
            for y in range(window.y0, window.y1 + 1):
                a, b = self.alpha_at(x), self.beta_at(y)
                if model is Model.GEOMETRIC:
                    if not 0 < a * b < 1:
                        raise InvalidParams(f"alpha*beta={a * b} at ({x},{y}) not in (0,1)")
                elif model in (Model.EXPONENTIAL, Model.INVERSE_GAMMA):
                    if a + b <= 0:
                        raise InvalidParams(f"alpha+beta={a + b} at ({x},{y}) not positive")
                elif model is Model.BERNOULLI:
                    if not 0 < a * b < 1:
                        raise InvalidParams("bernoulli success weight must lie in (0,1)")

    def to_json(self) -> dict:
        return {
            "alpha": {str(k): v for k, v in sorted(self.alpha.items())} | {"default": self.alpha_default},
            "beta": {str(k): v for k, v in sorted(self.beta.items())} | {"default": self.beta_default},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ParamSequences":
        alpha = dict(data.get("alpha", {}))
        beta = dict(data.get("beta", {}))
        a_def = float(alpha.pop("default", 0.5))
        b_def = float(beta.pop("default", 0.5))
        return cls(alpha_default=a_def, beta_default=b_def,
                   alpha={int(k): float(v) for k, v in alpha.items()},
                   beta={int(k): float(v) for k, v in beta.items()})

    def is_homogeneous_on(self, window: Box) -> bool:
        a = {self.alpha_at(x) for x in range(window.x0, window.x1 + 1)}
        b = {self.beta_at(y) for y in range(window.y0, window.y1 + 1)}
        return len(a) == 1 and len(b) == 1


@dataclass(frozen=True)
class Environment:
    """Immutable weight grid.  ``rows[y - y0][x - x0]`` is the cell value;
    ``None`` marks a cell outside the support (treated as forbidden)."""

    window: Box
    rows: tuple[tuple[object, ...], ...]
    semiring: SemiringTag
    mode: NumericMode

    def __post_init__(self):
        if len(self.rows) != self.window.height or any(
                len(r) != self.window.width for r in self.rows):
            raise ShapeMismatch("grid does not match the window")

    def value_at(self, x: int, y: int):
        if not self.window.contains_cell((x, y)):
            raise OutOfWindow(f"cell ({x},{y}) outside {self.window!r}")
        return self.rows[y - self.window.y0][x - self.window.x0]

    def supports(self, cell: Point) -> bool:
        return (self.window.contains_cell(cell)
                and self.rows[cell[1] - self.window.y0][cell[0] - self.window.x0] is not None)

    def ops(self) -> Semiring:
        return semiring_for(self.semiring)

    def cells(self) -> Iterator[Point]:
        for c in self.window.cells():
            if self.supports(c):
                yield c

    def total(self):
        return sum(v for row in self.rows for v in row if v is not None)

    def to_json(self) -> dict:
        def enc(v):
            if v is None:
                return None
            if isinstance(v, Fraction):
                return f"{v.numerator}/{v.denominator}"
            return v

        return {
            "window": self.window.to_json(),
            "semiring": self.semiring.value,
            "mode": self.mode.value,
            "values": [enc(v) for row in self.rows for v in row],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Environment":
        window = Box.from_json(data["window"])
        mode = NumericMode(data["mode"])

        def dec(v):
            if v is None:
                return None
            if isinstance(v, str):
                num, den = v.split("/")
                return Fraction(int(num), int(den))
            if mode is NumericMode.EXACT_INT:
                return int(v)
            if mode is NumericMode.EXACT_RATIONAL:
                return Fraction(v)
            return float(v)

        flat = [dec(v) for v in data["values"]]
        if len(flat) != window.area:
            raise ShapeMismatch("value count does not match the window")
        w = window.width
        rows = tuple(tuple(flat[i * w:(i + 1) * w]) for i in range(window.height))
        return cls(window, rows, SemiringTag(data["semiring"]), mode)


def from_matrix(window: Box, values: Mapping[Point, object] | Sequence[Sequence[object]],
                semiring: SemiringTag, mode: NumericMode) -> Environment:
    """Deterministic environment from explicit values.

    ``values`` is either a cell-to-value mapping covering the window exactly,
    or a row-major nested sequence (lowest row first).
    """
    if isinstance(values, Mapping):
        cells = set(values.keys())
        expected = set(window.cells())
        if cells != expected:
            raise ShapeMismatch("cell keys do not cover the window exactly")
        rows = tuple(tuple(values[(x, y)] for x in range(window.x0, window.x1 + 1))
                     for y in range(window.y0, window.y1 + 1))
    else:
        if len(values) != window.height or any(len(r) != window.width for r in values):
            raise ShapeMismatch("nested rows do not match the window")
        rows = tuple(tuple(r) for r in values)
    if semiring is SemiringTag.SUM_PRODUCT and mode is not NumericMode.FLOAT64:
        for row in rows:
            for v in row:
                if v is None or v <= 0:
                    raise NonPositiveWeight(f"sum-product exact weight {v!r} not positive")
    return Environment(window, rows, semiring, mode)


def transpose_env(env: Environment) -> Environment:
    rows = tuple(tuple(env.rows[y][x] for y in range(env.window.height))
                 for x in range(env.window.width))
    return Environment(env.window.transpose(), rows, env.semiring, env.mode)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def _param_grids(model: Model, window: Box, params: ParamSequences):
    xs = np.arange(window.x0, window.x1 + 1)
    ys = np.arange(window.y0, window.y1 + 1)
    a = np.array([params.alpha_at(int(x)) for x in xs])[None, :]
    b = np.array([params.beta_at(int(y)) for y in ys])[:, None]
    if model in (Model.GEOMETRIC, Model.BERNOULLI):
        return a * b
    return a + b


def sample_batch(model: Model, window: Box, params: ParamSequences,
                 seed: int, stream0: int, count: int) -> np.ndarray:
    """Sample ``count`` independent environments as an (N, H, W) array.

    Replicate i uses stream ``stream0 + i``; entries are keyed by cell, so
    the result is independent of batching.
    """
    params.validate_on(model, window)
    h, w = window.height, window.width
    streams = (stream0 + np.arange(count, dtype=np.int64))[:, None, None]
    xs = np.arange(window.x0, window.x1 + 1, dtype=np.int64)[None, None, :]
    ys = np.arange(window.y0, window.y1 + 1, dtype=np.int64)[None, :, None]
    seed_arr = np.int64(seed)
    grid = _param_grids(model, window, params)[None, :, :]

    if model is Model.GEOMETRIC:
        u = np_uniforms([seed_arr, streams, xs, ys, 0])
        out = np.floor(np.log1p(-u) / np.log(grid))
        return out.astype(np.int64)
    if model is Model.BERNOULLI:
        # success weight 1 with probability alpha*beta
        u = np_uniforms([seed_arr, streams, xs, ys, 0])
        return (u < grid).astype(np.int64)
    if model is Model.EXPONENTIAL:
        u = np_uniforms([seed_arr, streams, xs, ys, 0])
        return -np.log1p(-u) / grid
    if model is Model.INVERSE_GAMMA:
        g = _gamma_batch(grid * np.ones((count, h, w)), seed_arr, streams, xs, ys)
        return 1.0 / g
    raise InvalidParams(f"unknown model {model!r}")


def _gamma_batch(shape_arr, seed_arr, streams, xs, ys) -> np.ndarray:
    """Marsaglia-Tsang gamma draws, counter-keyed per cell and round."""
    a = np.asarray(shape_arr, dtype=np.float64)
    boost_needed = a < 1.0
    a_eff = np.where(boost_needed, a + 1.0, a)
    d = a_eff - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.full(a.shape, np.nan)
    remaining = np.ones(a.shape, dtype=bool)
    for rnd in range(64):
        if not remaining.any():
            break
        u1 = np_uniforms([seed_arr, streams, xs, ys, 3 * rnd + 1])
        u2 = np_uniforms([seed_arr, streams, xs, ys, 3 * rnd + 2])
        u3 = np_uniforms([seed_arr, streams, xs, ys, 3 * rnd + 3])
        u1 = np.clip(u1, 1e-300, 1.0 - 1e-16)
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        v = (1.0 + c * z) ** 3
        ok = (v > 0) & (np.log(np.clip(u3, 1e-300, 1.0)) <
                        0.5 * z * z + d - d * v + d * np.log(np.where(v > 0, v, 1.0)))
        accept = remaining & ok
        out = np.where(accept, d * v, out)
        remaining = remaining & ~accept
    if remaining.any():  # pragma: no cover - astronomically unlikely
        out = np.where(remaining, d, out)
    boost_u = np_uniforms([seed_arr, streams, xs, ys, 0])
    boost = np.where(boost_needed,
                     np.clip(boost_u, 1e-300, 1.0) ** (1.0 / np.where(boost_needed, a, 1.0)),
                     1.0)
    return out * boost


def sample(model: Model, window: Box, params: ParamSequences,
           rng: RandomSource) -> Environment:
    """Sample one environment; equal (seed, stream) gives an identical grid."""
    arr = sample_batch(model, window, params, rng.seed, rng.stream, 1)[0]
    if model in (Model.GEOMETRIC, Model.BERNOULLI):
        rows = tuple(tuple(int(v) for v in row) for row in arr)
        return Environment(window, rows, SemiringTag.MAX_PLUS, NumericMode.EXACT_INT)
    rows = tuple(tuple(float(v) for v in row) for row in arr)
    if model is Model.EXPONENTIAL:
        return Environment(window, rows, SemiringTag.MAX_PLUS, NumericMode.FLOAT64)
    return Environment(window, rows, SemiringTag.SUM_PRODUCT, NumericMode.FLOAT64)


# ---------------------------------------------------------------------------
# Exhaustive enumeration
# ---------------------------------------------------------------------------

def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        comp = []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(total + parts - 2 - prev)
        yield tuple(comp)


def composition_count(total: int, parts: int) -> int:
    if parts == 0:
        return 1 if total == 0 else 0
    return math.comb(total + parts - 1, parts - 1)


def enumerate_fillings(cells: Sequence[Point], total_sum_max: int,
                       max_entry: int | None = None) -> Iterator[dict[Point, int]]:
    """Every nonnegative-integer filling of ``cells`` with sum <= the cutoff,
    grouped by total sum ascending.  ``max_entry`` optionally caps each cell."""
    cells = list(cells)
    for c in range(total_sum_max + 1):
        for comp in compositions(c, len(cells)):
            if max_entry is not None and any(v > max_entry for v in comp):
                continue
            yield dict(zip(cells, comp))


def enumerate_environments(window: Box, total_sum_max: int) -> Iterator[Environment]:
    """Every nonnegative-integer max-plus grid on the window with entry sum
    at most ``total_sum_max``, each exactly once, by total sum ascending."""
    if total_sum_max < 0:
        raise InvalidParams("total_sum_max must be nonnegative")
    cells = list(window.cells())
    w = window.width
    for filling in enumerate_fillings(cells, total_sum_max):
        flat = [filling[c] for c in cells]
        rows = tuple(tuple(flat[i * w:(i + 1) * w]) for i in range(window.height))
        yield Environment(window, rows, SemiringTag.MAX_PLUS, NumericMode.EXACT_INT)


# ---------------------------------------------------------------------------
# Inhomogeneous rearrangements
# ---------------------------------------------------------------------------

def rearrangement_valid(blocks: Sequence, params: ParamSequences,
                        params_new: ParamSequences) -> bool:
    """Whether the new parameter sequences are an admissible rearrangement for
    a piecewise translation given by ``blocks`` (TranslationBlock sequence).

    For every block, every column interval cut out by the block's corner
    ranges must be matched, as a multiset, by the shifted interval of the new
    alpha sequence; likewise for rows and beta.
    """
    for blk in blocks:
        boxes = list(blk.boxes)
        if not boxes:
            continue
        dx, dy = blk.offset
        x0s = sorted(b.x0 for b in boxes)
        x1s = sorted(b.x1 for b in boxes)
        y0s = sorted(b.y0 for b in boxes)
        y1s = sorted(b.y1 for b in boxes)
        for a in range(x0s[0], x0s[-1] + 1):
            for b in range(x1s[0], x1s[-1] + 1):
                if a > b:
                    continue
                old = sorted(params.alpha_at(i) for i in range(a, b + 1))
                new = sorted(params_new.alpha_at(i + dx) for i in range(a, b + 1))
                if old != new:
                    return False
        for c in range(y0s[0], y0s[-1] + 1):
            for d in range(y1s[0], y1s[-1] + 1):
                if c > d:
                    continue
                old = sorted(params.beta_at(j) for j in range(c, d + 1))
                new = sorted(params_new.beta_at(j + dy) for j in range(c, d + 1))
                if old != new:
                    return False
    return True
