"""Invariance verification engine.

Two certification routes:

- exact: for homogeneous geometric weights, the law of a value vector is the
  count series of integer grids by total weight times a binomial prefactor,
  so equality of laws up to total weight C is a finite integer computation.
- statistical: seeded Monte Carlo two-sample comparison (per-coordinate
  Kolmogorov-Smirnov with a Bonferroni correction, plus an energy-distance
  permutation test on the joint vector).

The appendix counterexamples run through the same machinery as negative
controls: the exact route must find a mismatching coefficient and the Monte
Carlo route must reject.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .boxes import (Box, DisjointnessScenario, GeodesicScenario, Point,
                    PiecewiseTranslation, bounding_box, cells_of,
                    validate_statement_hypotheses)
from .environments import (Environment, Model, ParamSequences,
                           enumerate_fillings, rearrangement_valid,
                           sample_batch)
from .errors import (BudgetExceeded, HypothesesViolated, InvalidParams,
                     InvalidRearrangement, PreconditionViolated)
from .partition import (Endpoint, box_paths, endpoint_family)
from .rng import RandomSource, np_uniforms

# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    model: Model
    params: ParamSequences

    def to_json(self) -> dict:
        return {"name": self.model.value, **self.params.to_json()}

    @classmethod
    def from_json(cls, data: Mapping) -> "ModelSpec":
        return cls(Model(data["name"]), ParamSequences.from_json(data))


@dataclass(frozen=True)
class InvarianceStatement:
    """A validated map scenario with an endpoint selection and a weight model.

    Construction checks the scenario's hypotheses unless ``unchecked`` is
    set; negative controls use the unchecked path deliberately.
    """

    scenario: object
    model: ModelSpec
    endpoints: tuple[Endpoint, ...] = ()
    unchecked: bool = False

    def __post_init__(self):
        if not self.unchecked:
            validate_statement_hypotheses(self.scenario).raise_if_failed()
        if not self.endpoints:
            boxes = sorted(self.map().domain())
            object.__setattr__(self, "endpoints", tuple((b,) for b in boxes))
        mapping = self.map().mapping()
        for ep in self.endpoints:
            for b in ep:
                if b not in mapping:
                    raise PreconditionViolated(f"endpoint box {b!r} not in the map domain")

    def map(self) -> PiecewiseTranslation:
        return self.scenario.map()

    def image_endpoints(self) -> tuple[Endpoint, ...]:
        mapping = self.map().mapping()
        return tuple(tuple(mapping[b] for b in ep) for ep in self.endpoints)


# ---------------------------------------------------------------------------
# Exact generating-series certificates
# ---------------------------------------------------------------------------

MAX_EXACT_GRIDS = 5_000_000


def _lpp_value(box: Box, weights: Mapping[Point, int]) -> int:
    """Max-plus value of one box over a dict-backed integer grid."""
    prev: list[int | None] = [None] * box.width
    for y in range(box.y0, box.y1 + 1):
        cur: list[int | None] = [None] * box.width
        for ix, x in enumerate(range(box.x0, box.x1 + 1)):
            if x == box.x0 and y == box.y0:
                best = 0
            else:
                cands = []
                if prev[ix] is not None:
                    cands.append(prev[ix])
                if ix > 0 and cur[ix - 1] is not None:
                    cands.append(cur[ix - 1])
                best = max(cands)
            cur[ix] = weights[(x, y)] + best
        prev = cur
    return prev[-1]


def _endpoint_value(ep: Endpoint, weights: Mapping[Point, int]) -> int:
    if len(ep) == 1:
        return _lpp_value(ep[0], weights)
    from .environments import from_matrix
    from .partition import multi_partition
    from .semiring import NumericMode, SemiringTag
    window = bounding_box(ep)
    vals = {c: weights.get(c) for c in window.cells()}
    rows = tuple(tuple(vals[(x, y)] for x in range(window.x0, window.x1 + 1))
                 for y in range(window.y0, window.y1 + 1))
    env = Environment(window, rows, SemiringTag.MAX_PLUS, NumericMode.EXACT_INT)
    return multi_partition(env, ep)


def _count_profiles(endpoints: Sequence[Endpoint], cells: Sequence[Point],
                    cutoff: int, max_entry: int | None = None
                    ) -> dict[tuple, list[int]]:
    profiles: dict[tuple, list[int]] = {}
    for filling in enumerate_fillings(cells, cutoff, max_entry=max_entry):
        vec = tuple(_endpoint_value(ep, filling) for ep in endpoints)
        total = sum(filling.values())
        row = profiles.get(vec)
        if row is None:
            row = [0] * (cutoff + 1)
            profiles[vec] = row
        row[total] += 1
    return profiles


def _binomial_sign_poly(area: int, cutoff: int) -> list[int]:
    return [(-1) ** j * math.comb(area, j) if j <= area else 0
            for j in range(cutoff + 1)]


def _truncated_mul(a: Sequence[int], b: Sequence[int], cutoff: int) -> list[int]:
    out = [0] * (cutoff + 1)
    for i, ai in enumerate(a):
        if ai == 0 or i > cutoff:
            continue
        for j in range(0, cutoff - i + 1):
            bj = b[j] if j < len(b) else 0
            if bj:
                out[i + j] += ai * bj
    return out


@dataclass(frozen=True)
class ExactReport:
    equal: bool
    mismatches: tuple[tuple, ...]
    cutoff: int
    domain_area: int
    image_area: int
    vectors: int
    grids: int

    def to_json(self) -> dict:
        return {
            "equal": self.equal,
            "mismatches": [list(map(str, m)) for m in self.mismatches[:20]],
            "mismatch_count": len(self.mismatches),
            "cutoff": self.cutoff,
            "domain_area": self.domain_area,
            "image_area": self.image_area,
            "vectors": self.vectors,
            "grids": self.grids,
        }


def exact_geometric_invariance(st: InvarianceStatement, cutoff: int) -> ExactReport:
    """Certify equality of the two value-vector laws up to total weight
    ``cutoff``, for homogeneous geometric weights, by exact counting.

    Each side's count series is multiplied by its own (1 - q)^area prefactor,
    so windows of different cell area compare correctly.  The certificate is
    parameter-free: a pass certifies every geometric parameter at once.
    """
    if st.model.model is not Model.GEOMETRIC:
        raise InvalidParams("exact certificates require the geometric model")
    domain_cells = sorted(cells_of(st.map().domain()))
    image_cells = sorted(cells_of(st.map().image()))
    win_d = bounding_box(st.map().domain())
    win_i = bounding_box(st.map().image())
    if not (st.model.params.is_homogeneous_on(win_d)
            and st.model.params.is_homogeneous_on(win_i)):
        raise InvalidParams("exact certificates require homogeneous parameters")
    for cells in (domain_cells, image_cells):
        total = sum(math.comb(c + len(cells) - 1, len(cells) - 1)
                    for c in range(cutoff + 1))
        if total > MAX_EXACT_GRIDS:
            raise BudgetExceeded(f"{total} grids exceed the exact budget")

    dom_profiles = _count_profiles(st.endpoints, domain_cells, cutoff)
    img_profiles = _count_profiles(st.image_endpoints(), image_cells, cutoff)
    poly_d = _binomial_sign_poly(len(domain_cells), cutoff)
    poly_i = _binomial_sign_poly(len(image_cells), cutoff)

    zeros = [0] * (cutoff + 1)
    mismatches = []
    for vec in sorted(set(dom_profiles) | set(img_profiles)):
        a = _truncated_mul(dom_profiles.get(vec, zeros), poly_d, cutoff)
        b = _truncated_mul(img_profiles.get(vec, zeros), poly_i, cutoff)
        for degree, (ca, cb) in enumerate(zip(a, b)):
            if ca != cb:
                mismatches.append((vec, degree, ca, cb))
    grids = sum(sum(rows) for rows in dom_profiles.values())
    return ExactReport(not mismatches, tuple(mismatches), cutoff,
                       len(domain_cells), len(image_cells),
                       len(set(dom_profiles) | set(img_profiles)), grids)


@dataclass(frozen=True)
class CondIndepReport:
    ok: bool
    failing: tuple[tuple, ...]
    triples_checked: int
    grids: int
    cutoff: int

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "failing": [list(map(str, f)) for f in self.failing[:20]],
            "failing_count": len(self.failing),
            "triples_checked": self.triples_checked,
            "grids": self.grids,
            "cutoff": self.cutoff,
        }


def exact_conditional_independence(u: Box, cutoff: int,
                                   max_entry: int | None = None) -> CondIndepReport:
    """Check the decoupling factorization on a box by exact counting.

    For every pair of observable right-edge and top-edge value vectors with
    a common diagonal vector, the truncated count series must satisfy
    G_{h,v} * G_d = G_h * G_v coefficient-wise.  ``max_entry`` restricts the
    enumeration support (entries in {0..max_entry}), which breaks the
    factorization and is used as a counterfactual control.
    """
    h_eps = endpoint_family(u, "H")
    v_eps = endpoint_family(u, "V")
    kmax = min(u.width, u.height)
    cells = sorted(u.cells())
    total = sum(math.comb(c + len(cells) - 1, len(cells) - 1)
                for c in range(cutoff + 1))
    if max_entry is None and total > MAX_EXACT_GRIDS:
        raise BudgetExceeded(f"{total} grids exceed the exact budget")

    g_h: dict[tuple, list[int]] = {}
    g_v: dict[tuple, list[int]] = {}
    g_d: dict[tuple, list[int]] = {}
    g_hv: dict[tuple, list[int]] = {}
    grids = 0

    def bump(table, key, total_weight):
        row = table.get(key)
        if row is None:
            row = [0] * (cutoff + 1)
            table[key] = row
        row[total_weight] += 1

    for filling in enumerate_fillings(cells, cutoff, max_entry=max_entry):
        grids += 1
        hvec = tuple(_endpoint_value(ep, filling) for ep in h_eps)
        vvec = tuple(_endpoint_value(ep, filling) for ep in v_eps)
        dvec = hvec[:kmax]
        c = sum(filling.values())
        bump(g_h, hvec, c)
        bump(g_v, vvec, c)
        bump(g_d, dvec, c)
        bump(g_hv, (hvec, vvec), c)

    zeros = [0] * (cutoff + 1)
    failing = []
    checked = 0
    by_d_h: dict[tuple, list[tuple]] = {}
    by_d_v: dict[tuple, list[tuple]] = {}
    for hvec in g_h:
        by_d_h.setdefault(hvec[:kmax], []).append(hvec)
    for vvec in g_v:
        by_d_v.setdefault(vvec[:kmax], []).append(vvec)
    for dvec, row_d in g_d.items():
        for hvec in by_d_h.get(dvec, ()):
            for vvec in by_d_v.get(dvec, ()):
                checked += 1
                lhs = _truncated_mul(g_hv.get((hvec, vvec), zeros), row_d, cutoff)
                rhs = _truncated_mul(g_h[hvec], g_v[vvec], cutoff)
                for degree, (ca, cb) in enumerate(zip(lhs, rhs)):
                    if ca != cb:
                        failing.append((hvec, vvec, dvec, degree, ca, cb))
                        break
    return CondIndepReport(not failing, tuple(failing), checked, grids, cutoff)


# ---------------------------------------------------------------------------
# Batch value kernels
# ---------------------------------------------------------------------------

NEG_INF = float("-inf")


def _local(box: Box, window: Box) -> tuple[int, int, int, int]:
    return (box.x0 - window.x0, box.y0 - window.y0,
            box.x1 - window.x0, box.y1 - window.y0)


def batch_single_maxplus(weights: np.ndarray, window: Box, box: Box) -> np.ndarray:
    """Max-plus single-box values for a batch of grids (N, H, W)."""
    lx0, ly0, lx1, ly1 = _local(box, window)
    sub = weights[:, ly0:ly1 + 1, lx0:lx1 + 1].astype(np.float64, copy=True)
    h, w = sub.shape[1], sub.shape[2]
    for iy in range(h):
        for ix in range(w):
            if iy == 0 and ix == 0:
                continue
            if iy == 0:
                best = sub[:, 0, ix - 1]
            elif ix == 0:
                best = sub[:, iy - 1, 0]
            else:
                best = np.maximum(sub[:, iy, ix - 1], sub[:, iy - 1, ix])
            sub[:, iy, ix] += best
    return sub[:, h - 1, w - 1]


def batch_prefix_log_sumprod(weights: np.ndarray, window: Box, box: Box) -> np.ndarray:
    """log of the prefix partition values of the box, per grid."""
    lx0, ly0, lx1, ly1 = _local(box, window)
    logw = np.log(weights[:, ly0:ly1 + 1, lx0:lx1 + 1])
    out = np.empty_like(logw)
    h, w = logw.shape[1], logw.shape[2]
    for iy in range(h):
        for ix in range(w):
            if iy == 0 and ix == 0:
                base = 0.0
            elif iy == 0:
                base = out[:, 0, ix - 1]
            elif ix == 0:
                base = out[:, iy - 1, 0]
            else:
                base = np.logaddexp(out[:, iy, ix - 1], out[:, iy - 1, ix])
            out[:, iy, ix] = logw[:, iy, ix] + base
    return out


def batch_prefix_maxplus(weights: np.ndarray, window: Box, box: Box) -> np.ndarray:
    lx0, ly0, lx1, ly1 = _local(box, window)
    sub = weights[:, ly0:ly1 + 1, lx0:lx1 + 1].astype(np.float64, copy=True)
    h, w = sub.shape[1], sub.shape[2]
    for iy in range(h):
        for ix in range(w):
            if iy == 0 and ix == 0:
                continue
            if iy == 0:
                best = sub[:, 0, ix - 1]
            elif ix == 0:
                best = sub[:, iy - 1, 0]
            else:
                best = np.maximum(sub[:, iy, ix - 1], sub[:, iy - 1, ix])
            sub[:, iy, ix] += best
    return sub


def _path_cell_indices(box: Box, window: Box) -> list[np.ndarray]:
    """Per path, flat indices of its cells in the (H, W) window grid."""
    w = window.width
    out = []
    for path in box_paths(box):
        idx = np.array([(c[1] - window.y0) * w + (c[0] - window.x0) for c in path])
        out.append(idx)
    return out


def batch_multi_maxplus(weights: np.ndarray, window: Box,
                        parts: Sequence[Box], budget: int = 200_000) -> np.ndarray:
    """Multi-point max-plus values per grid via enumerated path tuples."""
    n = weights.shape[0]
    flat = weights.reshape(n, -1)
    per_part_weights = []
    per_part_sets = []
    product = 1
    for p in parts:
        idxs = _path_cell_indices(p, window)
        product *= len(idxs)
        if product > budget:
            raise BudgetExceeded("path tuple enumeration too large")
        per_part_weights.append(np.stack([flat[:, i].sum(axis=1) for i in idxs], axis=1))
        per_part_sets.append([frozenset(map(int, i)) for i in idxs])

    acc = np.full(n, NEG_INF)

    def rec(depth: int, used: frozenset, total: np.ndarray):
        nonlocal acc
        if depth == len(parts):
            acc = np.maximum(acc, total)
            return
        for j, cells in enumerate(per_part_sets[depth]):
            if used & cells:
                continue
            rec(depth + 1, used | cells, total + per_part_weights[depth][:, j])

    rec(0, frozenset(), np.zeros(n))
    return acc


# ---------------------------------------------------------------------------
# Two-sample machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MCConfig:
    level: float = 0.01
    energy_permutations: int = 200
    energy_subsample: int = 2000
    distinct_limit: int = 4096


@dataclass(frozen=True)
class MCReport:
    verdict: str
    ks_stats: tuple[float, ...]
    ks_pvalues: tuple[float, ...]
    ks_adjusted: tuple[float, ...]
    energy_stat: float
    energy_pvalue: float
    energy_mode: str
    n_a: int
    n_b: int
    permutations: int
    level: float
    seeds: dict

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"

    def min_adjusted_p(self) -> float:
        return min(list(self.ks_adjusted) + [self.energy_pvalue])

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "ks_stats": list(self.ks_stats),
            "ks_pvalues": list(self.ks_pvalues),
            "ks_adjusted": list(self.ks_adjusted),
            "energy_stat": self.energy_stat,
            "energy_pvalue": self.energy_pvalue,
            "energy_mode": self.energy_mode,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "permutations": self.permutations,
            "level": self.level,
            "seeds": self.seeds,
        }


def _energy_stat_counts(dist: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    na, nb = a.sum(), b.sum()
    da = dist @ a
    db = dist @ b
    return float(2.0 * (a @ db) / (na * nb) - (a @ da) / (na * na) - (b @ db) / (nb * nb))


def _energy_test(a: np.ndarray, b: np.ndarray, permutations: int,
                 subsample: int, distinct_limit: int, seed: int) -> tuple[float, float, str]:
    """Energy-distance permutation test; returns (stat, p, mode).

    Discrete data collapses to value counts, which keeps the full sample and
    makes permutations multivariate-hypergeometric draws; continuous data
    falls back to a fixed-size subsample with label permutations.
    """
    pooled = np.vstack([a, b])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    std[std == 0] = 1.0
    a_std = (a - mean) / std
    b_std = (b - mean) / std
    rng = np.random.default_rng(seed)

    pooled_std = np.vstack([a_std, b_std])
    values, inverse = np.unique(pooled_std, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    if values.shape[0] <= distinct_limit:
        counts_a = np.bincount(inverse[:len(a)], minlength=values.shape[0]).astype(np.float64)
        counts_b = np.bincount(inverse[len(a):], minlength=values.shape[0]).astype(np.float64)
        sq = (values * values).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (values @ values.T)
        np.maximum(d2, 0, out=d2)
        dist = np.sqrt(d2)
        obs = _energy_stat_counts(dist, counts_a, counts_b)
        totals = (counts_a + counts_b).astype(np.int64)
        n_a = int(counts_a.sum())
        draws = rng.multivariate_hypergeometric(totals, n_a, size=permutations).astype(np.float64)
        rest = totals[None, :].astype(np.float64) - draws
        m = draws @ dist
        t_d = dist @ totals.astype(np.float64)
        na = float(n_a)
        nb = float(totals.sum() - n_a)
        cross = (m * rest).sum(axis=1)
        within_a = (m * draws).sum(axis=1)
        within_b = ((t_d[None, :] - m) * rest).sum(axis=1)
        perm_stats = 2.0 * cross / (na * nb) - within_a / (na * na) - within_b / (nb * nb)
        pvalue = float((1 + np.sum(perm_stats >= obs - 1e-12)) / (permutations + 1))
        return obs, pvalue, "counts"

    ns = min(len(a), len(b), subsample)
    xa = a_std[:ns]
    xb = b_std[:ns]
    pool = np.vstack([xa, xb]).astype(np.float32)
    sq = (pool * pool).sum(axis=1)
    gram = pool @ pool.T
    d2 = sq[:, None] + sq[None, :] - 2 * gram
    np.maximum(d2, 0, out=d2)
    dist = np.sqrt(d2)
    n2 = 2 * ns
    labels = np.zeros((n2, permutations + 1), dtype=np.float32)
    labels[:ns, 0] = 1.0
    for k in range(1, permutations + 1):
        idx = rng.permutation(n2)[:ns]
        labels[idx, k] = 1.0
    m = dist @ labels
    ones_d = dist.sum(axis=0)
    within_a = (labels * m).sum(axis=0)
    cross = (ones_d[:, None] * labels).sum(axis=0) - within_a
    total_sum = float(ones_d.sum())
    within_b = total_sum - 2 * cross - within_a
    nf = float(ns)
    all_stats = 2.0 * cross / (nf * nf) - within_a / (nf * nf) - within_b / (nf * nf)
    obs = float(all_stats[0])
    perm_stats = all_stats[1:]
    pvalue = float((1 + np.sum(perm_stats >= obs - 1e-12)) / (permutations + 1))
    return obs, pvalue, "subsample"


def two_sample_report(a: np.ndarray, b: np.ndarray, config: MCConfig,
                      seeds: dict) -> MCReport:
    """Per-coordinate KS (Bonferroni) plus a joint energy permutation test."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
        b = b[:, None]
    d = a.shape[1]
    ks_stats = []
    ks_pvalues = []
    for j in range(d):
        res = scipy_stats.ks_2samp(a[:, j], b[:, j], method="asymp")
        ks_stats.append(float(res.statistic))
        ks_pvalues.append(float(res.pvalue))
    ks_adjusted = [min(1.0, p * d) for p in ks_pvalues]
    perm_seed = seeds.get("perm", 0)
    stat, pvalue, mode = _energy_test(a, b, config.energy_permutations,
                                      config.energy_subsample,
                                      config.distinct_limit, perm_seed)
    worst = min(ks_adjusted + [pvalue])
    verdict = "accept" if worst >= config.level else "reject"
    return MCReport(verdict, tuple(ks_stats), tuple(ks_pvalues),
                    tuple(ks_adjusted), stat, pvalue, mode,
                    len(a), len(b), config.energy_permutations,
                    config.level, seeds)


# ---------------------------------------------------------------------------
# Monte Carlo invariance tests
# ---------------------------------------------------------------------------


def _sample_window(boxes) -> Box:
    win = bounding_box(boxes)
    if win is None:
        raise PreconditionViolated("no boxes to sample over")
    return win


def _batch_endpoint_values(weights: np.ndarray, window: Box,
                           endpoints: Sequence[Endpoint], maxplus: bool,
                           log_scale: bool) -> np.ndarray:
    cols = []
    for ep in endpoints:
        if maxplus:
            if len(ep) == 1:
                cols.append(batch_single_maxplus(weights, window, ep[0]))
            else:
                cols.append(batch_multi_maxplus(weights, window, ep))
        else:
            if len(ep) != 1:
                raise PreconditionViolated("sum-product batch values support single boxes")
            pref = batch_prefix_log_sumprod(weights, window, ep[0])
            cols.append(pref[:, -1, -1])
    out = np.stack(cols, axis=1)
    if maxplus and log_scale:
        raise PreconditionViolated("log scale only applies to sum-product values")
    return out


def mc_invariance(st: InvarianceStatement, n_samples: int, rng: RandomSource,
                  config: MCConfig = MCConfig()) -> MCReport:
    """Fresh-sample two-sided comparison of the endpoint value vectors.

    Side A draws environments covering the domain, side B fresh environments
    covering the image; replicate i uses stream rng.stream + i (side A) and
    rng.stream + n + i (side B), making reports reproducible bit for bit.
    """
    if st.model.model is Model.INVERSE_GAMMA:
        maxplus = False
    elif st.model.model in (Model.GEOMETRIC, Model.EXPONENTIAL, Model.BERNOULLI):
        maxplus = True
    else:
        raise InvalidParams(f"unsupported model {st.model.model!r}")
    win_a = _sample_window(st.map().domain())
    win_b = _sample_window(st.map().image())
    wa = sample_batch(st.model.model, win_a, st.model.params,
                      rng.seed, rng.stream, n_samples).astype(np.float64)
    wb = sample_batch(st.model.model, win_b, st.model.params,
                      rng.seed, rng.stream + n_samples, n_samples).astype(np.float64)
    vec_a = _batch_endpoint_values(wa, win_a, st.endpoints, maxplus, False)
    vec_b = _batch_endpoint_values(wb, win_b, st.image_endpoints(), maxplus, False)
    seeds = {"seed": rng.seed, "stream_a": rng.stream,
             "stream_b": rng.stream + n_samples, "perm": rng.seed + 1}
    return two_sample_report(vec_a, vec_b, config, seeds)


def mc_inhomogeneous(st: InvarianceStatement, params_new: ParamSequences,
                     n_samples: int, rng: RandomSource,
                     config: MCConfig = MCConfig()) -> MCReport:
    """Two-sample comparison across a map with rearranged parameters."""
    blocks = st.scenario.blocks
    if not rearrangement_valid(blocks, st.model.params, params_new):
        raise InvalidRearrangement("parameter sequences do not match the map")
    maxplus = st.model.model is not Model.INVERSE_GAMMA
    win_a = _sample_window(st.map().domain())
    win_b = _sample_window(st.map().image())
    wa = sample_batch(st.model.model, win_a, st.model.params,
                      rng.seed, rng.stream, n_samples).astype(np.float64)
    wb = sample_batch(st.model.model, win_b, params_new,
                      rng.seed, rng.stream + n_samples, n_samples).astype(np.float64)
    vec_a = _batch_endpoint_values(wa, win_a, st.endpoints, maxplus, False)
    vec_b = _batch_endpoint_values(wb, win_b, st.image_endpoints(), maxplus, False)
    seeds = {"seed": rng.seed, "stream_a": rng.stream,
             "stream_b": rng.stream + n_samples, "perm": rng.seed + 1}
    return two_sample_report(vec_a, vec_b, config, seeds)


# ---------------------------------------------------------------------------
# Path-statistic tests (geodesics, quenched measures, disjointness)
# ---------------------------------------------------------------------------

_SENTINEL = -(10 ** 6)


def _batch_traceback(prefix: np.ndarray, box: Box, window: Box,
                     vertical_pref: np.ndarray | None) -> np.ndarray:
    """Path cells (N, L, 2) in window-local coordinates, traced from the top
    corner.  ``vertical_pref`` is None for geodesics (argmax with vertical
    ties) or an (N, L-1) uniform array for quenched sampling."""
    n = prefix.shape[0]
    lx0, ly0, lx1, ly1 = _local(box, window)
    h, w = ly1 - ly0 + 1, lx1 - lx0 + 1
    length = h + w - 1
    xs = np.full(n, lx1, dtype=np.int64)
    ys = np.full(n, ly1, dtype=np.int64)
    cells = np.empty((n, length, 2), dtype=np.int64)
    cells[:, length - 1, 0] = xs
    cells[:, length - 1, 1] = ys
    idx = np.arange(n)
    for t in range(length - 2, -1, -1):
        at_left = xs == lx0
        at_bottom = ys == ly0
        ys_m = np.maximum(ys - 1, 0)
        xs_m = np.maximum(xs - 1, 0)
        down = prefix[idx, ys_m, xs]
        left = prefix[idx, ys, xs_m]
        if vertical_pref is None:
            go_down = (~at_bottom) & (at_left | (down >= left))
        else:
            with np.errstate(over="ignore"):
                p_down = 1.0 / (1.0 + np.exp(left - down))
            go_down = (~at_bottom) & (at_left | (vertical_pref[:, t] < p_down))
        ys = np.where(go_down, ys - 1, ys)
        xs = np.where(go_down, xs, xs - 1)
        cells[:, t, 0] = xs
        cells[:, t, 1] = ys
    return cells


def _fragment_features(cells: np.ndarray, window: Box, excluded: Box,
                       shift_back: Point = (0, 0)) -> np.ndarray:
    """Feature vector of a path with one box removed: cell count outside the
    box plus the global coordinates adjacent to the excluded stretch."""
    gx = cells[:, :, 0] + window.x0 - shift_back[0]
    gy = cells[:, :, 1] + window.y0 - shift_back[1]
    ex = excluded.translate((-shift_back[0], -shift_back[1]))
    inside = ((gx >= ex.x0) & (gx <= ex.x1) & (gy >= ex.y0) & (gy <= ex.y1))
    n, length = inside.shape
    count_out = length - inside.sum(axis=1)
    any_in = inside.any(axis=1)
    first_in = np.argmax(inside, axis=1)
    last_in = length - 1 - np.argmax(inside[:, ::-1], axis=1)
    feats = np.full((n, 5), float(_SENTINEL))
    feats[:, 0] = count_out
    has_pre = any_in & (first_in > 0)
    has_post = any_in & (last_in < length - 1)
    rows = np.arange(n)
    pre_idx = np.maximum(first_in - 1, 0)
    post_idx = np.minimum(last_in + 1, length - 1)
    feats[has_pre, 1] = gx[rows, pre_idx][has_pre]
    feats[has_pre, 2] = gy[rows, pre_idx][has_pre]
    feats[has_post, 3] = gx[rows, post_idx][has_post]
    feats[has_post, 4] = gy[rows, post_idx][has_post]
    return feats


def _geodesic_side(model: Model, params, boxes_u, boxes_v, w_box, x_box,
                   seed, stream0, n, quenched: bool, shift_back: Point):
    win = _sample_window(list(boxes_u) + list(boxes_v) + [w_box, x_box])
    weights = sample_batch(model, win, params, seed, stream0, n).astype(np.float64)
    feats = []
    for i, b in enumerate(sorted(boxes_u)):
        pref = (batch_prefix_log_sumprod(weights, win, b) if quenched
                else batch_prefix_maxplus(weights, win, b))
        unif = (np_uniforms([np.int64(seed), stream0 + np.arange(n, dtype=np.int64)[:, None],
                             np.arange(b.width + b.height - 2, dtype=np.int64)[None, :],
                             1000 + i])
                if quenched else None)
        cells = _batch_traceback(_embed_prefix(pref, win, b), b, win, unif)
        feats.append(_fragment_features(cells, win, w_box))
    for i, b in enumerate(sorted(boxes_v)):
        pref = (batch_prefix_log_sumprod(weights, win, b) if quenched
                else batch_prefix_maxplus(weights, win, b))
        unif = (np_uniforms([np.int64(seed), stream0 + np.arange(n, dtype=np.int64)[:, None],
                             np.arange(b.width + b.height - 2, dtype=np.int64)[None, :],
                             2000 + i])
                if quenched else None)
        cells = _batch_traceback(_embed_prefix(pref, win, b), b, win, unif)
        feats.append(_fragment_features(cells, win, x_box, shift_back))
    return np.hstack(feats)


def _embed_prefix(pref: np.ndarray, window: Box, box: Box) -> np.ndarray:
    """Place the box-local prefix grid back at window coordinates."""
    n = pref.shape[0]
    out = np.full((n, window.height, window.width), NEG_INF)
    lx0, ly0, lx1, ly1 = _local(box, window)
    out[:, ly0:ly1 + 1, lx0:lx1 + 1] = pref
    return out


def mc_geodesic_invariance(scenario: GeodesicScenario, model: ModelSpec,
                           n_samples: int, rng: RandomSource,
                           config: MCConfig = MCConfig()) -> MCReport:
    """Compare the joint law of geodesic fragments outside the excluded boxes
    across the shift of the v-side."""
    validate_statement_hypotheses(scenario).raise_if_failed()
    if model.model is Model.INVERSE_GAMMA:
        raise InvalidParams("geodesics need a max-plus model")
    c = scenario.offset
    feats_a = _geodesic_side(model.model, model.params, scenario.u_boxes,
                             scenario.v_boxes, scenario.u_excluded,
                             scenario.v_excluded, rng.seed, rng.stream,
                             n_samples, False, (0, 0))
    shifted_v = [b.translate(c) for b in scenario.v_boxes]
    feats_b = _geodesic_side(model.model, model.params, scenario.u_boxes,
                             shifted_v, scenario.u_excluded,
                             scenario.v_excluded.translate(c), rng.seed,
                             rng.stream + n_samples, n_samples, False, c)
    seeds = {"seed": rng.seed, "stream_a": rng.stream,
             "stream_b": rng.stream + n_samples, "perm": rng.seed + 1}
    return two_sample_report(feats_a, feats_b, config, seeds)


def mc_quenched_invariance(scenario: GeodesicScenario, model: ModelSpec,
                           n_samples: int, rng: RandomSource,
                           config: MCConfig = MCConfig()) -> MCReport:
    """Quenched-measure analogue of the geodesic comparison: one sampled path
    per box per environment, projected off the excluded boxes."""
    validate_statement_hypotheses(scenario).raise_if_failed()
    if model.model is not Model.INVERSE_GAMMA:
        raise InvalidParams("quenched measures need the inverse-gamma model")
    c = scenario.offset
    feats_a = _geodesic_side(model.model, model.params, scenario.u_boxes,
                             scenario.v_boxes, scenario.u_excluded,
                             scenario.v_excluded, rng.seed, rng.stream,
                             n_samples, True, (0, 0))
    shifted_v = [b.translate(c) for b in scenario.v_boxes]
    feats_b = _geodesic_side(model.model, model.params, scenario.u_boxes,
                             shifted_v, scenario.u_excluded,
                             scenario.v_excluded.translate(c), rng.seed,
                             rng.stream + n_samples, n_samples, True, c)
    seeds = {"seed": rng.seed, "stream_a": rng.stream,
             "stream_b": rng.stream + n_samples, "perm": rng.seed + 1}
    return two_sample_report(feats_a, feats_b, config, seeds)


def mc_disjointness(scenario: DisjointnessScenario, model: ModelSpec,
                    n_samples: int, rng: RandomSource,
                    config: MCConfig = MCConfig()) -> MCReport:
    """Joint law of the single-box values together with the indicator that
    the target boxes admit disjoint geodesics, across the middle shift."""
    validate_statement_hypotheses(scenario).raise_if_failed()
    if model.model is Model.INVERSE_GAMMA:
        raise InvalidParams("disjoint geodesics need a max-plus model")
    c = scenario.offset
    boxes_a = sorted(scenario.upstream) + sorted(scenario.middle) + sorted(scenario.downstream)
    boxes_b = (sorted(scenario.upstream)
               + [b.translate(c) for b in sorted(scenario.middle)]
               + sorted(scenario.downstream))
    targets_a = list(scenario.targets)
    targets_b = [b.translate(c) for b in scenario.targets]

    def side(boxes, targets, stream0):
        win = _sample_window(boxes)
        weights = sample_batch(model.model, win, model.params,
                               rng.seed, stream0, n_samples).astype(np.float64)
        vals = [batch_single_maxplus(weights, win, b) for b in boxes]
        joint = batch_multi_maxplus(weights, win, targets)
        singles = sum(batch_single_maxplus(weights, win, b) for b in targets)
        indicator = (np.abs(joint - singles)
                     <= 1e-9 * np.maximum(1.0, np.abs(singles))).astype(np.float64)
        return np.stack(vals + [indicator], axis=1)

    feats_a = side(boxes_a, targets_a, rng.stream)
    feats_b = side(boxes_b, targets_b, rng.stream + n_samples)
    seeds = {"seed": rng.seed, "stream_a": rng.stream,
             "stream_b": rng.stream + n_samples, "perm": rng.seed + 1}
    return two_sample_report(feats_a, feats_b, config, seeds)


# ---------------------------------------------------------------------------
# Negative controls
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlReport:
    laws_differ: bool
    details: dict

    def to_json(self) -> dict:
        return {"laws_differ": self.laws_differ, "details": self.details}


CONTROL_BOX = Box(1, 1, 2, 3)
CONTROL_KEPT = Box(1, 1, 2, 1)
CONTROL_SHIFTED = Box(1, 2, 2, 2)


def negative_control_exact_eps(eps: Fraction = Fraction(1, 10)) -> ControlReport:
    """Bernoulli weights break the shift invariance: compare the joint law of
    (Z of the tall box, Z of the bottom strip) with the strip shifted up.

    Exact enumeration over {0,1} grids gives the two conditional hit
    probabilities; the laws provably differ when (1-eps)^3 > 1/2.
    """
    cells = sorted(CONTROL_BOX.cells())
    p_one = 1 - eps
    joint_a: dict[tuple, Fraction] = {}
    joint_b: dict[tuple, Fraction] = {}
    for bits in itertools.product((0, 1), repeat=len(cells)):
        weights = dict(zip(cells, bits))
        prob = Fraction(1)
        for b in bits:
            prob *= p_one if b else eps
        zu = _lpp_value(CONTROL_BOX, weights)
        za = _lpp_value(CONTROL_KEPT, weights)
        zb = _lpp_value(CONTROL_SHIFTED, weights)
        joint_a[(zu, za)] = joint_a.get((zu, za), Fraction(0)) + prob
        joint_b[(zu, zb)] = joint_b.get((zu, zb), Fraction(0)) + prob

    def conditional(joint, z_sub):
        num = sum((p for (zu, zs), p in joint.items() if zu == 4 and zs == z_sub),
                  Fraction(0))
        den = sum((p for (zu, zs), p in joint.items() if zs == z_sub), Fraction(0))
        return num / den if den else Fraction(0)

    cond_kept = conditional(joint_a, 1)
    cond_shifted = conditional(joint_b, 1)
    differ = any(joint_a.get(k, Fraction(0)) != joint_b.get(k, Fraction(0))
                 for k in set(joint_a) | set(joint_b))
    tv = sum(abs(joint_a.get(k, Fraction(0)) - joint_b.get(k, Fraction(0)))
             for k in set(joint_a) | set(joint_b)) / 2
    certified = cond_shifted > Fraction(1, 2)
    return ControlReport(differ, {
        "eps": str(eps),
        "conditional_kept": str(cond_kept),
        "conditional_kept_float": float(cond_kept),
        "conditional_shifted": str(cond_shifted),
        "conditional_shifted_float": float(cond_shifted),
        "shifted_equals_cube": cond_shifted == (1 - eps) ** 3,
        "kept_at_most_half": cond_kept <= Fraction(1, 2),
        "certified_by_threshold": bool(certified),
        "threshold_eps": "eps < 1 - 2**(-1/3) ~ 0.2063",
        "total_variation": float(tv),
    })


def negative_control_bernoulli_mc(eps: float, n_samples: int, rng: RandomSource,
                                  config: MCConfig | None = None) -> MCReport:
    """Monte Carlo counterpart: the same comparison must reject."""
    if config is None:
        config = MCConfig(energy_permutations=9999)
    params = ParamSequences(alpha_default=1.0, beta_default=1.0 - eps)
    win = CONTROL_BOX
    wa = sample_batch(Model.BERNOULLI, win, params, rng.seed, rng.stream,
                      n_samples).astype(np.float64)
    wb = sample_batch(Model.BERNOULLI, win, params, rng.seed,
                      rng.stream + n_samples, n_samples).astype(np.float64)
    vec_a = np.stack([batch_single_maxplus(wa, win, CONTROL_BOX),
                      batch_single_maxplus(wa, win, CONTROL_KEPT)], axis=1)
    vec_b = np.stack([batch_single_maxplus(wb, win, CONTROL_BOX),
                      batch_single_maxplus(wb, win, CONTROL_SHIFTED)], axis=1)
    seeds = {"seed": rng.seed, "stream_a": rng.stream,
             "stream_b": rng.stream + n_samples, "perm": rng.seed + 1}
    return two_sample_report(vec_a, vec_b, config, seeds)


NOT_IN_F_BOXES = {
    "u": Box(1, 1, 2, 3),
    "v": Box(2, 2, 2, 2),
    "w": Box(1, 3, 2, 3),
    "w_new": Box(1, 1, 2, 1),
}


def negative_control_not_in_f(cutoff: int = 4) -> ExactReport:
    """A three-box map that preserves all pairwise structure yet changes the
    joint law; the exact certificate must find a mismatching coefficient."""
    from .boxes import TranslationBlock, TowerScenario
    b = NOT_IN_F_BOXES
    scenario = TowerScenario((
        TranslationBlock(frozenset({b["u"]}), (0, 0)),
        TranslationBlock(frozenset({b["v"]}), (0, 0)),
        TranslationBlock(frozenset({b["w"]}), (0, -2)),
    ))
    st = InvarianceStatement(scenario, ModelSpec(Model.GEOMETRIC, ParamSequences()),
                             endpoints=((b["u"],), (b["v"],), (b["w"],)),
                             unchecked=True)
    return exact_geometric_invariance(st, cutoff)


def negative_control_not_in_f_mc(n_samples: int, rng: RandomSource,
                                 config: MCConfig | None = None) -> MCReport:
    if config is None:
        config = MCConfig(energy_permutations=9999)
    b = NOT_IN_F_BOXES
    params = ParamSequences(alpha_default=0.5, beta_default=1.0)
    win = b["u"]
    wa = sample_batch(Model.GEOMETRIC, win, params, rng.seed, rng.stream,
                      n_samples).astype(np.float64)
    wb = sample_batch(Model.GEOMETRIC, win, params, rng.seed,
                      rng.stream + n_samples, n_samples).astype(np.float64)
    vec_a = np.stack([batch_single_maxplus(wa, win, b["u"]),
                      batch_single_maxplus(wa, win, b["v"]),
                      batch_single_maxplus(wa, win, b["w"])], axis=1)
    vec_b = np.stack([batch_single_maxplus(wb, win, b["u"]),
                      batch_single_maxplus(wb, win, b["v"]),
                      batch_single_maxplus(wb, win, b["w_new"])], axis=1)
    seeds = {"seed": rng.seed, "stream_a": rng.stream,
             "stream_b": rng.stream + n_samples, "perm": rng.seed + 1}
    return two_sample_report(vec_a, vec_b, config, seeds)
