"""Scenario-driven command line front end.

Scenarios are strict JSON documents (schema 1, unknown fields rejected) that
name the statement they instantiate, the weight model, the budget, a seed,
and the expected verdict.  ``run`` executes one scenario and writes a run
record; ``suite`` executes a directory of scenarios and aggregates a CSV.
Every runner boils down to an accept/reject verdict, and the process exit
code reports whether the verdict matched the scenario's expectation.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping

from . import __version__
from .boxes import (Box, BoxPermutationScenario, DisjointnessScenario,
                    GeodesicScenario, SlideScenario, TowerScenario,
                    TranslationBlock)
from .environments import (Environment, Model, ParamSequences, from_matrix,
                           sample)
from .errors import LppError, ScenarioError
from .partition import Endpoint
from .rng import RandomSource
from .rsk import (box_exhaustion, classic_chain, encode_phi,
                  project_to_staircase, verify_moon_bijection,
                  verify_scrambled_bijection)
from .semiring import NumericMode, SemiringTag
from .verify import (InvarianceStatement, MCConfig, ModelSpec,
                     exact_conditional_independence,
                     exact_geometric_invariance, mc_disjointness,
                     mc_geodesic_invariance, mc_inhomogeneous, mc_invariance,
                     mc_quenched_invariance, negative_control_bernoulli_mc,
                     negative_control_exact_eps, negative_control_not_in_f,
                     negative_control_not_in_f_mc)

KINDS = ("Sample", "ExactInvariance", "MCInvariance", "CondIndep", "RSK",
         "MoonRSK", "EncodePhi", "NegativeControl", "Geodesic", "Quenched",
         "Disjointness", "Inhomogeneous")

_COMMON_KEYS = {"schema", "id", "kind", "paper_anchor", "expected", "seed"}
_KIND_KEYS = {
    "Sample": {"model", "window"},
    "ExactInvariance": {"model", "statement", "endpoints", "budget"},
    "MCInvariance": {"model", "statement", "endpoints", "budget", "test"},
    "CondIndep": {"box", "budget", "max_entry"},
    "RSK": {"n", "m", "budget", "orientations"},
    "MoonRSK": {"cells", "budget"},
    "EncodePhi": {"box", "budget", "max_weight"},
    "NegativeControl": {"control", "eps", "budget"},
    "Geodesic": {"model", "scenario", "budget", "test"},
    "Quenched": {"model", "scenario", "budget", "test"},
    "Disjointness": {"model", "scenario", "budget", "test"},
    "Inhomogeneous": {"model", "model_new", "statement", "endpoints",
                      "budget", "test"},
}


def load_scenario(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"{path}: cannot parse scenario ({exc})") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario must be a JSON object")
    if data.get("schema") != 1:
        raise ScenarioError(f"{path}: unsupported schema {data.get('schema')!r}")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ScenarioError(f"{path}: unknown kind {kind!r}")
    allowed = _COMMON_KEYS | _KIND_KEYS[kind]
    unknown = set(data) - allowed
    if unknown:
        raise ScenarioError(f"{path}: unknown fields {sorted(unknown)}")
    for key in ("id", "paper_anchor", "expected"):
        if key not in data:
            raise ScenarioError(f"{path}: missing field {key!r}")
    if data["expected"] not in ("accept", "reject"):
        raise ScenarioError(f"{path}: expected must be accept or reject")
    return data


def _boxes(items) -> frozenset[Box]:
    return frozenset(Box.from_json(b) for b in items)


def _blocks(items) -> tuple[TranslationBlock, ...]:
    return tuple(TranslationBlock(_boxes(it["boxes"]), tuple(it["offset"]))
                 for it in items)


def _statement_scenario(data: Mapping):
    kind = data["kind"]
    if kind == "Tower":
        return TowerScenario(_blocks(data["blocks"]))
    if kind == "BoxPermutation":
        return BoxPermutationScenario(_blocks(data["row_blocks"]),
                                      _blocks(data["column_blocks"]))
    if kind == "Slide":
        return SlideScenario(_boxes(data["moving_h"]), _boxes(data["moving_v"]),
                             _boxes(data["fixed_h"]), _boxes(data["fixed_v"]),
                             tuple(data["offset"]))
    raise ScenarioError(f"unknown statement kind {kind!r}")


def _endpoints(items) -> tuple[Endpoint, ...]:
    return tuple(tuple(Box.from_json(b) for b in ep) for ep in items)


def _mc_config(data: Mapping) -> MCConfig:
    test = data.get("test", {})
    return MCConfig(
        level=float(test.get("level", 0.01)),
        energy_permutations=int(test.get("permutations", 200)),
        energy_subsample=int(test.get("subsample", 2000)),
        distinct_limit=int(test.get("distinct_limit", 4096)),
    )


@dataclass
class RunRecord:
    scenario_id: str
    kind: str
    expected: str
    verdict: str
    payload: dict
    wall_clock_s: float
    timestamp: str
    version: str = __version__

    @property
    def matched(self) -> bool:
        return self.verdict == self.expected

    def to_json(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "kind": self.kind,
            "expected": self.expected,
            "verdict": self.verdict,
            "matched": self.matched,
            "payload": self.payload,
            "wall_clock_s": self.wall_clock_s,
            "timestamp": self.timestamp,
            "version": self.version,
        }


def _run_sample(data: Mapping, seed: int):
    spec = ModelSpec.from_json(data["model"])
    window = Box.from_json(data["window"])
    env = sample(spec.model, window, spec.params, RandomSource(seed))
    return "accept", {"environment": env.to_json()}, None


def _run_exact(data: Mapping, seed: int):
    spec = ModelSpec.from_json(data["model"])
    scenario = _statement_scenario(data["statement"])
    endpoints = _endpoints(data["endpoints"]) if "endpoints" in data else ()
    st = InvarianceStatement(scenario, spec, endpoints)
    rep = exact_geometric_invariance(st, int(data["budget"]["cutoff"]))
    return ("accept" if rep.equal else "reject"), rep.to_json(), None


def _run_mc(data: Mapping, seed: int):
    spec = ModelSpec.from_json(data["model"])
    scenario = _statement_scenario(data["statement"])
    endpoints = _endpoints(data["endpoints"]) if "endpoints" in data else ()
    st = InvarianceStatement(scenario, spec, endpoints)
    rep = mc_invariance(st, int(data["budget"]["n_samples"]),
                        RandomSource(seed), _mc_config(data))
    return rep.verdict, rep.to_json(), None


def _run_condindep(data: Mapping, seed: int):
    rep = exact_conditional_independence(Box.from_json(data["box"]),
                                         int(data["budget"]["cutoff"]),
                                         data.get("max_entry"))
    return ("accept" if rep.ok else "reject"), rep.to_json(), None


_CHAIN_CODES = {"L": True, "R": False}


def _run_rsk(data: Mapping, seed: int):
    n, m = int(data["n"]), int(data["m"])
    cutoff = int(data["budget"]["cutoff"])
    payload = {}
    ok = True
    for code in data.get("orientations", ["LL"]):
        row = classic_chain(n, _CHAIN_CODES[code[0]])
        col = classic_chain(m, _CHAIN_CODES[code[1]])
        rep = verify_scrambled_bijection(n, m, row, col, cutoff)
        payload[code] = rep.to_json()
        ok = ok and rep.ok
    return ("accept" if ok else "reject"), payload, None


def _parse_cells(items) -> frozenset:
    cells = set()
    for it in items:
        if isinstance(it, Mapping):
            y = int(it["row"])
            lo, hi = it["cols"]
            cells.update((x, y) for x in range(lo, hi + 1))
        else:
            cells.add((int(it[0]), int(it[1])))
    return frozenset(cells)


def _run_moon(data: Mapping, seed: int):
    cells = _parse_cells(data["cells"])
    rep = verify_moon_bijection(cells, None, int(data["budget"]["cutoff"]))
    payload = rep.to_json()
    payload["exhaustion"] = [b.to_json() if b else None for b in box_exhaustion(cells)]
    return ("accept" if rep.ok else "reject"), payload, None


def _run_encode_phi(data: Mapping, seed: int):
    from .partition import brute_force_multi, endpoint_family
    box = Box.from_json(data["box"])
    grids = int(data["budget"]["grids"])
    max_weight = int(data.get("max_weight", 9))
    vbar = endpoint_family(box, "Vbar")
    gen = random.Random(seed)
    failures = 0
    for _ in range(grids):
        vals = {c: gen.randint(0, max_weight) for c in box.cells()}
        env = from_matrix(box, vals, SemiringTag.MAX_PLUS, NumericMode.EXACT_INT)
        image = encode_phi(env)
        valsf = {c: Fraction(gen.randint(1, 8), gen.randint(1, 4)) for c in box.cells()}
        envf = from_matrix(box, valsf, SemiringTag.SUM_PRODUCT, NumericMode.EXACT_RATIONAL)
        imagef = encode_phi(envf)
        for ep in vbar:
            proj = project_to_staircase(box, ep)
            if brute_force_multi(env, ep) != brute_force_multi(image, proj):
                failures += 1
            if brute_force_multi(envf, ep) != brute_force_multi(imagef, proj):
                failures += 1
    payload = {"grids": grids, "endpoints": len(vbar), "failures": failures}
    return ("accept" if failures == 0 else "reject"), payload, None


def _run_negative_control(data: Mapping, seed: int):
    control = data["control"]
    if control == "bernoulli-shift-exact":
        rep = negative_control_exact_eps(Fraction(data.get("eps", "1/10")))
        return ("reject" if rep.laws_differ else "accept"), rep.to_json(), None
    if control == "bernoulli-shift-mc":
        rep = negative_control_bernoulli_mc(float(data.get("eps", 0.05)),
                                            int(data["budget"]["n_samples"]),
                                            RandomSource(seed))
        return rep.verdict, rep.to_json(), None
    if control == "pairwise-structure-exact":
        rep = negative_control_not_in_f(int(data["budget"]["cutoff"]))
        return ("reject" if not rep.equal else "accept"), rep.to_json(), None
    if control == "pairwise-structure-mc":
        rep = negative_control_not_in_f_mc(int(data["budget"]["n_samples"]),
                                           RandomSource(seed))
        return rep.verdict, rep.to_json(), None
    raise ScenarioError(f"unknown control {control!r}")


def _geod_scenario(data: Mapping) -> GeodesicScenario:
    sc = data["scenario"]
    return GeodesicScenario(_boxes(sc["u_boxes"]), _boxes(sc["v_boxes"]),
                            Box.from_json(sc["u_excluded"]),
                            Box.from_json(sc["v_excluded"]),
                            tuple(sc["offset"]))


def _run_geodesic(data: Mapping, seed: int):
    rep = mc_geodesic_invariance(_geod_scenario(data),
                                 ModelSpec.from_json(data["model"]),
                                 int(data["budget"]["n_samples"]),
                                 RandomSource(seed), _mc_config(data))
    return rep.verdict, rep.to_json(), None


def _run_quenched(data: Mapping, seed: int):
    rep = mc_quenched_invariance(_geod_scenario(data),
                                 ModelSpec.from_json(data["model"]),
                                 int(data["budget"]["n_samples"]),
                                 RandomSource(seed), _mc_config(data))
    return rep.verdict, rep.to_json(), None


def _run_disjointness(data: Mapping, seed: int):
    sc = data["scenario"]
    scenario = DisjointnessScenario(_boxes(sc["upstream"]), _boxes(sc["middle"]),
                                    _boxes(sc["downstream"]), tuple(sc["offset"]),
                                    tuple(Box.from_json(b) for b in sc["targets"]))
    rep = mc_disjointness(scenario, ModelSpec.from_json(data["model"]),
                          int(data["budget"]["n_samples"]),
                          RandomSource(seed), _mc_config(data))
    return rep.verdict, rep.to_json(), None


def _run_inhomogeneous(data: Mapping, seed: int):
    spec = ModelSpec.from_json(data["model"])
    params_new = ParamSequences.from_json(data["model_new"])
    scenario = _statement_scenario(data["statement"])
    endpoints = _endpoints(data["endpoints"]) if "endpoints" in data else ()
    st = InvarianceStatement(scenario, spec, endpoints)
    rep = mc_inhomogeneous(st, params_new, int(data["budget"]["n_samples"]),
                           RandomSource(seed), _mc_config(data))
    return rep.verdict, rep.to_json(), None


_RUNNERS = {
    "Sample": _run_sample,
    "ExactInvariance": _run_exact,
    "MCInvariance": _run_mc,
    "CondIndep": _run_condindep,
    "RSK": _run_rsk,
    "MoonRSK": _run_moon,
    "EncodePhi": _run_encode_phi,
    "NegativeControl": _run_negative_control,
    "Geodesic": _run_geodesic,
    "Quenched": _run_quenched,
    "Disjointness": _run_disjointness,
    "Inhomogeneous": _run_inhomogeneous,
}


def execute_scenario(data: Mapping, seed_override: int | None = None,
                     budget_override: int | None = None) -> RunRecord:
    data = dict(data)
    if budget_override is not None and "budget" in data:
        budget = dict(data["budget"])
        for key in budget:
            budget[key] = budget_override
        data["budget"] = budget
    seed = seed_override if seed_override is not None else int(data.get("seed", 0))
    start = time.time()
    verdict, payload, _vectors = _RUNNERS[data["kind"]](data, seed)
    wall = time.time() - start
    stamp = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    return RunRecord(data["id"], data["kind"], data["expected"], verdict,
                     payload, round(wall, 3), stamp)


def _out_dir(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    env = os.environ.get("LPPLAB_OUT")
    return Path(env) if env else Path("runs")


def _write_record(record: RunRecord, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / f"{record.scenario_id}.json"
    tmp = target.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(record.to_json(), indent=2, sort_keys=True) + "\n")
    tmp.replace(target)
    return target


def _write_csv_row(record: RunRecord, out_dir: Path) -> Path:
    target = out_dir / f"{record.scenario_id}.csv"
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "kind", "expected", "verdict",
                         "matched", "wall_clock_s"])
        writer.writerow([record.scenario_id, record.kind, record.expected,
                         record.verdict, record.matched, record.wall_clock_s])
    return target


def bundled_dir() -> Path:
    return Path(str(resources.files("lpplab") / "scenarios"))


def cmd_run(args) -> int:
    try:
        data = load_scenario(Path(args.scenario))
        record = execute_scenario(data, args.seed, args.budget)
    except (LppError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = _out_dir(args.out)
    path = _write_record(record, out_dir)
    if args.format == "csv":
        _write_csv_row(record, out_dir)
    status = "ok" if record.matched else "MISMATCH"
    print(f"{record.scenario_id}: verdict={record.verdict} expected={record.expected} "
          f"[{status}] ({record.wall_clock_s}s) -> {path}")
    return 0 if record.matched else 1


def cmd_suite(args) -> int:
    directory = Path(args.directory) if args.directory else bundled_dir()
    files = sorted(directory.glob("*.json"))
    if not files:
        print(f"{directory}: no scenarios found")
        return 0
    out_dir = _out_dir(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for path in files:
        try:
            data = load_scenario(path)
        except LppError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        record = execute_scenario(data)
        _write_record(record, out_dir)
        records.append(record)
        status = "ok" if record.matched else "MISMATCH"
        print(f"{record.scenario_id}: verdict={record.verdict} [{status}] "
              f"({record.wall_clock_s}s)")
    agg = out_dir / "suite.csv"
    with open(agg, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "kind", "expected", "verdict",
                         "matched", "wall_clock_s"])
        for r in records:
            writer.writerow([r.scenario_id, r.kind, r.expected, r.verdict,
                             r.matched, r.wall_clock_s])
    mismatches = [r for r in records if not r.matched]
    print(f"suite: {len(records) - len(mismatches)}/{len(records)} matched -> {agg}")
    return 1 if mismatches else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lpplab",
                                     description="last passage / polymer invariance lab")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--budget", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--format", choices=("json", "csv"), default="json")
    p_run.set_defaults(func=cmd_run)
    p_suite = sub.add_parser("suite", help="run every scenario in a directory")
    p_suite.add_argument("directory", nargs="?", default=None,
                         help="defaults to the bundled scenario library")
    p_suite.add_argument("--jobs", type=int, default=1,
                         help="accepted for compatibility; runs sequentially")
    p_suite.add_argument("--out", default=None)
    p_suite.set_defaults(func=cmd_suite)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
