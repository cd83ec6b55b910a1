"""Command line harness: ``cctp gen|run|opt|sweep``.

Exit codes: 0 success, 1 internal or contract error, 2 usage/validation error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from .core import (
    CCTPError,
    ContractViolation,
    Scenario,
    ScenarioError,
    generate_random_scenario,
    load_scenario,
    save_scenario,
    scenario_to_dict,
)
from .explore import RunResult, inject_tour, lowest_index, run_algorithm
from .lowerbound import P_MAX, generate_hurkens, lemma_preference, optimal_cost_formula
from .tsp import HK_LIMIT, TourSizeError, offline_optimum

log = logging.getLogger("cctp")

CSV_HEADER = ["scenario", "n", "k", "algo", "cost", "opt", "ratio", "shortcut_cost", "explore_cost", "wall_ms"]
ALGOS = ("cnn", "double-tree-nn", "repeated-shortcut")


class UsageError(CCTPError, ValueError):
    pass


@dataclass
class ExperimentRecord:
    scenario: str
    n: int
    k: int
    algo: str
    cost: float
    opt: Optional[float]
    ratio: Optional[float]
    shortcut_cost: float
    explore_cost: float
    return_cost: float
    wall_ms: float
    seed: Optional[int] = None
    opt_source: Optional[str] = None

    def csv_row(self) -> list:
        return [self.scenario, self.n, self.k, self.algo, self.cost, _blank(self.opt), _blank(self.ratio),
                self.shortcut_cost, self.explore_cost + self.return_cost, self.wall_ms]


def _blank(x):
    return "" if x is None else x


def scenario_optimum(scenario: Scenario) -> tuple[Optional[float], Optional[str]]:
    if scenario.n <= HK_LIMIT:
        return offline_optimum(scenario).cost, "held-karp"
    marks = scenario.meta.get("landmarks")
    if marks and "p" in marks and scenario.name.startswith("hurkens"):
        return float(optimal_cost_formula(int(marks["p"]))), "formula"
    return None, None


def resolve_tie(scenario: Scenario, tie: str):
    if tie == "default":
        return lowest_index
    if tie == "lemma":
        marks = scenario.meta.get("landmarks")
        if not marks or "p" not in marks:
            raise UsageError("--tie lemma needs a hurkens scenario with landmarks")
        return lemma_preference(int(marks["p"]))
    raise UsageError(f"unknown tie policy {tie!r}")


def resolve_tour(scenario: Scenario, tour_arg: Optional[str]):
    if not tour_arg:
        return None
    if tour_arg == "landmark":
        marks = scenario.meta.get("landmarks")
        if not marks or "injected_tour" not in marks:
            raise UsageError("--inject-tour landmark needs a scenario with landmarks.injected_tour")
        order = marks["injected_tour"]
    else:
        try:
            order = [int(x) for x in tour_arg.split(",")]
        except ValueError:
            raise UsageError(f"bad tour {tour_arg!r}: expected 'landmark' or comma-separated vertices") from None
    try:
        return inject_tour(order)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def execute(scenario: Scenario, algo: str, tie: str = "default", inject: Optional[str] = None,
            timing: bool = True) -> tuple[ExperimentRecord, RunResult]:
    if algo not in ALGOS:
        raise UsageError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGOS)}")
    if inject and algo == "repeated-shortcut":
        raise UsageError("tour injection is not supported for repeated-shortcut")
    tie_fn = resolve_tie(scenario, tie)
    tsp = resolve_tour(scenario, inject)
    t0 = time.perf_counter()
    result = run_algorithm(scenario, algo, tsp, tie_fn)
    wall = (time.perf_counter() - t0) * 1000 if timing else 0.0
    opt, source = scenario_optimum(scenario)
    cost = result.total_cost
    ratio = cost / opt if opt else (1.0 if opt == 0 and cost == 0 else None)
    rec = ExperimentRecord(
        scenario=scenario.name or "scenario",
        n=scenario.n,
        k=scenario.k,
        algo=algo,
        cost=cost,
        opt=opt,
        ratio=ratio,
        shortcut_cost=result.shortcut_cost,
        explore_cost=result.explore_cost,
        return_cost=result.return_cost,
        wall_ms=round(wall, 3),
        seed=scenario.meta.get("seed"),
        opt_source=source,
    )
    return rec, result


def write_trace(result: RunResult, path: Path) -> None:
    with open(path, "w") as fh:
        for rec in result.env.trace:
            fh.write(json.dumps(rec) + "\n")


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _sweep_jobs(config: dict) -> list[dict]:
    jobs = []
    algos = config.get("algorithms", ["cnn"])
    for a in algos:
        if a not in ALGOS:
            raise UsageError(f"unknown algorithm {a!r} in config")
    for block in config.get("random", []):
        for seed in block.get("seeds", [0]):
            for a in algos:
                jobs.append({"kind": "random", "n": block["n"], "k": block["k"], "seed": seed,
                             "geometry": block.get("geometry", "euclidean"), "algo": a,
                             "tie": config.get("tie", "default")})
    for p in config.get("hurkens", []):
        for a in algos:
            injected = a != "repeated-shortcut" and config.get("hurkens_injected", True)
            jobs.append({"kind": "hurkens", "p": p, "algo": a,
                         "tie": "lemma" if injected else "default",
                         "inject": "landmark" if injected else None})
    return jobs


def _run_job(job: dict, timing: bool) -> list:
    try:
        if job["kind"] == "random":
            sc = generate_random_scenario(job["n"], job["k"], job["seed"], job["geometry"])
        else:
            sc = generate_hurkens(job["p"]).scenario
        rec, _ = execute(sc, job["algo"], job["tie"], job.get("inject"), timing)
        return rec.csv_row()
    except Exception as exc:  # recorded per row; the sweep continues
        name = (f"random-n{job['n']}-k{job['k']}-s{job['seed']}-{job['geometry']}"
                if job["kind"] == "random" else f"hurkens-p{job['p']}")
        log.error("sweep row %s/%s failed: %s", name, job["algo"], exc)
        return [name, job.get("n", ""), job.get("k", ""), job["algo"], "", "", f"error: {exc}", "", "", ""]


def _sort_key(row):
    return (row[1] if isinstance(row[1], int) else -1, row[2] if isinstance(row[2], int) else -1, row[3], row[0])


def sweep(config: dict, jobs: int = 1, timing: bool = True) -> list[list]:
    work = _sweep_jobs(config)
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_job, work, [timing] * len(work)))
    else:
        rows = [_run_job(j, timing) for j in work]
    rows.sort(key=_sort_key)
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if isinstance(r[6], float):
            groups.setdefault((r[1], r[2], r[3]), []).append(r[6])
    agg = []
    for (n, k, algo), ratios in sorted(groups.items()):
        agg.append(["aggregate-max", n, k, algo, "", "", max(ratios), "", "", ""])
        agg.append(["aggregate-mean", n, k, algo, "", "", statistics.fmean(ratios), "", "", ""])
    return rows + agg


def write_csv(rows: list[list], path: Optional[Path]) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(rows)
    finally:
        if path:
            fh.close()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.kind == "random":
        if args.n is None or args.k is None:
            raise UsageError("gen random needs --n and --k")
        sc = generate_random_scenario(args.n, args.k, args.seed, args.geometry)
    else:
        if args.p is None or not 1 <= args.p <= P_MAX:
            raise UsageError(f"gen hurkens needs --p in 1..{P_MAX}")
        sc = generate_hurkens(args.p).scenario
    if args.out:
        save_scenario(sc, args.out)
    else:
        print(json.dumps(scenario_to_dict(sc), indent=1))
    return 0


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    rec, result = execute(sc, args.algo, args.tie, args.inject_tour, timing=not args.no_timing)
    text = json.dumps(asdict(rec), indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.trace:
        write_trace(result, Path(args.trace))
    return 0


def cmd_opt(args) -> int:
    sc = load_scenario(args.scenario)
    tour = offline_optimum(sc)
    print(json.dumps({"scenario": sc.name or args.scenario, "n": sc.n, "k": sc.k,
                      "opt": tour.cost, "tour": tour.order}))
    return 0


def cmd_sweep(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    rows = sweep(config, args.jobs, timing=not args.no_timing and config.get("timing", True))
    write_csv(rows, Path(args.out) if args.out else None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cctp", description="k-Covering Canadian Traveller simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a scenario file")
    g.add_argument("kind", choices=["random", "hurkens"])
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--geometry", choices=["euclidean", "random-metric-closure"], default="euclidean")
    g.add_argument("--p", type=int)
    g.add_argument("--out", "-o")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an algorithm on a scenario")
    r.add_argument("scenario")
    r.add_argument("--algo", choices=ALGOS, default="cnn")
    r.add_argument("--tie", choices=["default", "lemma"], default="default")
    r.add_argument("--inject-tour", help="'landmark' or comma-separated vertex order")
    r.add_argument("--out", "-o", help="record JSON path (default stdout)")
    r.add_argument("--trace", help="JSONL move trace path")
    r.add_argument("--no-timing", action="store_true", help="write wall_ms as 0")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("opt", help="exact offline optimum (Held-Karp on the metric closure)")
    o.add_argument("scenario")
    o.set_defaults(func=cmd_opt)

    s = sub.add_parser("sweep", help="run a batch described by a JSON config")
    s.add_argument("config")
    s.add_argument("--out", "-o")
    s.add_argument("--jobs", "-j", type=int, default=1)
    s.add_argument("--no-timing", action="store_true")
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ScenarioError, TourSizeError, FileNotFoundError) as exc:
        print(f"cctp: error: {exc}", file=sys.stderr)
        return 2
    except (ContractViolation, CCTPError) as exc:
        print(f"cctp: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
