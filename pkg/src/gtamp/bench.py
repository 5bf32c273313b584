"""Benchmark harness: seeded trials, CSV records and summary tables.

A trial runs the planner on one scenario with one seed under a wall-clock
limit. Makespan and motion cost are aggregated over successful trials only;
a scenario with no successes reports N/A for those columns. Trials may run
in parallel processes when GTAMP_THREADS is set above 1; each trial owns
its rng and world, so results are identical either way.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .grounding import plan_to_dict
from .search import NoInitialSkeletons, PlannerConfig, run
from .world import scenario_from_dict

CSV_COLUMNS = ("scenario", "seed", "outcome", "time_s", "makespan", "motion_cost", "iterations")


@dataclass(frozen=True)
class RunRecord:
    scenario: str
    seed: int
    outcome: str  # success | failure | timeout
    time_s: float
    makespan: int | None
    motion_cost: int | None
    iterations: int


@dataclass(frozen=True)
class SummaryRow:
    scenario: str
    trials: int
    success_rate: float
    time_mean: float | None
    time_stderr: float | None
    makespan_mean: float | None
    makespan_stderr: float | None
    cost_mean: float | None
    cost_stderr: float | None


def run_single(
    scenario_id: str, scenario_data: dict, seed: int, config: PlannerConfig
) -> tuple[RunRecord, dict | None]:
    world = scenario_from_dict(scenario_data)
    try:
        result = run(world, config, seed)
    except NoInitialSkeletons:
        return (
            RunRecord(scenario_id, seed, "failure", 0.0, None, None, 0),
            None,
        )
    if result.best_plan is not None:
        plan = result.best_plan
        record = RunRecord(
            scenario_id, seed, "success", result.elapsed,
            plan.makespan, plan.motion_cost, result.iterations_used,
        )
        return record, plan_to_dict(plan, world, config.grounding.clearance)
    outcome = "timeout" if result.status == "timeout" else "failure"
    return (
        RunRecord(scenario_id, seed, outcome, result.elapsed, None, None, result.iterations_used),
        None,
    )


def _worker(args) -> tuple[RunRecord, dict | None]:
    return run_single(*args)


def bench_threads() -> int:
    try:
        return max(1, int(os.environ.get("GTAMP_THREADS", "1")))
    except ValueError:
        return 1


def run_trials(
    scenarios: list[tuple[str, dict]],
    seeds: list[int],
    config: PlannerConfig,
    on_record=None,
) -> list[tuple[RunRecord, dict | None]]:
    """All (scenario, seed) trials; order of results is scenario-major."""
    jobs = [
        (scenario_id, data, seed, config)
        for scenario_id, data in scenarios
        for seed in seeds
    ]
    threads = bench_threads()
    results: list[tuple[RunRecord, dict | None]] = []
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for item in pool.map(_worker, jobs):
                results.append(item)
                if on_record is not None:
                    on_record(item[0])
    else:
        for job in jobs:
            item = _worker(job)
            results.append(item)
            if on_record is not None:
                on_record(item[0])
    return results


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def summarize(records: list[RunRecord]) -> list[SummaryRow]:
    by_scenario: dict[str, list[RunRecord]] = {}
    for rec in records:
        by_scenario.setdefault(rec.scenario, []).append(rec)
    rows = []
    for scenario in sorted(by_scenario):
        recs = by_scenario[scenario]
        successes = [r for r in recs if r.outcome == "success"]
        rate = 100.0 * len(successes) / len(recs)
        if successes:
            tm, ts = _mean_stderr([r.time_s for r in successes])
            mm, ms = _mean_stderr([float(r.makespan) for r in successes])
            cm, cs = _mean_stderr([float(r.motion_cost) for r in successes])
            rows.append(SummaryRow(scenario, len(recs), rate, tm, ts, mm, ms, cm, cs))
        else:
            rows.append(
                SummaryRow(scenario, len(recs), rate, None, None, None, None, None, None)
            )
    return rows


def format_summary(rows: list[SummaryRow]) -> str:
    def fmt(mean: float | None, err: float | None) -> str:
        if mean is None:
            return "N/A"
        return f"{mean:.2f} (+/-{err:.2f})"

    header = f"{'scenario':<24}{'trials':>7}{'success %':>11}{'time (s)':>18}{'makespan':>18}{'motion cost':>18}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.scenario:<24}{row.trials:>7}{row.success_rate:>10.1f}%"
            f"{fmt(row.time_mean, row.time_stderr):>18}"
            f"{fmt(row.makespan_mean, row.makespan_stderr):>18}"
            f"{fmt(row.cost_mean, row.cost_stderr):>18}"
        )
    return "\n".join(lines)


def write_csv(records: list[RunRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.scenario,
                    r.seed,
                    r.outcome,
                    f"{r.time_s:.6f}",
                    "" if r.makespan is None else r.makespan,
                    "" if r.motion_cost is None else r.motion_cost,
                    r.iterations,
                ]
            )


def read_csv(path: str) -> list[RunRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                RunRecord(
                    scenario=row["scenario"],
                    seed=int(row["seed"]),
                    outcome=row["outcome"],
                    time_s=float(row["time_s"]),
                    makespan=int(row["makespan"]) if row["makespan"] else None,
                    motion_cost=int(row["motion_cost"]) if row["motion_cost"] else None,
                    iterations=int(row["iterations"]),
                )
            )
    return records
