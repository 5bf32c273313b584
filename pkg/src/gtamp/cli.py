"""Command-line front end.

Subcommands: plan, validate, bench, gen, predicates.
Exit codes: 0 success, 1 input error, 2 no plan found (or timeout),
3 validation violations.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .bench import format_summary, run_trials, summarize, write_csv
from .bip import to_lp_text
from .cmtg import NoContainingRegion, build_cmtg
from .grounding import (
    GroundConfig,
    PlanFormatError,
    load_plan,
    save_plan,
    validate,
)
from .predicates import PredicateConfig, compute_predicates, predicates_to_dict
from .scenarios import GeneratorError, GenParams, gen_scenario
from .search import (
    NoInitialSkeletons,
    PlannerConfig,
    SearchConfig,
    run,
)
from .skeleton_ilp import SkeletonGenConfig, build_model, first_horizon
from .world import ScenarioError, load_scenario


def _add_planner_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c", type=float, default=1.0, help="UCB exploration constant")
    p.add_argument("--alpha", type=float, default=1.0, help="reward weight")
    p.add_argument("--t-max", type=int, default=8, help="maximum skeleton horizon")
    p.add_argument("--max-skeletons", type=int, default=12)
    p.add_argument("--max-iterations", type=int, default=300)
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--no-handovers", action="store_true")
    p.add_argument("--anytime", action="store_true")


def _planner_config(args, time_limit=None) -> PlannerConfig:
    return PlannerConfig(
        search=SearchConfig(
            c=args.c,
            alpha=args.alpha,
            max_iterations=args.max_iterations,
            wall_clock_limit=time_limit if time_limit is not None else args.time_limit,
            anytime=args.anytime,
        ),
        skeletons=SkeletonGenConfig(t_max=args.t_max, max_skeletons=args.max_skeletons),
        grounding=GroundConfig(),
        predicates=PredicateConfig(allow_handovers=not args.no_handovers),
    )


def _load_world(path: str):
    try:
        return load_scenario(path)
    except FileNotFoundError:
        print(f"error: scenario file not found: {path}", file=sys.stderr)
        raise SystemExit(1)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)


def cmd_plan(args) -> int:
    world = _load_world(args.scenario)
    config = _planner_config(args)
    if args.dump_ilp:
        preds = compute_predicates(world, config.predicates)
        goal_objects = {o for o, _ in world.scene.goal}
        try:
            cmtg = build_cmtg(goal_objects, preds, world)
        except NoContainingRegion as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        horizon = first_horizon(len(cmtg.targets), len(world.scene.robots))
        model = build_model(cmtg, horizon)
        with open(args.dump_ilp, "w", encoding="utf-8") as fh:
            fh.write(to_lp_text(model.program))
            fh.write("\n")
        print(f"wrote horizon-{horizon} model to {args.dump_ilp}")
    try:
        result = run(world, config, args.seed)
    except NoInitialSkeletons as exc:
        print(f"no plan: {exc}")
        return 2
    except NoContainingRegion as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for rec in result.trace:
                fh.write(
                    json.dumps(
                        {
                            "iteration": rec.iteration,
                            "path": list(rec.path),
                            "outcome": rec.outcome,
                            "reward": rec.reward,
                            "new_edges": rec.new_edges,
                        },
                        sort_keys=True,
                    )
                )
                fh.write("\n")
    if result.best_plan is None:
        print(
            f"no plan found (status: {result.status}, "
            f"iterations: {result.iterations_used})"
        )
        return 2
    plan = result.best_plan
    out = args.out or (os.path.splitext(args.scenario)[0] + ".plan.json")
    save_plan(plan, world, out, config.grounding.clearance)
    print(
        f"plan found: makespan {plan.makespan}, motion cost {plan.motion_cost}, "
        f"iterations {result.iterations_used}, time {result.elapsed:.2f}s"
    )
    print(f"plan written to {out}")
    return 0


def cmd_validate(args) -> int:
    world = _load_world(args.scenario)
    try:
        plan, clearance = load_plan(args.plan, world)
    except FileNotFoundError:
        print(f"error: plan file not found: {args.plan}", file=sys.stderr)
        return 1
    except PlanFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = validate(plan, world, clearance)
    if report.ok:
        print("plan is valid")
        return 0
    for v in report.violations:
        step = f"step {v.step}" if v.step is not None else "plan"
        print(f"violation [{v.code}] at {step}: {v.message}")
    return 3


def cmd_bench(args) -> int:
    scenarios = []
    for path in args.scenario:
        world = _load_world(path)
        del world
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        name = os.path.splitext(os.path.basename(path))[0]
        scenarios.append((name, data))
    config = _planner_config(args, time_limit=args.time_limit or 60.0)
    seeds = list(range(args.seed, args.seed + args.trials))
    os.makedirs(args.out, exist_ok=True)
    plans_dir = os.path.join(args.out, "plans")
    os.makedirs(plans_dir, exist_ok=True)
    csv_path = os.path.join(args.out, "results.csv")
    records = []
    try:
        results = run_trials(
            scenarios, seeds, config,
            on_record=lambda r: print(
                f"  {r.scenario} seed {r.seed}: {r.outcome} ({r.time_s:.2f}s)"
            ),
        )
    except KeyboardInterrupt:
        print("interrupted; flushing partial results", file=sys.stderr)
        write_csv(records, csv_path)
        raise SystemExit(130)
    for record, plan_dict in results:
        records.append(record)
        if plan_dict is not None:
            plan_path = os.path.join(
                plans_dir, f"{record.scenario}_seed{record.seed}.plan.json"
            )
            with open(plan_path, "w", encoding="utf-8") as fh:
                json.dump(plan_dict, fh, indent=2, sort_keys=True)
                fh.write("\n")
    write_csv(records, csv_path)
    table = format_summary(summarize(records))
    print(table)
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    return 0


def cmd_gen(args) -> int:
    params = GenParams(
        n_goal=args.n_goal,
        n_obstacles=args.n_obstacles,
        n_robots=args.n_robots,
        seed=args.seed,
    )
    try:
        data = gen_scenario(args.family, params)
    except GeneratorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"scenario written to {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_predicates(args) -> int:
    world = _load_world(args.scenario)
    cfg = PredicateConfig(allow_handovers=not args.no_handovers)
    preds = compute_predicates(world, cfg)
    text = json.dumps(predicates_to_dict(preds), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"predicates written to {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtamp",
        description="Multi-robot geometric task-and-motion planning on a 2D tabletop",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="plan a scenario")
    p_plan.add_argument("--scenario", required=True)
    p_plan.add_argument("--out", default=None, help="plan file path")
    p_plan.add_argument("--trace", default=None, help="iteration trace path (JSONL)")
    p_plan.add_argument("--dump-ilp", default=None, help="LP-format model dump path")
    _add_planner_flags(p_plan)
    p_plan.set_defaults(func=cmd_plan)

    p_val = sub.add_parser("validate", help="validate a plan file")
    p_val.add_argument("--scenario", required=True)
    p_val.add_argument("--plan", required=True)
    p_val.set_defaults(func=cmd_validate)

    p_bench = sub.add_parser("bench", help="run seeded benchmark trials")
    p_bench.add_argument("--scenario", action="append", required=True)
    p_bench.add_argument("--trials", type=int, default=20)
    p_bench.add_argument("--out", default="bench_out")
    _add_planner_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_gen = sub.add_parser("gen", help="generate a benchmark scenario")
    p_gen.add_argument("--family", choices=["pack", "boxmove"], required=True)
    p_gen.add_argument("--n-goal", type=int, required=True)
    p_gen.add_argument("--n-obstacles", type=int, required=True)
    p_gen.add_argument("--n-robots", type=int, default=2)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_pred = sub.add_parser("predicates", help="dump predicate instances")
    p_pred.add_argument("--scenario", required=True)
    p_pred.add_argument("--out", default=None)
    p_pred.add_argument("--no-handovers", action="store_true")
    p_pred.set_defaults(func=cmd_predicates)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    return code


if __name__ == "__main__":
    sys.exit(main())
