"""Task-skeleton generation via a binary program over the task graph.

For a horizon of T steps, every action edge and block edge of the graph gets
one binary variable per step. A variable at level t means "this action runs
at step t or later", so levels form prefixes and an action's execution step
equals the sum of its levels. The constraint families encode: prefix shape,
block-edge coupling, gating of non-target moves, per-robot and global step
occupancy, target selection, blocker selection, the once-per-object rule,
and ordering (pick blockers strictly earlier, place blockers no later).
Conditional ordering rows are compiled with a big-M slack on the action's
level-1 variable.

Solutions decode into task skeletons: per-step joint actions without
placements. Distinct optima are enumerated with no-good cuts over the
action-edge variables only, so "different" means a different plan rather
than a different auxiliary encoding.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .bip import (
    EQ,
    GE,
    LE,
    BinaryProgram,
    Constraint,
    Solution,
    SolveTimeout,
    no_good_cut,
    solve,
)
from .cmtg import Cmtg, PartialAction

FAMILIES = (
    "prefix",
    "coupling",
    "nontarget_gating",
    "last_step_robot_cap",
    "last_step_nonempty",
    "step_robot_budget",
    "step_nonempty",
    "targets_selected",
    "blockers_selected",
    "move_once",
    "pick_block_order",
    "place_block_order",
)


class DecodeViolation(Exception):
    """A solver assignment broke a skeleton invariant (indicates a solver bug)."""


class EmptySkeletonSet(Exception):
    """No horizon up to the configured maximum admits a feasible model."""


@dataclass(frozen=True)
class TaskSkeleton:
    """Per-step joint actions without placements; None slots are waits."""

    steps: tuple[tuple[PartialAction | None, ...], ...]
    moved_objects: frozenset[str]

    @property
    def length(self) -> int:
        return len(self.steps)

    def actions(self) -> list[tuple[int, PartialAction]]:
        """(step index, action) pairs, each action listed once."""
        out = []
        for t, slots in enumerate(self.steps):
            step_seen: list[PartialAction] = []
            for a in slots:
                if a is not None and a not in step_seen:
                    step_seen.append(a)
                    out.append((t, a))
        return out

    def key(self) -> tuple:
        return tuple(
            tuple(a.sort_key() if a is not None else None for a in slots)
            for slots in self.steps
        )


@dataclass(frozen=True)
class SkeletonGenConfig:
    t_max: int = 8
    max_skeletons: int = 12
    # cap per horizon so the pool mixes parallel and serialized schedules;
    # 0 means fill the whole budget at the earliest feasible horizon
    per_horizon: int = 5
    # wall-clock budget in seconds per horizon; a horizon whose proof blows
    # the budget is skipped (later horizons are usually far easier). 0
    # disables the budget.
    horizon_budget: float = 5.0

    def __post_init__(self) -> None:
        if self.t_max < 1 or self.max_skeletons < 1:
            raise ValueError("t_max and max_skeletons must be >= 1")


@dataclass
class IlpModel:
    program: BinaryProgram
    horizon: int
    action_edges: tuple[tuple[str, PartialAction], ...]
    block_edges: tuple[tuple[PartialAction, str, str], ...]  # (action, obj, kind)
    action_var: dict[tuple[int, int], int]  # (t, edge idx) -> var
    block_var: dict[tuple[int, int], int]
    big_m: int

    def action_var_indices(self) -> tuple[int, ...]:
        return tuple(
            self.action_var[(t, e)]
            for t in range(1, self.horizon + 1)
            for e in range(len(self.action_edges))
        )


def build_model(cmtg: Cmtg, horizon: int, omit: frozenset[str] = frozenset()) -> IlpModel:
    """Emit the binary program for the graph at the given horizon.

    `omit` drops whole constraint families; it exists for diagnostics and for
    the semantics test suite and is never used by the planner itself.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    unknown = omit - set(FAMILIES)
    if unknown:
        raise ValueError(f"unknown constraint families {sorted(unknown)}")
    T = horizon
    block_count: dict[PartialAction, int] = {}
    for a, _ in cmtg.block_pick_edges | cmtg.block_place_edges:
        block_count[a] = block_count.get(a, 0) + 1
    # per object, declare lightly-blocked single-robot actions first: with
    # 1-before-0 branching the first descent then tries the least
    # constrained selection, which finds incumbents quickly
    action_edges = tuple(
        sorted(
            cmtg.action_edges,
            key=lambda e: (
                e[0],
                block_count.get(e[1], 0),
                e[1].is_handover,
                e[1].sort_key(),
            ),
        )
    )
    block_edges = tuple(
        sorted(
            [(a, o, "pick") for (a, o) in cmtg.block_pick_edges]
            + [(a, o, "place") for (a, o) in cmtg.block_place_edges],
            key=lambda e: (e[0].sort_key(), e[1], e[2]),
        )
    )
    nE = len(action_edges)
    nB = len(block_edges)
    big_m = T * nE + 1

    var_names: list[str] = []
    action_var: dict[tuple[int, int], int] = {}
    block_var: dict[tuple[int, int], int] = {}
    for t in range(1, T + 1):
        for e in range(nE):
            action_var[(t, e)] = len(var_names)
            obj = action_edges[e][0]
            var_names.append(f"x_t{t}_e{e}_{obj}")
    for t in range(1, T + 1):
        for b in range(nB):
            block_var[(t, b)] = len(var_names)
            var_names.append(f"y_t{t}_b{b}_{block_edges[b][1]}")

    edges_of_object: dict[str, list[int]] = {}
    for e, (obj, _) in enumerate(action_edges):
        edges_of_object.setdefault(obj, []).append(e)
    blocks_of_action: dict[PartialAction, list[int]] = {}
    blocks_into_object: dict[str, list[int]] = {}
    for b, (action, obj, _) in enumerate(block_edges):
        blocks_of_action.setdefault(action, []).append(b)
        blocks_into_object.setdefault(obj, []).append(b)
    edge_of_action = {action: e for e, (_, action) in enumerate(action_edges)}
    robots = sorted({r for (_, a) in action_edges for r in a.robots()})

    cons: list[Constraint] = []

    if "prefix" not in omit:
        for e in range(nE):
            for t in range(1, T):
                cons.append(
                    Constraint(
                        ((action_var[(t, e)], 1), (action_var[(t + 1, e)], -1)),
                        GE,
                        0,
                        "prefix",
                    )
                )

    if "coupling" not in omit:
        for b, (action, _, _) in enumerate(block_edges):
            e = edge_of_action[action]
            for t in range(1, T + 1):
                cons.append(
                    Constraint(
                        ((action_var[(t, e)], 1), (block_var[(t, b)], -1)),
                        EQ,
                        0,
                        "coupling",
                    )
                )

    if "nontarget_gating" not in omit:
        for obj, edges in edges_of_object.items():
            if obj in cmtg.targets:
                continue
            incoming = blocks_into_object.get(obj, [])
            for e in edges:
                for t in range(1, T + 1):
                    terms = [(action_var[(t, e)], 1)]
                    terms += [(block_var[(t, b)], -1) for b in incoming]
                    cons.append(Constraint(tuple(terms), LE, 0, "nontarget_gating"))

    if "last_step_robot_cap" not in omit:
        for robot in robots:
            terms = [
                (action_var[(T, e)], 1)
                for e, (_, a) in enumerate(action_edges)
                if robot in a.robots()
            ]
            if terms:
                cons.append(Constraint(tuple(terms), LE, 1, "last_step_robot_cap"))

    if "last_step_nonempty" not in omit:
        terms = [(action_var[(T, e)], 1) for e in range(nE)]
        cons.append(Constraint(tuple(terms), GE, 1, "last_step_nonempty"))

    if "step_robot_budget" not in omit:
        for robot in robots:
            robot_edges = [
                e for e, (_, a) in enumerate(action_edges) if robot in a.robots()
            ]
            for t in range(1, T):
                terms = [(action_var[(t, e)], 1) for e in robot_edges]
                terms += [(action_var[(t + 1, e)], -1) for e in robot_edges]
                cons.append(Constraint(tuple(terms), LE, 1, "step_robot_budget"))

    if "step_nonempty" not in omit:
        for t in range(1, T):
            terms = [(action_var[(t, e)], 1) for e in range(nE)]
            terms += [(action_var[(t + 1, e)], -1) for e in range(nE)]
            cons.append(Constraint(tuple(terms), GE, 1, "step_nonempty"))

    if "targets_selected" not in omit:
        for obj in sorted(cmtg.targets):
            terms = tuple(
                (action_var[(1, e)], 1) for e in edges_of_object.get(obj, [])
            )
            cons.append(Constraint(terms, EQ, 1, "targets_selected"))

    if "blockers_selected" not in omit:
        for b, (_, obj, _) in enumerate(block_edges):
            terms = [(action_var[(1, e)], 1) for e in edges_of_object.get(obj, [])]
            terms.append((block_var[(1, b)], -1))
            cons.append(Constraint(tuple(terms), GE, 0, "blockers_selected"))

    if "move_once" not in omit:
        for obj, edges in edges_of_object.items():
            terms = tuple((action_var[(1, e)], 1) for e in edges)
            cons.append(Constraint(terms, LE, 1, "move_once"))

    for kind, family, slack in (
        ("pick", "pick_block_order", 1),
        ("place", "place_block_order", 0),
    ):
        if family in omit:
            continue
        for b, (action, obj, edge_kind) in enumerate(block_edges):
            if edge_kind != kind:
                continue
            # execution step of the blocked action >= execution step of the
            # blocker's own move (+1 for picks), active when the edge is live
            terms = [(block_var[(t, b)], 1) for t in range(1, T + 1)]
            for e in edges_of_object.get(obj, []):
                for t in range(1, T + 1):
                    terms.append((action_var[(t, e)], -1))
            terms.append((block_var[(1, b)], -big_m))
            cons.append(Constraint(tuple(terms), GE, slack - big_m, family))

    program = BinaryProgram(
        num_vars=len(var_names),
        var_names=tuple(var_names),
        objective_vars=tuple(action_var[(1, e)] for e in range(nE)),
        constraints=cons,
    )
    return IlpModel(
        program=program,
        horizon=T,
        action_edges=action_edges,
        block_edges=block_edges,
        action_var=action_var,
        block_var=block_var,
        big_m=big_m,
    )


def decode(model: IlpModel, solution: Solution, robots: tuple[str, ...]) -> TaskSkeleton:
    """Turn a feasible assignment into a task skeleton, checking invariants."""
    T = model.horizon
    values = solution.values
    exec_step: dict[int, int] = {}
    for e in range(len(model.action_edges)):
        levels = [values[model.action_var[(t, e)]] for t in range(1, T + 1)]
        for t in range(T - 1):
            if levels[t] < levels[t + 1]:
                raise DecodeViolation(f"non-prefix levels on edge {e}")
        if levels[0] == 1:
            exec_step[e] = sum(levels)

    moved: dict[str, int] = {}
    slots: list[list[PartialAction | None]] = [
        [None] * len(robots) for _ in range(T)
    ]
    robot_index = {name: i for i, name in enumerate(robots)}
    for e, step in sorted(exec_step.items()):
        obj, action = model.action_edges[e]
        if obj in moved:
            raise DecodeViolation(f"object {obj!r} moved more than once")
        moved[obj] = step
        for robot in action.robots():
            idx = robot_index[robot]
            if slots[step - 1][idx] is not None:
                raise DecodeViolation(
                    f"robot {robot!r} assigned twice at step {step}"
                )
            slots[step - 1][idx] = action

    for t, step_slots in enumerate(slots):
        if all(s is None for s in step_slots):
            raise DecodeViolation(f"empty step {t + 1}")

    selected_actions = {model.action_edges[e][1]: s for e, s in exec_step.items()}
    for action, step in selected_actions.items():
        for ba, obj, kind in model.block_edges:
            if ba != action:
                continue
            if obj not in moved:
                raise DecodeViolation(
                    f"blocker {obj!r} of a selected action was not moved"
                )
            if kind == "pick" and not moved[obj] < step:
                raise DecodeViolation(
                    f"pick blocker {obj!r} not strictly before its action"
                )
            if kind == "place" and not moved[obj] <= step:
                raise DecodeViolation(
                    f"place blocker {obj!r} later than its action"
                )

    return TaskSkeleton(
        steps=tuple(tuple(s) for s in slots),
        moved_objects=frozenset(moved),
    )


def first_horizon(targets_count: int, robot_count: int) -> int:
    """Smallest horizon worth trying: each robot does at most one action per
    step, so the targets alone need this many steps."""
    return max(1, math.ceil(targets_count / robot_count))


def strict_depth_bounds(cmtg: Cmtg) -> dict[str, float]:
    """Lower bound on the step at which each object can execute.

    An object whose every action is pick-blocked can only run strictly after
    one full set of blockers; minimizing over actions and maximizing over
    each action's blockers gives a sound bound. Objects with no feasible
    action, or caught in blocking cycles on every action, stay at infinity.
    """
    blockers_of: dict[PartialAction, set[str]] = {}
    for a, o in cmtg.block_pick_edges:
        blockers_of.setdefault(a, set()).add(o)
    actions_of = {o: cmtg.actions_of(o) for o in sorted(cmtg.object_nodes)}
    depth: dict[str, float] = {o: math.inf for o in cmtg.object_nodes}
    for _ in range(len(cmtg.object_nodes) + 1):
        changed = False
        for o, actions in actions_of.items():
            best = math.inf
            for a in actions:
                worst = 0.0
                for b in blockers_of.get(a, ()):
                    worst = max(worst, depth[b])
                best = min(best, 1.0 + worst)
            if best < depth[o]:
                depth[o] = best
                changed = True
        if not changed:
            break
    return depth


def generate_skeletons(
    cmtg: Cmtg,
    robots: tuple[str, ...],
    config: SkeletonGenConfig = SkeletonGenConfig(),
    deadline: float | None = None,
) -> list[TaskSkeleton]:
    """Skeletons over increasing horizons until the cap is filled.

    Raises EmptySkeletonSet when no horizon up to t_max yields a feasible
    model (for example when a target has no feasible action at all).
    """
    skeletons: list[TaskSkeleton] = []
    seen: set[tuple] = set()
    t0 = first_horizon(len(cmtg.targets), len(robots))
    depth = strict_depth_bounds(cmtg)
    target_depth = max((depth[o] for o in cmtg.targets), default=1.0)
    if math.isinf(target_depth):
        raise EmptySkeletonSet(
            "a target object has no feasible action or only cyclically blocked ones"
        )
    # horizons below the deepest forced precedence chain are infeasible, so
    # start above them instead of proving each one by search
    t0 = max(t0, int(target_depth))
    for T in range(t0, config.t_max + 1):
        remaining = config.max_skeletons - len(skeletons)
        if remaining <= 0:
            break
        if config.per_horizon > 0:
            remaining = min(remaining, config.per_horizon)
        level_deadline = deadline
        if config.horizon_budget > 0:
            budget_end = time.monotonic() + config.horizon_budget
            level_deadline = (
                budget_end if deadline is None else min(deadline, budget_end)
            )
        model = build_model(cmtg, T)
        distinct = model.action_var_indices()
        cuts: list[Constraint] = []
        try:
            while len(cuts) < remaining:
                sol = solve(model.program, tuple(cuts), level_deadline)
                if sol is None:
                    break
                cuts.append(no_good_cut(sol.values, distinct))
                skel = decode(model, sol, robots)
                if skel.key() not in seen:
                    seen.add(skel.key())
                    skeletons.append(skel)
        except SolveTimeout:
            if deadline is not None and time.monotonic() > deadline:
                raise
            # this horizon blew its budget; try the next one
            continue
    if not skeletons:
        raise EmptySkeletonSet(
            f"no feasible skeleton up to horizon {config.t_max}"
        )
    return skeletons
