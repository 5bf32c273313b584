"""Reverse grounding of task skeletons and independent plan validation.

Grounding walks the skeleton from its last step backwards. Placements
sampled at a step must stay clear of everything that persists or is still
standing: fixed obstacles, movables the plan never touches, movables moved
in later steps (still at their start poses), the sweep volumes and
placements already committed for later steps, and anything grounded earlier
within the same step. Sweep corridors must clear the standing obstacles but
not the later sweeps, which run at a different time.

When a step cannot be grounded strictly, it is retried ignoring the
untouched movables; on success grounding terminates early and reports the
grounded tail plus the set of objects that must first be cleared away.

The validator replays a plan forward against the world, re-deriving every
corridor and re-checking every collision rule at the poses current at each
step, so it accepts no approximation made during grounding.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .cmtg import PartialAction
from .geometry import Corridor, Placed, Vec2, angle_diff, intersects, sample_placement
from .predicates import handover_point, handover_standoffs
from .world import (
    DEFAULT_CLEARANCE,
    GraspSpec,
    WorldState,
    pick_corridor,
    place_corridor,
)


@dataclass(frozen=True)
class GroundedAction:
    action: PartialAction
    placement: Vec2
    pick_corridor: Corridor
    place_corridor: Corridor
    carry_corridor: Corridor | None = None  # pick robot base -> transfer point
    reach_corridor: Corridor | None = None  # place robot base -> transfer point
    handover_point: Vec2 | None = None

    def corridors(self) -> list[Corridor]:
        out = [self.pick_corridor]
        if self.carry_corridor is not None:
            out.append(self.carry_corridor)
        if self.reach_corridor is not None:
            out.append(self.reach_corridor)
        out.append(self.place_corridor)
        return out


@dataclass(frozen=True)
class GroundedJointAction:
    slots: tuple[GroundedAction | None, ...]  # one per robot, scene order
    step_index: int

    def actions(self) -> list[GroundedAction]:
        out: list[GroundedAction] = []
        for a in self.slots:
            if a is not None and a not in out:
                out.append(a)
        return out


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundedJointAction, ...]
    moved_objects: frozenset[str]

    @property
    def makespan(self) -> int:
        return len(self.steps)

    @property
    def motion_cost(self) -> int:
        return len(self.moved_objects)


@dataclass(frozen=True)
class Success:
    plan: Plan


@dataclass(frozen=True)
class Partial:
    prefix: tuple[GroundedJointAction, ...]
    must_move: frozenset[str]


@dataclass(frozen=True)
class Failure:
    pass


GroundingResult = Success | Partial | Failure


@dataclass(frozen=True)
class GroundConfig:
    strict_attempts: int = 200
    relaxed_attempts: int = 200
    clearance: float = DEFAULT_CLEARANCE


def action_footprint(ga: GroundedAction, world: WorldState) -> list[Placed | Corridor]:
    """Everything this action occupies: sweeps, the object before the move
    and the object after it."""
    shape = world.scene.object(ga.action.object).shape
    out: list[Placed | Corridor] = list(ga.corridors())
    out.append(Placed(shape, world.poses[ga.action.object]))
    out.append(Placed(shape, ga.placement))
    return out


def moved_objects_of(steps) -> set[str]:
    return {ga.action.object for joint in steps for ga in joint.actions()}


def _reindex(steps: list[GroundedJointAction]) -> tuple[GroundedJointAction, ...]:
    return tuple(
        dataclasses.replace(j, step_index=i) for i, j in enumerate(steps, start=1)
    )


def ground(
    skeleton,
    s_fut: tuple[GroundedJointAction, ...],
    world: WorldState,
    cfg: GroundConfig = GroundConfig(),
    rng=None,
) -> GroundingResult:
    """Ground the skeleton in reverse, ahead of the already-grounded suffix.

    Deterministic for a given rng state. Returns Success with a full plan,
    Partial with the grounded tail and the objects that must still be moved,
    or Failure when even relaxed sampling cannot complete a step.
    """
    if rng is None:
        raise ValueError("ground() needs a caller-owned rng")
    scene = world.scene
    fixed = world.fixed_placed()
    future_volumes: list[Placed | Corridor] = []
    for joint in s_fut:
        for ga in joint.actions():
            future_volumes.extend(action_footprint(ga, world))
    future_moved = moved_objects_of(s_fut)
    pending = set(skeleton.moved_objects)
    bystanders = set(scene.movable_names()) - future_moved - pending

    grounded_rev: list[GroundedJointAction] = []
    T = skeleton.length
    for t in range(T, 0, -1):
        step_actions = _distinct_actions(skeleton.steps[t - 1])
        joint = _ground_step(
            step_actions, world, cfg, rng, fixed,
            future_volumes, future_moved, bystanders, strict=True,
        )
        if joint is None:
            joint = _ground_step(
                step_actions, world, cfg, rng, fixed,
                future_volumes, future_moved, bystanders, strict=False,
            )
            if joint is None:
                return Failure()
            grounded_rev.append(joint)
            prefix = _reindex(list(reversed(grounded_rev)) + list(s_fut))
            moved_prefix = moved_objects_of(prefix)
            must_move = _must_move(world, prefix, moved_prefix)
            if not must_move:
                # the grounded tail already satisfies the goal and nothing
                # occludes it, so it is a complete plan in its own right
                return Success(Plan(prefix, frozenset(moved_prefix)))
            return Partial(prefix, frozenset(must_move))
        grounded_rev.append(joint)
        for ga in joint.actions():
            future_volumes.extend(action_footprint(ga, world))
            future_moved.add(ga.action.object)
            pending.discard(ga.action.object)
    steps = _reindex(list(reversed(grounded_rev)) + list(s_fut))
    return Success(Plan(steps, frozenset(moved_objects_of(steps))))


def _distinct_actions(slots) -> list[PartialAction]:
    out: list[PartialAction] = []
    for a in slots:
        if a is not None and a not in out:
            out.append(a)
    return out


def _must_move(world: WorldState, prefix, moved_prefix: set[str]) -> set[str]:
    """Goal objects not yet moved plus movables occluding the grounded tail."""
    footprint: list[Placed | Corridor] = []
    for joint in prefix:
        for ga in joint.actions():
            footprint.extend(action_footprint(ga, world))
    out = {o for o, _ in world.scene.goal if o not in moved_prefix}
    for name in world.scene.movable_names():
        if name in moved_prefix or name in out:
            continue
        placed = world.placed(name)
        if any(intersects(placed, f) for f in footprint):
            out.add(name)
    return out


def _ground_step(
    actions: list[PartialAction],
    world: WorldState,
    cfg: GroundConfig,
    rng,
    fixed: list[Placed],
    future_volumes: list[Placed | Corridor],
    future_moved: set[str],
    bystanders: set[str],
    strict: bool,
) -> GroundedJointAction | None:
    scene = world.scene
    standing = list(fixed)
    standing += [world.placed(m) for m in sorted(future_moved)]
    if strict:
        standing += [world.placed(m) for m in sorted(bystanders)]
    slots: list[GroundedAction | None] = [None] * len(scene.robots)
    same_step: list[Placed | Corridor] = []
    budget = cfg.strict_attempts if strict else cfg.relaxed_attempts
    for action in actions:
        ga = _ground_action(
            action, world, cfg, rng, standing, future_volumes, same_step, budget
        )
        if ga is None:
            return None
        for robot in action.robots():
            slots[scene.robot_index(robot)] = ga
        same_step.extend(action_footprint(ga, world))
    return GroundedJointAction(tuple(slots), step_index=0)


def _ground_action(
    action: PartialAction,
    world: WorldState,
    cfg: GroundConfig,
    rng,
    standing: list[Placed],
    future_volumes: list[Placed | Corridor],
    same_step: list[Placed | Corridor],
    budget: int,
) -> GroundedAction | None:
    scene = world.scene
    shape = scene.object(action.object).shape
    obj_pose = world.poses[action.object]
    picker = scene.robot(action.pick_robot)
    placer = scene.robot(action.place_robot)
    region = scene.region(action.region)

    pick_corr = pick_corridor(picker, obj_pose, cfg.clearance)
    carry = reach = None
    point = None
    if action.is_handover:
        point = handover_point(world, action.pick_robot, action.place_robot)
        carry = place_corridor(picker, point, shape, cfg.clearance)
        reach = place_corridor(placer, point, shape, cfg.clearance)
    for corr in filter(None, (pick_corr, carry, reach)):
        if any(intersects(corr, s) for s in standing):
            return None
        if any(intersects(corr, f) for f in same_step):
            return None

    forbidden = standing + future_volumes + same_step
    for _ in range(budget):
        pos = sample_placement(shape, region.center, region.area, forbidden, rng, 1)
        if pos is None:
            continue
        if pos.dist(placer.base) > placer.reach_radius:
            continue
        place_corr = place_corridor(placer, pos, shape, cfg.clearance)
        if any(intersects(place_corr, s) for s in standing):
            continue
        if any(intersects(place_corr, f) for f in same_step):
            continue
        return GroundedAction(
            action=action,
            placement=pos,
            pick_corridor=pick_corr,
            place_corridor=place_corr,
            carry_corridor=carry,
            reach_corridor=reach,
            handover_point=point,
        )
    return None


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    step: int | None
    code: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, step: int | None, code: str, message: str) -> None:
        self.violations.append(Violation(step, code, message))


def _corridors_close(a: Corridor, b: Corridor, tol: float = 1e-9) -> bool:
    return (
        a.start.dist(b.start) <= tol
        and a.end.dist(b.end) <= tol
        and abs(a.half_width - b.half_width) <= tol
    )


def validate(
    plan: Plan, world: WorldState, clearance: float = DEFAULT_CLEARANCE
) -> ValidationReport:
    """Re-simulate the plan forward and report every violation found."""
    report = ValidationReport()
    scene = world.scene
    poses = dict(world.poses)
    moved_seen: set[str] = set()
    fixed = world.fixed_placed()

    for idx, joint in enumerate(plan.steps, start=1):
        if joint.step_index != idx:
            report.add(idx, "step-index", f"step records index {joint.step_index}")
        if len(joint.slots) != len(scene.robots):
            report.add(idx, "slot-count", "slot tuple does not match robot count")
            continue
        actions = joint.actions()
        if not actions:
            report.add(idx, "empty-step", "no action at this step")
            continue
        step_objects = {ga.action.object for ga in actions}
        for slot_i, ga in enumerate(joint.slots):
            if ga is None:
                continue
            robot_name = scene.robots[slot_i].name
            if robot_name not in ga.action.robots():
                report.add(
                    idx, "slot-robot",
                    f"slot of {robot_name!r} holds an action of other robots",
                )
        for ga in actions:
            for robot in ga.action.robots():
                if joint.slots[scene.robot_index(robot)] != ga:
                    report.add(
                        idx, "slot-missing",
                        f"robot {robot!r} does not carry its action this step",
                    )
            _validate_action(report, idx, ga, world, poses, clearance)
            obj = ga.action.object
            if obj in moved_seen:
                report.add(idx, "double-move", f"object {obj!r} moved twice")
            moved_seen.add(obj)
            # standing obstacles at this step: everything not moved right now
            standing = list(fixed)
            for name in scene.movable_names():
                if name in step_objects:
                    continue
                standing.append(Placed(scene.object(name).shape, poses[name]))
            shape = scene.object(obj).shape
            for corr in ga.corridors():
                for s in standing:
                    if intersects(corr, s):
                        report.add(
                            idx, "sweep-collision",
                            f"sweep of {obj!r} hits an obstacle",
                        )
                        break
            placed = Placed(shape, ga.placement)
            if any(intersects(placed, s) for s in standing):
                report.add(
                    idx, "placement-collision",
                    f"placement of {obj!r} overlaps an obstacle",
                )
        step_world = WorldState(scene, poses)
        footprints = [action_footprint(ga, step_world) for ga in actions]
        for i in range(len(actions)):
            for j in range(i + 1, len(actions)):
                if any(intersects(a, b) for a in footprints[i] for b in footprints[j]):
                    report.add(
                        idx, "same-step-conflict",
                        f"actions on {actions[i].action.object!r} and "
                        f"{actions[j].action.object!r} overlap",
                    )
        for ga in actions:
            poses[ga.action.object] = ga.placement

    if plan.moved_objects != frozenset(moved_seen):
        report.add(None, "moved-set", "recorded moved set differs from steps")
    for obj, region_name in scene.goal:
        region = scene.region(region_name)
        if not region.contains(scene.object(obj).shape, poses[obj]):
            report.add(
                None, "goal-unsatisfied",
                f"object {obj!r} does not end inside region {region_name!r}",
            )
    return report


def _validate_action(
    report: ValidationReport,
    idx: int,
    ga: GroundedAction,
    world: WorldState,
    poses: dict[str, Vec2],
    clearance: float,
) -> None:
    scene = world.scene
    action = ga.action
    shape = scene.object(action.object).shape
    cur = poses[action.object]
    picker = scene.robot(action.pick_robot)
    placer = scene.robot(action.place_robot)

    offset = cur - picker.base
    if offset.norm() > picker.reach_radius:
        report.add(idx, "pick-unreachable", f"{action.object!r} outside pick reach")
    elif offset.norm() > 0.0:
        approach = math.atan2(offset.y, offset.x)
        if angle_diff(approach, action.pick_grasp.approach_angle) > action.pick_grasp.tolerance:
            report.add(idx, "grasp-misaligned", f"grasp approach to {action.object!r} off")
    if ga.placement.dist(placer.base) > placer.reach_radius:
        report.add(idx, "place-unreachable", "placement outside place reach")
    region = scene.region(action.region)
    if not region.contains(shape, ga.placement):
        report.add(idx, "placement-outside-region", "placement not inside target region")

    if not _corridors_close(ga.pick_corridor, pick_corridor(picker, cur, clearance)):
        report.add(idx, "corridor-mismatch", "stored pick sweep is inconsistent")
    if not _corridors_close(
        ga.place_corridor, place_corridor(placer, ga.placement, shape, clearance)
    ):
        report.add(idx, "corridor-mismatch", "stored place sweep is inconsistent")
    if action.is_handover:
        point = handover_point(world, action.pick_robot, action.place_robot)
        if ga.handover_point is None or ga.handover_point.dist(point) > 1e-9:
            report.add(idx, "handover-point", "stored transfer point is inconsistent")
        for name, corr in (("carry", ga.carry_corridor), ("reach", ga.reach_corridor)):
            robot = picker if name == "carry" else placer
            if corr is None or not _corridors_close(
                corr, place_corridor(robot, point, shape, clearance)
            ):
                report.add(idx, "corridor-mismatch", f"stored {name} sweep inconsistent")
        for robot in (picker, placer):
            if point.dist(robot.base) > robot.reach_radius:
                report.add(
                    idx, "handover-unreachable",
                    f"transfer point outside reach of {robot.name!r}",
                )
        a, b = handover_standoffs(world, point, action.pick_robot, action.place_robot)
        if a.center.dist(b.center) < a.shape.radius + b.shape.radius - 1e-12:
            report.add(idx, "handover-body-overlap", "robot bodies overlap at transfer")
    else:
        if ga.carry_corridor is not None or ga.reach_corridor is not None:
            report.add(idx, "corridor-mismatch", "transfer sweeps on a single-robot action")


# ---------------------------------------------------------------------------
# plan serialization


class PlanFormatError(Exception):
    pass


def _corridor_dict(c: Corridor) -> dict:
    return {
        "start": [c.start.x, c.start.y],
        "end": [c.end.x, c.end.y],
        "half_width": c.half_width,
    }


def _grasp_to_dict(g: GraspSpec) -> dict:
    return {
        "object": g.object,
        "robot": g.robot,
        "approach_angle": g.approach_angle,
        "tolerance": g.tolerance,
    }


def _action_to_dict(ga: GroundedAction) -> dict:
    a = ga.action
    return {
        "object": a.object,
        "region": a.region,
        "pick_robot": a.pick_robot,
        "place_robot": a.place_robot,
        "pick_grasp": _grasp_to_dict(a.pick_grasp),
        "place_grasp": _grasp_to_dict(a.place_grasp),
        "placement": [ga.placement.x, ga.placement.y],
        "pick_corridor": _corridor_dict(ga.pick_corridor),
        "place_corridor": _corridor_dict(ga.place_corridor),
        "carry_corridor": (
            _corridor_dict(ga.carry_corridor) if ga.carry_corridor else None
        ),
        "reach_corridor": (
            _corridor_dict(ga.reach_corridor) if ga.reach_corridor else None
        ),
        "handover_point": (
            [ga.handover_point.x, ga.handover_point.y] if ga.handover_point else None
        ),
    }


def plan_to_dict(plan: Plan, world: WorldState, clearance: float = DEFAULT_CLEARANCE) -> dict:
    scene = world.scene
    return {
        "clearance": clearance,
        "makespan": plan.makespan,
        "motion_cost": plan.motion_cost,
        "moved_objects": sorted(plan.moved_objects),
        "steps": [
            {
                "step_index": joint.step_index,
                "slots": {
                    scene.robots[i].name: (
                        _action_to_dict(ga) if ga is not None else None
                    )
                    for i, ga in enumerate(joint.slots)
                },
            }
            for joint in plan.steps
        ],
    }


def _parse_vec(value, where: str) -> Vec2:
    if not (isinstance(value, list) and len(value) == 2):
        raise PlanFormatError(f"{where}: expected [x, y]")
    return Vec2(float(value[0]), float(value[1]))


def _parse_corridor(value, where: str) -> Corridor:
    if not isinstance(value, dict):
        raise PlanFormatError(f"{where}: expected corridor object")
    return Corridor(
        _parse_vec(value["start"], where),
        _parse_vec(value["end"], where),
        float(value["half_width"]),
    )


def _parse_grasp(value, where: str) -> GraspSpec:
    try:
        return GraspSpec(
            value["object"], value["robot"],
            float(value["approach_angle"]), float(value["tolerance"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanFormatError(f"{where}: bad grasp: {exc}") from exc


def _parse_action(value, world: WorldState, where: str) -> GroundedAction:
    scene = world.scene
    try:
        obj = value["object"]
        scene.object(obj)
        scene.region(value["region"])
        scene.robot(value["pick_robot"])
        scene.robot(value["place_robot"])
    except KeyError as exc:
        raise PlanFormatError(f"{where}: {exc}") from exc
    action = PartialAction(
        object=obj,
        region=value["region"],
        pick_robot=value["pick_robot"],
        place_robot=value["place_robot"],
        pick_grasp=_parse_grasp(value["pick_grasp"], where),
        place_grasp=_parse_grasp(value["place_grasp"], where),
    )
    return GroundedAction(
        action=action,
        placement=_parse_vec(value["placement"], where),
        pick_corridor=_parse_corridor(value["pick_corridor"], where),
        place_corridor=_parse_corridor(value["place_corridor"], where),
        carry_corridor=(
            _parse_corridor(value["carry_corridor"], where)
            if value.get("carry_corridor")
            else None
        ),
        reach_corridor=(
            _parse_corridor(value["reach_corridor"], where)
            if value.get("reach_corridor")
            else None
        ),
        handover_point=(
            _parse_vec(value["handover_point"], where)
            if value.get("handover_point")
            else None
        ),
    )


def plan_from_dict(data: dict, world: WorldState) -> tuple[Plan, float]:
    """Parse a plan file; returns the plan and the clearance it was built with."""
    if not isinstance(data, dict):
        raise PlanFormatError("plan root must be a JSON object")
    scene = world.scene
    try:
        clearance = float(data["clearance"])
        steps_data = data["steps"]
        moved = frozenset(data["moved_objects"])
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanFormatError(f"bad plan structure: {exc}") from exc
    steps: list[GroundedJointAction] = []
    for i, step in enumerate(steps_data):
        where = f"steps[{i}]"
        slots: list[GroundedAction | None] = [None] * len(scene.robots)
        slot_data = step.get("slots")
        if not isinstance(slot_data, dict):
            raise PlanFormatError(f"{where}: missing slots")
        parsed: dict[str, GroundedAction] = {}
        for robot_name, action_data in slot_data.items():
            try:
                idx = scene.robot_index(robot_name)
            except KeyError as exc:
                raise PlanFormatError(f"{where}: {exc}") from exc
            if action_data is None:
                continue
            key = json.dumps(action_data, sort_keys=True)
            if key not in parsed:
                parsed[key] = _parse_action(action_data, world, where)
            slots[idx] = parsed[key]
        steps.append(
            GroundedJointAction(tuple(slots), step_index=int(step.get("step_index", i + 1)))
        )
    return Plan(tuple(steps), moved), clearance


def load_plan(path: str, world: WorldState) -> tuple[Plan, float]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PlanFormatError(
                f"invalid JSON at line {exc.lineno}: {exc.msg}"
            ) from exc
    return plan_from_dict(data, world)


def save_plan(plan: Plan, world: WorldState, path: str, clearance: float = DEFAULT_CLEARANCE) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plan_to_dict(plan, world, clearance), fh, indent=2, sort_keys=True)
        fh.write("\n")
