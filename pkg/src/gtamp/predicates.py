"""Reachability, occlusion and handover predicates over a world snapshot.

All five relations are computed exhaustively up front and cached together
with the sweep corridors they were judged on. The evaluation follows a
two-stage rule: a motion is reachable when it clears the fixed obstacles;
the movable objects standing in its corridor are recorded as blockers, and
an empty blocker set means the motion is already collision-free outright.

Placement reachability probes a deterministic Halton sequence of candidate
poses inside the target region and keeps the fixed-feasible probe whose
corridor crosses the fewest movables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import (
    Circle,
    Corridor,
    Placed,
    Shape,
    Vec2,
    angle_diff,
    halton_poses,
    intersects,
)
from .world import (
    DEFAULT_CLEARANCE,
    GraspSpec,
    RegionSpec,
    RobotSpec,
    WorldState,
    current_region_of,
    pick_corridor,
    place_corridor,
)


@dataclass(frozen=True)
class PickQuery:
    object: str
    grasp: GraspSpec
    robot: str


@dataclass(frozen=True)
class PlaceQuery:
    object: str
    region: str
    grasp: GraspSpec
    robot: str


@dataclass(frozen=True)
class HandoverQuery:
    object: str
    pick_grasp: GraspSpec
    place_grasp: GraspSpec
    pick_robot: str
    place_robot: str


@dataclass(frozen=True)
class PredicateConfig:
    n_probe: int = 64
    clearance: float = DEFAULT_CLEARANCE
    allow_handovers: bool = True


@dataclass
class PredicateSet:
    """All true predicate instances plus blocker sets and cached corridors."""

    reachable_pick: set[PickQuery] = field(default_factory=set)
    occludes_pick: dict[PickQuery, frozenset[str]] = field(default_factory=dict)
    pick_corridors: dict[PickQuery, Corridor] = field(default_factory=dict)
    reachable_place: set[PlaceQuery] = field(default_factory=set)
    occludes_goal_place: dict[PlaceQuery, frozenset[str]] = field(default_factory=dict)
    place_corridors: dict[PlaceQuery, Corridor] = field(default_factory=dict)
    place_probes: dict[PlaceQuery, Vec2] = field(default_factory=dict)
    enable_goal_handover: set[HandoverQuery] = field(default_factory=set)
    handover_blockers: dict[HandoverQuery, frozenset[str]] = field(default_factory=dict)
    handover_points: dict[tuple[str, str, str], Vec2] = field(default_factory=dict)

    def pick_blockers(self, q: PickQuery) -> frozenset[str]:
        return self.occludes_pick.get(q, frozenset())

    def goal_place_blockers(self, q: PlaceQuery) -> frozenset[str]:
        return self.occludes_goal_place.get(q, frozenset())


@dataclass(frozen=True)
class PickEval:
    reachable: bool
    blockers: frozenset[str]
    corridor: Corridor | None


@dataclass(frozen=True)
class PlaceEval:
    reachable: bool
    blockers: frozenset[str]
    corridor: Corridor | None
    probe_pose: Vec2 | None


def handover_point(world: WorldState, robot_a: str, robot_b: str) -> Vec2:
    """Meeting point for a transfer: midpoint of the two bases, clamped."""
    a = world.scene.robot(robot_a).base
    b = world.scene.robot(robot_b).base
    mid = Vec2((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
    return world.scene.workspace.clamp(mid)


def handover_standoffs(
    world: WorldState, point: Vec2, robot_a: str, robot_b: str
) -> tuple[Placed, Placed]:
    """Robot body discs backed off from the handover point toward each base."""
    discs = []
    for name in (robot_a, robot_b):
        spec = world.scene.robot(name)
        d = spec.base - point
        n = d.norm()
        if n > 0.0:
            center = point + d.scaled(spec.body_radius / n)
        else:
            center = point
        discs.append(Placed(Circle(spec.body_radius), center))
    return discs[0], discs[1]


def _standoffs_collide(a: Placed, b: Placed) -> bool:
    # Strict overlap only: the bodies meeting exactly at the transfer point is
    # the sanctioned contact, so tangency passes here.
    assert isinstance(a.shape, Circle) and isinstance(b.shape, Circle)
    return a.center.dist(b.center) < a.shape.radius + b.shape.radius - 1e-12


def _movable_hits(
    world: WorldState, corridor: Corridor, exclude: str
) -> frozenset[str]:
    hits = []
    for name in world.scene.movable_names():
        if name == exclude:
            continue
        if intersects(world.placed(name), corridor):
            hits.append(name)
    return frozenset(hits)


def eval_reachable_pick(
    world: WorldState, q: PickQuery, cfg: PredicateConfig = PredicateConfig()
) -> PickEval:
    """Reachable iff the object is in reach, the grasp approach lines up and
    the pick sweep clears the fixed obstacles. Blockers are the movables
    standing in the sweep; unreachable is a value, not an error."""
    robot = world.scene.robot(q.robot)
    target = world.poses[q.object]
    offset = target - robot.base
    if offset.norm() > robot.reach_radius:
        return PickEval(False, frozenset(), None)
    if offset.norm() > 0.0:
        approach = math.atan2(offset.y, offset.x)
        if angle_diff(approach, q.grasp.approach_angle) > q.grasp.tolerance:
            return PickEval(False, frozenset(), None)
    corridor = pick_corridor(robot, target, cfg.clearance)
    for fixed in world.fixed_placed():
        if intersects(fixed, corridor):
            return PickEval(False, frozenset(), None)
    return PickEval(True, _movable_hits(world, corridor, q.object), corridor)


def eval_reachable_place(
    world: WorldState,
    obj: str,
    region: RegionSpec,
    grasp: GraspSpec,
    robot_name: str,
    cfg: PredicateConfig = PredicateConfig(),
) -> PlaceEval:
    """Probe deterministic candidate placements in the region; keep the
    fixed-feasible probe whose carry sweep hits the fewest movables."""
    robot = world.scene.robot(robot_name)
    shape = world.scene.object(obj).shape
    fixed = world.fixed_placed()
    best: tuple[int, Vec2, Corridor, frozenset[str]] | None = None
    for pose in halton_probe_poses(shape, region, cfg.n_probe):
        if pose.dist(robot.base) > robot.reach_radius:
            continue
        corridor = place_corridor(robot, pose, shape, cfg.clearance)
        if any(intersects(f, corridor) for f in fixed):
            continue
        blockers = _movable_hits(world, corridor, obj)
        if best is None or len(blockers) < best[0]:
            best = (len(blockers), pose, corridor, blockers)
        if best[0] == 0:
            break
    if best is None:
        return PlaceEval(False, frozenset(), None, None)
    _, pose, corridor, blockers = best
    return PlaceEval(True, blockers, corridor, pose)


def halton_probe_poses(shape: Shape, region: RegionSpec, count: int) -> list[Vec2]:
    return halton_poses(shape, region.center, region.area, count)


@dataclass(frozen=True)
class HandoverEval:
    enabled: bool
    blockers: frozenset[str]


def eval_goal_handover(
    world: WorldState,
    obj: str,
    pick_grasp: GraspSpec,
    place_grasp: GraspSpec,
    pick_robot: str,
    place_robot: str,
    cfg: PredicateConfig = PredicateConfig(),
) -> bool:
    """True iff both robots can meet at the transfer point for the object:
    the point is inside both reach discs, both approach sweeps clear the
    fixed obstacles and the robot bodies do not overlap at their standoffs.

    Symmetric under swapping the two (grasp, robot) pairs: both approach
    sweeps use the carrying width, since either robot holds the object near
    the transfer point.
    """
    return eval_goal_handover_full(
        world, obj, pick_grasp, place_grasp, pick_robot, place_robot, cfg
    ).enabled


def eval_goal_handover_full(
    world: WorldState,
    obj: str,
    pick_grasp: GraspSpec,
    place_grasp: GraspSpec,
    pick_robot: str,
    place_robot: str,
    cfg: PredicateConfig = PredicateConfig(),
) -> HandoverEval:
    """Handover feasibility plus the movables standing in either approach
    sweep (empty when the transfer is collision-free outright)."""
    if pick_robot == place_robot:
        raise ValueError("handover requires two distinct robots")
    point = handover_point(world, pick_robot, place_robot)
    shape = world.scene.object(obj).shape
    fixed = world.fixed_placed()
    blockers: frozenset[str] = frozenset()
    for name in (pick_robot, place_robot):
        spec = world.scene.robot(name)
        if point.dist(spec.base) > spec.reach_radius:
            return HandoverEval(False, frozenset())
        corridor = place_corridor(spec, point, shape, cfg.clearance)
        if any(intersects(f, corridor) for f in fixed):
            return HandoverEval(False, frozenset())
        blockers |= _movable_hits(world, corridor, obj)
    a, b = handover_standoffs(world, point, pick_robot, place_robot)
    if _standoffs_collide(a, b):
        return HandoverEval(False, frozenset())
    return HandoverEval(True, blockers)


def _place_region_for(world: WorldState, obj: str) -> RegionSpec | None:
    goal_region = world.scene.goal_region_of(obj)
    if goal_region is not None:
        return world.scene.region(goal_region)
    return current_region_of(world, obj)


def compute_predicates(
    world: WorldState, cfg: PredicateConfig = PredicateConfig()
) -> PredicateSet:
    """Evaluate every predicate instance for the snapshot.

    Structured as one independent pass per robot merged afterwards, so the
    result does not depend on evaluation order and the per-robot passes are
    safe to fan out over the immutable world.
    """
    preds = PredicateSet()
    scene = world.scene
    for robot in scene.robots:
        _compute_for_robot(world, robot, cfg, preds)
    if cfg.allow_handovers:
        for obj, _ in scene.goal:
            for r1 in scene.robots:
                for r2 in scene.robots:
                    if r1.name == r2.name:
                        continue
                    for g1 in scene.grasps_for(obj, r1.name):
                        for g2 in scene.grasps_for(obj, r2.name):
                            ev = eval_goal_handover_full(
                                world, obj, g1, g2, r1.name, r2.name, cfg
                            )
                            if ev.enabled:
                                q = HandoverQuery(obj, g1, g2, r1.name, r2.name)
                                preds.enable_goal_handover.add(q)
                                preds.handover_blockers[q] = ev.blockers
                                preds.handover_points[(obj, r1.name, r2.name)] = (
                                    handover_point(world, r1.name, r2.name)
                                )
    return preds


def _compute_for_robot(
    world: WorldState, robot: RobotSpec, cfg: PredicateConfig, preds: PredicateSet
) -> None:
    scene = world.scene
    for obj in scene.movable_names():
        for grasp in scene.grasps_for(obj, robot.name):
            q = PickQuery(obj, grasp, robot.name)
            ev = eval_reachable_pick(world, q, cfg)
            if ev.reachable:
                preds.reachable_pick.add(q)
                preds.occludes_pick[q] = ev.blockers
                preds.pick_corridors[q] = ev.corridor
            region = _place_region_for(world, obj)
            if region is None:
                continue
            pq = PlaceQuery(obj, region.name, grasp, robot.name)
            pv = eval_reachable_place(world, obj, region, grasp, robot.name, cfg)
            if pv.reachable:
                preds.reachable_place.add(pq)
                preds.place_corridors[pq] = pv.corridor
                preds.place_probes[pq] = pv.probe_pose
                if scene.goal_region_of(obj) == region.name:
                    preds.occludes_goal_place[pq] = pv.blockers


def _grasp_dict(g: GraspSpec) -> dict:
    return {
        "object": g.object,
        "robot": g.robot,
        "approach_angle": g.approach_angle,
        "tolerance": g.tolerance,
    }


def predicates_to_dict(preds: PredicateSet) -> dict:
    """JSON-friendly dump of all true predicate instances for inspection."""

    def pick_key(q: PickQuery):
        return (q.object, q.robot, q.grasp.sort_key())

    def place_key(q: PlaceQuery):
        return (q.object, q.region, q.robot, q.grasp.sort_key())

    return {
        "reachable_pick": [
            {
                "object": q.object,
                "robot": q.robot,
                "grasp": _grasp_dict(q.grasp),
                "blockers": sorted(preds.occludes_pick.get(q, frozenset())),
            }
            for q in sorted(preds.reachable_pick, key=pick_key)
        ],
        "reachable_place": [
            {
                "object": q.object,
                "region": q.region,
                "robot": q.robot,
                "grasp": _grasp_dict(q.grasp),
                "blockers": sorted(preds.occludes_goal_place.get(q, frozenset())),
                "goal_place": q in preds.occludes_goal_place,
            }
            for q in sorted(preds.reachable_place, key=place_key)
        ],
        "enable_goal_handover": [
            {
                "object": q.object,
                "pick_robot": q.pick_robot,
                "place_robot": q.place_robot,
                "pick_grasp": _grasp_dict(q.pick_grasp),
                "place_grasp": _grasp_dict(q.place_grasp),
            }
            for q in sorted(
                preds.enable_goal_handover,
                key=lambda q: (q.object, q.pick_robot, q.place_robot),
            )
        ],
        "handover_points": {
            f"{obj}|{r1}|{r2}": [p.x, p.y]
            for (obj, r1, r2), p in sorted(preds.handover_points.items())
        },
    }
