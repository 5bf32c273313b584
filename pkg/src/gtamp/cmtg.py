"""Collaborative manipulation task graph.

The graph captures manipulation precedence: object nodes, partially grounded
action nodes (pick-and-place without a placement), action edges from an
object to the actions that move it, and block edges from an action to the
movable objects standing in its pick or goal-place sweep.

Construction recursively pulls in blockers, is idempotent per object, and
never adds frozen objects (objects already committed in a grounded suffix
cannot move again under the once-per-object assumption).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .predicates import HandoverQuery, PickQuery, PlaceQuery, PredicateSet
from .world import GraspSpec, RegionSpec, WorldState, current_region_of


class NoContainingRegion(Exception):
    """A non-goal object sits in no declared region, so it has no relocation target."""


@dataclass(frozen=True)
class PartialAction:
    """Pick-and-place without placement: who moves what to which region."""

    object: str
    region: str
    pick_robot: str
    place_robot: str
    pick_grasp: GraspSpec
    place_grasp: GraspSpec

    @property
    def is_handover(self) -> bool:
        return self.pick_robot != self.place_robot

    def robots(self) -> tuple[str, ...]:
        if self.is_handover:
            return (self.pick_robot, self.place_robot)
        return (self.pick_robot,)

    def sort_key(self) -> tuple:
        return (
            self.object,
            self.region,
            self.pick_robot,
            self.place_robot,
            self.pick_grasp.sort_key(),
            self.place_grasp.sort_key(),
        )


@dataclass
class Cmtg:
    object_nodes: set[str] = field(default_factory=set)
    action_nodes: set[PartialAction] = field(default_factory=set)
    action_edges: set[tuple[str, PartialAction]] = field(default_factory=set)
    block_pick_edges: set[tuple[PartialAction, str]] = field(default_factory=set)
    block_place_edges: set[tuple[PartialAction, str]] = field(default_factory=set)
    targets: set[str] = field(default_factory=set)

    def actions_of(self, obj: str) -> list[PartialAction]:
        return sorted(
            (a for (o, a) in self.action_edges if o == obj), key=PartialAction.sort_key
        )

    def block_edges(self) -> set[tuple[PartialAction, str]]:
        return self.block_pick_edges | self.block_place_edges

    def blockers_into(self, obj: str) -> set[PartialAction]:
        return {a for (a, o) in self.block_edges() if o == obj}


def target_region_of(world: WorldState, obj: str) -> RegionSpec:
    """Goal region for goal-named objects, else the smallest region currently
    containing the object."""
    goal_region = world.scene.goal_region_of(obj)
    if goal_region is not None:
        return world.scene.region(goal_region)
    region = current_region_of(world, obj)
    if region is None:
        raise NoContainingRegion(f"object {obj!r} lies in no declared region")
    return region


def add_object(
    obj: str,
    cmtg: Cmtg,
    preds: PredicateSet,
    world: WorldState,
    frozen: frozenset[str] = frozenset(),
) -> Cmtg:
    """Add one object and, recursively, everything that blocks moving it."""
    if obj in cmtg.object_nodes:
        return cmtg
    cmtg.object_nodes.add(obj)
    scene = world.scene
    region = target_region_of(world, obj)
    goal_named = scene.is_goal_named(obj)
    for pick_robot in scene.robots:
        for pick_grasp in scene.grasps_for(obj, pick_robot.name):
            if PickQuery(obj, pick_grasp, pick_robot.name) not in preds.reachable_pick:
                continue
            candidates: list[tuple[PartialAction, HandoverQuery | None]] = []
            if (
                PlaceQuery(obj, region.name, pick_grasp, pick_robot.name)
                in preds.reachable_place
            ):
                candidates.append(
                    (
                        PartialAction(
                            obj, region.name, pick_robot.name, pick_robot.name,
                            pick_grasp, pick_grasp,
                        ),
                        None,
                    )
                )
            if goal_named:
                for place_robot in scene.robots:
                    if place_robot.name == pick_robot.name:
                        continue
                    for place_grasp in scene.grasps_for(obj, place_robot.name):
                        ho = HandoverQuery(
                            obj, pick_grasp, place_grasp,
                            pick_robot.name, place_robot.name,
                        )
                        if ho not in preds.enable_goal_handover:
                            continue
                        if (
                            PlaceQuery(obj, region.name, place_grasp, place_robot.name)
                            not in preds.reachable_place
                        ):
                            continue
                        candidates.append(
                            (
                                PartialAction(
                                    obj, region.name,
                                    pick_robot.name, place_robot.name,
                                    pick_grasp, place_grasp,
                                ),
                                ho,
                            )
                        )
            for action, handover_q in candidates:
                cmtg.action_nodes.add(action)
                cmtg.action_edges.add((obj, action))
                pick_q = PickQuery(obj, action.pick_grasp, action.pick_robot)
                pick_side = set(preds.pick_blockers(pick_q))
                if handover_q is not None:
                    # movables in the transfer sweeps must clear out strictly
                    # before the handover runs, same as pick blockers
                    pick_side |= preds.handover_blockers.get(handover_q, frozenset())
                for blocker in sorted(pick_side):
                    if blocker in frozen:
                        continue
                    add_object(blocker, cmtg, preds, world, frozen)
                    cmtg.block_pick_edges.add((action, blocker))
                if goal_named:
                    place_q = PlaceQuery(
                        obj, region.name, action.place_grasp, action.place_robot
                    )
                    for blocker in sorted(preds.goal_place_blockers(place_q)):
                        if blocker in frozen:
                            continue
                        add_object(blocker, cmtg, preds, world, frozen)
                        cmtg.block_place_edges.add((action, blocker))
    return cmtg


def build_cmtg(
    targets: set[str] | frozenset[str],
    preds: PredicateSet,
    world: WorldState,
    frozen: frozenset[str] = frozenset(),
) -> Cmtg:
    if not targets:
        raise ValueError("targets must be nonempty")
    if targets & set(frozen):
        raise ValueError("targets and frozen objects must be disjoint")
    cmtg = Cmtg()
    for obj in sorted(targets):
        add_object(obj, cmtg, preds, world, frozen)
        cmtg.targets.add(obj)
    return cmtg


def cmtg_to_dot(cmtg: Cmtg) -> str:
    """DOT-format rendering for debugging."""
    actions = sorted(cmtg.action_nodes, key=PartialAction.sort_key)
    action_id = {a: f"a{i}" for i, a in enumerate(actions)}
    lines = ["digraph cmtg {"]
    for obj in sorted(cmtg.object_nodes):
        style = ', style=filled, fillcolor="#f4cccc"' if obj in cmtg.targets else ""
        lines.append(f'  "{obj}" [shape=ellipse{style}];')
    for a in actions:
        label = f"{a.object}->{a.region}\\n{a.pick_robot}"
        if a.is_handover:
            label += f"+{a.place_robot}"
        lines.append(f'  {action_id[a]} [shape=box, label="{label}"];')
    for obj, a in sorted(cmtg.action_edges, key=lambda e: (e[0], e[1].sort_key())):
        lines.append(f'  "{obj}" -> {action_id[a]};')
    for a, obj in sorted(cmtg.block_pick_edges, key=lambda e: (e[0].sort_key(), e[1])):
        lines.append(f'  {action_id[a]} -> "{obj}" [color=blue, label="pick"];')
    for a, obj in sorted(cmtg.block_place_edges, key=lambda e: (e[0].sort_key(), e[1])):
        lines.append(f'  {action_id[a]} -> "{obj}" [color=purple, label="place"];')
    lines.append("}")
    return "\n".join(lines)
