"""Scene description, world state and scenario file IO.

A scenario is a JSON document with top-level keys `workspace`, `fixed`,
`movable`, `regions`, `robots`, `grasps` and `goal`. The loader is strict:
unknown keys anywhere are rejected, names must be unique per category, all
geometry must sit inside the workspace and no two objects may overlap in the
initial state.

Poses are translation-only (orientation is deliberately degenerate in this
kernel), so a pose is just a Vec2. Scenes are canonicalized on load: objects,
regions and robots are sorted by name and grasps by their full tuple, making
every downstream computation independent of declaration order in the file.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

from .geometry import (
    AxisRect,
    Circle,
    Corridor,
    Placed,
    Shape,
    Vec2,
    Workspace,
    circumradius,
    fits_inside,
    intersects,
)

Pose = Vec2  # translation-only placements

DEFAULT_CLEARANCE = 0.01


class ScenarioError(Exception):
    """Raised for malformed or inconsistent scenario files."""


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    shape: Shape
    kind: str  # "movable" or "fixed"


@dataclass(frozen=True)
class RegionSpec:
    name: str
    center: Vec2
    area: AxisRect

    def contains(self, shape: Shape, pos: Vec2) -> bool:
        return fits_inside(shape, pos, self.center, self.area)

    def contains_region(self, other: "RegionSpec") -> bool:
        return fits_inside(other.area, other.center, self.center, self.area)

    @property
    def size(self) -> float:
        return 4.0 * self.area.half_w * self.area.half_h


@dataclass(frozen=True)
class RobotSpec:
    name: str
    base: Vec2
    reach_radius: float
    body_radius: float


@dataclass(frozen=True)
class GraspSpec:
    object: str
    robot: str
    approach_angle: float
    tolerance: float

    def sort_key(self) -> tuple:
        return (self.object, self.robot, self.approach_angle, self.tolerance)


@dataclass(frozen=True)
class Scene:
    workspace: Workspace
    objects: tuple[ObjectSpec, ...]
    regions: tuple[RegionSpec, ...]
    robots: tuple[RobotSpec, ...]
    grasps: tuple[GraspSpec, ...]
    goal: tuple[tuple[str, str], ...]  # (object, region) pairs

    def object(self, name: str) -> ObjectSpec:
        for o in self.objects:
            if o.name == name:
                return o
        raise KeyError(f"unknown object {name!r}")

    def region(self, name: str) -> RegionSpec:
        for r in self.regions:
            if r.name == name:
                return r
        raise KeyError(f"unknown region {name!r}")

    def robot(self, name: str) -> RobotSpec:
        for r in self.robots:
            if r.name == name:
                return r
        raise KeyError(f"unknown robot {name!r}")

    def robot_index(self, name: str) -> int:
        for i, r in enumerate(self.robots):
            if r.name == name:
                return i
        raise KeyError(f"unknown robot {name!r}")

    def movable_names(self) -> tuple[str, ...]:
        return tuple(o.name for o in self.objects if o.kind == "movable")

    def fixed_objects(self) -> tuple[ObjectSpec, ...]:
        return tuple(o for o in self.objects if o.kind == "fixed")

    def grasps_for(self, obj: str, robot: str) -> tuple[GraspSpec, ...]:
        return tuple(g for g in self.grasps if g.object == obj and g.robot == robot)

    def goal_region_of(self, obj: str) -> str | None:
        for name, region in self.goal:
            if name == obj:
                return region
        return None

    def is_goal_named(self, obj: str) -> bool:
        return self.goal_region_of(obj) is not None


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot: static scene plus current object poses."""

    scene: Scene
    poses: dict[str, Vec2] = field(default_factory=dict)

    def pose(self, name: str) -> Vec2:
        return self.poses[name]

    def placed(self, name: str) -> Placed:
        return Placed(self.scene.object(name).shape, self.poses[name])

    def fixed_placed(self) -> list[Placed]:
        return [Placed(o.shape, self.poses[o.name]) for o in self.scene.fixed_objects()]

    def moved(self, name: str, pos: Vec2) -> "WorldState":
        new_poses = dict(self.poses)
        new_poses[name] = pos
        return WorldState(self.scene, new_poses)


def pick_corridor(
    robot: RobotSpec, target: Vec2, clearance: float = DEFAULT_CLEARANCE
) -> Corridor:
    """Sweep of the robot body from its base to the target point."""
    return Corridor(robot.base, target, robot.body_radius + clearance)


def place_corridor(
    robot: RobotSpec, target: Vec2, obj_shape: Shape, clearance: float = DEFAULT_CLEARANCE
) -> Corridor:
    """Sweep of the robot body carrying the object from base to target."""
    return Corridor(
        robot.base, target, robot.body_radius + circumradius(obj_shape) + clearance
    )


def current_region_of(world: WorldState, obj: str) -> RegionSpec | None:
    """Smallest declared region entirely containing the object, or None."""
    spec = world.scene.object(obj)
    pos = world.poses[obj]
    containing = [r for r in world.scene.regions if r.contains(spec.shape, pos)]
    if not containing:
        return None
    return min(containing, key=lambda r: (r.size, r.name))


# ---------------------------------------------------------------------------
# scenario JSON


def _require_keys(d: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ScenarioError(f"{where}: missing keys {sorted(missing)}")


def _parse_point(value: Any, where: str) -> Vec2:
    if not (isinstance(value, list) and len(value) == 2):
        raise ScenarioError(f"{where}: expected [x, y], got {value!r}")
    try:
        return Vec2(float(value[0]), float(value[1]))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _parse_shape(value: Any, where: str) -> Shape:
    if not isinstance(value, dict):
        raise ScenarioError(f"{where}: shape must be an object")
    kind = value.get("kind")
    try:
        if kind == "circle":
            _require_keys(value, {"kind", "radius"}, {"kind", "radius"}, where)
            return Circle(float(value["radius"]))
        if kind == "rect":
            _require_keys(value, {"kind", "half_w", "half_h"}, {"kind", "half_w", "half_h"}, where)
            return AxisRect(float(value["half_w"]), float(value["half_h"]))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
    raise ScenarioError(f"{where}: shape kind must be 'circle' or 'rect', got {kind!r}")


def _shape_to_dict(shape: Shape) -> dict:
    if isinstance(shape, Circle):
        return {"kind": "circle", "radius": shape.radius}
    return {"kind": "rect", "half_w": shape.half_w, "half_h": shape.half_h}


def scenario_from_dict(data: dict) -> WorldState:
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be a JSON object")
    top = {"workspace", "fixed", "movable", "regions", "robots", "grasps", "goal"}
    _require_keys(data, top, top, "scenario")

    ws = data["workspace"]
    _require_keys(ws, {"min", "max"}, {"min", "max"}, "workspace")
    lo = _parse_point(ws["min"], "workspace.min")
    hi = _parse_point(ws["max"], "workspace.max")
    try:
        workspace = Workspace(lo.x, lo.y, hi.x, hi.y)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    objects: list[ObjectSpec] = []
    poses: dict[str, Vec2] = {}
    for kind, key in (("fixed", "fixed"), ("movable", "movable")):
        for i, entry in enumerate(data[key]):
            where = f"{key}[{i}]"
            _require_keys(entry, {"name", "shape", "pose"}, {"name", "shape", "pose"}, where)
            name = entry["name"]
            if not isinstance(name, str) or not name:
                raise ScenarioError(f"{where}: name must be a non-empty string")
            try:
                shape = _parse_shape(entry["shape"], f"{where}.shape")
            except ValueError as exc:
                raise ScenarioError(f"{where}: {exc}") from exc
            pos = _parse_point(entry["pose"], f"{where}.pose")
            objects.append(ObjectSpec(name, shape, kind))
            poses[name] = pos

    names = [o.name for o in objects]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ScenarioError(f"duplicate object names {dupes}")

    regions: list[RegionSpec] = []
    for i, entry in enumerate(data["regions"]):
        where = f"regions[{i}]"
        _require_keys(entry, {"name", "center", "half_extent"}, {"name", "center", "half_extent"}, where)
        center = _parse_point(entry["center"], f"{where}.center")
        half = _parse_point(entry["half_extent"], f"{where}.half_extent")
        try:
            regions.append(RegionSpec(entry["name"], center, AxisRect(half.x, half.y)))
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
    region_names = [r.name for r in regions]
    if len(set(region_names)) != len(region_names):
        raise ScenarioError("duplicate region names")

    robots: list[RobotSpec] = []
    for i, entry in enumerate(data["robots"]):
        where = f"robots[{i}]"
        _require_keys(
            entry,
            {"name", "base", "reach_radius", "body_radius"},
            {"name", "base", "reach_radius", "body_radius"},
            where,
        )
        base = _parse_point(entry["base"], f"{where}.base")
        reach = float(entry["reach_radius"])
        body = float(entry["body_radius"])
        if not (reach > body > 0.0):
            raise ScenarioError(f"{where}: need reach_radius > body_radius > 0")
        robots.append(RobotSpec(entry["name"], base, reach, body))
    robot_names = [r.name for r in robots]
    if len(set(robot_names)) != len(robot_names):
        raise ScenarioError("duplicate robot names")

    grasps: list[GraspSpec] = []
    for i, entry in enumerate(data["grasps"]):
        where = f"grasps[{i}]"
        _require_keys(
            entry,
            {"object", "robot", "approach_angle", "tolerance"},
            {"object", "robot", "approach_angle", "tolerance"},
            where,
        )
        angle = float(entry["approach_angle"])
        tol = float(entry["tolerance"])
        if not (-math.pi <= angle < math.pi):
            raise ScenarioError(f"{where}: approach_angle must be in [-pi, pi)")
        if not (0.0 < tol <= math.pi):
            raise ScenarioError(f"{where}: tolerance must be in (0, pi]")
        grasps.append(GraspSpec(entry["object"], entry["robot"], angle, tol))

    goal: list[tuple[str, str]] = []
    for i, entry in enumerate(data["goal"]):
        where = f"goal[{i}]"
        _require_keys(entry, {"object", "region"}, {"object", "region"}, where)
        goal.append((entry["object"], entry["region"]))

    scene = Scene(
        workspace=workspace,
        objects=tuple(sorted(objects, key=lambda o: o.name)),
        regions=tuple(sorted(regions, key=lambda r: r.name)),
        robots=tuple(sorted(robots, key=lambda r: r.name)),
        grasps=tuple(sorted(grasps, key=lambda g: g.sort_key())),
        goal=tuple(sorted(goal)),
    )
    world = WorldState(scene, poses)
    _validate_world(world)
    return world


def _validate_world(world: WorldState) -> None:
    scene = world.scene
    obj_names = {o.name for o in scene.objects}
    for g in scene.grasps:
        if g.object not in obj_names:
            raise ScenarioError(f"grasp references unknown object {g.object!r}")
        if scene.object(g.object).kind != "movable":
            raise ScenarioError(f"grasp on fixed object {g.object!r}")
        try:
            scene.robot(g.robot)
        except KeyError:
            raise ScenarioError(f"grasp references unknown robot {g.robot!r}") from None
    goal_objects = [o for o, _ in scene.goal]
    if len(set(goal_objects)) != len(goal_objects):
        raise ScenarioError("goal lists an object more than once")
    for obj, region in scene.goal:
        if obj not in obj_names:
            raise ScenarioError(f"goal references unknown object {obj!r}")
        if scene.object(obj).kind != "movable":
            raise ScenarioError(f"goal object {obj!r} is fixed")
        try:
            scene.region(region)
        except KeyError:
            raise ScenarioError(f"goal references unknown region {region!r}") from None
    for o in scene.objects:
        placed = Placed(o.shape, world.poses[o.name])
        if not scene.workspace.contains_placed(placed):
            raise ScenarioError(f"object {o.name!r} is not inside the workspace")
    for r in scene.regions:
        if not scene.workspace.contains_placed(Placed(r.area, r.center)):
            raise ScenarioError(f"region {r.name!r} is not inside the workspace")
    for r in scene.robots:
        if not scene.workspace.contains_point(r.base):
            raise ScenarioError(f"robot {r.name!r} base is outside the workspace")
    placed_all = [(o.name, Placed(o.shape, world.poses[o.name])) for o in scene.objects]
    for i in range(len(placed_all)):
        for j in range(i + 1, len(placed_all)):
            if intersects(placed_all[i][1], placed_all[j][1]):
                raise ScenarioError(
                    f"objects {placed_all[i][0]!r} and {placed_all[j][0]!r} "
                    "overlap in the initial state"
                )


def scenario_to_dict(world: WorldState) -> dict:
    scene = world.scene
    return {
        "workspace": {
            "min": [scene.workspace.xmin, scene.workspace.ymin],
            "max": [scene.workspace.xmax, scene.workspace.ymax],
        },
        "fixed": [
            {
                "name": o.name,
                "shape": _shape_to_dict(o.shape),
                "pose": [world.poses[o.name].x, world.poses[o.name].y],
            }
            for o in scene.objects
            if o.kind == "fixed"
        ],
        "movable": [
            {
                "name": o.name,
                "shape": _shape_to_dict(o.shape),
                "pose": [world.poses[o.name].x, world.poses[o.name].y],
            }
            for o in scene.objects
            if o.kind == "movable"
        ],
        "regions": [
            {
                "name": r.name,
                "center": [r.center.x, r.center.y],
                "half_extent": [r.area.half_w, r.area.half_h],
            }
            for r in scene.regions
        ],
        "robots": [
            {
                "name": r.name,
                "base": [r.base.x, r.base.y],
                "reach_radius": r.reach_radius,
                "body_radius": r.body_radius,
            }
            for r in scene.robots
        ],
        "grasps": [
            {
                "object": g.object,
                "robot": g.robot,
                "approach_angle": g.approach_angle,
                "tolerance": g.tolerance,
            }
            for g in scene.grasps
        ],
        "goal": [{"object": o, "region": r} for o, r in scene.goal],
    }


def loads_scenario(text: str) -> WorldState:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(data)


def load_scenario(path: str) -> WorldState:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return loads_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def save_scenario(world: WorldState, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(world), fh, indent=2, sort_keys=True)
        fh.write("\n")
