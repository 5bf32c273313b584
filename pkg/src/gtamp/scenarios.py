"""Deterministic benchmark scenario generators.

Two families:

* pack: goal objects and obstacles crowd one start region; three goal boxes
  sit across the table. Robots stand on opposite sides with overlapping
  reach, so deep-left objects can only reach the boxes through a handover.
* boxmove: a walled corridor separates a start region from a goal region,
  with obstacle clutter inside the corridor. Each goal object is graspable
  by exactly one robot, so no handover actions arise; obstacles relocate to
  the open table.

Generation is pure given (family, params, seed): coordinates are rounded
before the non-overlap check, so the emitted JSON is byte-identical across
runs.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .world import WorldState, scenario_from_dict


class GeneratorError(Exception):
    """The requested crowd does not fit after bounded attempts."""


@dataclass(frozen=True)
class GenParams:
    n_goal: int
    n_obstacles: int
    n_robots: int
    seed: int


# bases sit on a lane below the start region so transfer legs between robots
# never cross the crowd; the left robot cannot reach the goal boxes, which
# keeps handovers load-bearing for deep-left objects
_PACK_ROBOTS = [
    {"name": "r1", "base": [1.6, 0.9], "reach_radius": 7.8, "body_radius": 0.28},
    {"name": "r2", "base": [9.6, 0.9], "reach_radius": 6.9, "body_radius": 0.28},
    {"name": "r3", "base": [5.6, 0.7], "reach_radius": 7.0, "body_radius": 0.28},
    {"name": "r4", "base": [7.4, 0.7], "reach_radius": 6.4, "body_radius": 0.28},
]

_GOAL_REGIONS = [
    {"name": "box_a", "center": [11.4, 1.7], "half_extent": [0.95, 0.8]},
    {"name": "box_b", "center": [11.4, 4.0], "half_extent": [0.95, 0.8]},
    {"name": "box_c", "center": [11.4, 6.3], "half_extent": [0.95, 0.8]},
]

_MIN_GAP = 0.15
_PLACE_TRIES = 4000


def _round2(v: float) -> float:
    return round(v, 4)


def _sample_positions(
    rng: random.Random,
    sizes: list[float],
    bounds: tuple[float, float, float, float],
    occupied: list[tuple[float, float, float]],
) -> list[tuple[float, float]]:
    """Greedy rejection placement of circumradius-sized discs with a margin."""
    xlo, xhi, ylo, yhi = bounds
    placed = list(occupied)
    out = []
    for size in sizes:
        for attempt in range(_PLACE_TRIES):
            x = _round2(rng.uniform(xlo + size, xhi - size))
            y = _round2(rng.uniform(ylo + size, yhi - size))
            if all(
                (x - ox) ** 2 + (y - oy) ** 2 >= (size + os + _MIN_GAP) ** 2
                for ox, oy, os in placed
            ):
                placed.append((x, y, size))
                out.append((x, y))
                break
        else:
            raise GeneratorError(
                f"could not fit {len(sizes)} objects into the region"
            )
    return out


def _obstacle_shape(rng: random.Random) -> tuple[dict, float]:
    kind = rng.choice(["circle", "circle", "rect"])
    if kind == "circle":
        r = _round2(rng.uniform(0.18, 0.26))
        return {"kind": "circle", "radius": r}, r
    hw = _round2(rng.uniform(0.16, 0.24))
    hh = _round2(rng.uniform(0.13, 0.2))
    return {"kind": "rect", "half_w": hw, "half_h": hh}, (hw * hw + hh * hh) ** 0.5


def gen_pack(params: GenParams) -> dict:
    if not (1 <= params.n_goal <= 6):
        raise GeneratorError("pack supports 1..6 goal objects")
    if not (0 <= params.n_obstacles <= 13):
        raise GeneratorError("pack supports up to 13 obstacles")
    if not (1 <= params.n_robots <= 4):
        raise GeneratorError("pack supports 1..4 robots")
    rng = random.Random(params.seed)
    goal_r = 0.22

    shapes = []
    sizes = []
    for _ in range(params.n_obstacles):
        shape, size = _obstacle_shape(rng)
        shapes.append(shape)
        sizes.append(size)

    # start region x [1.2, 6.8], y [2.6, 6.6]
    bounds = (1.35, 6.65, 2.75, 6.45)
    positions = _sample_positions(
        rng, [goal_r] * params.n_goal + sizes, bounds, occupied=[]
    )

    movable = []
    goal = []
    for i in range(params.n_goal):
        name = f"goal{i + 1}"
        x, y = positions[i]
        movable.append(
            {"name": name, "shape": {"kind": "circle", "radius": goal_r}, "pose": [x, y]}
        )
        goal.append(
            {"object": name, "region": _GOAL_REGIONS[i % len(_GOAL_REGIONS)]["name"]}
        )
    for i in range(params.n_obstacles):
        x, y = positions[params.n_goal + i]
        movable.append({"name": f"obst{i + 1}", "shape": shapes[i], "pose": [x, y]})

    robots = _PACK_ROBOTS[: params.n_robots]
    grasps = [
        {
            "object": m["name"],
            "robot": r["name"],
            "approach_angle": 0.0,
            "tolerance": 3.141592653589793,
        }
        for m in movable
        for r in robots
    ]
    return {
        "workspace": {"min": [0.0, 0.0], "max": [14.0, 8.0]},
        "fixed": [],
        "movable": movable,
        "regions": [
            {"name": "start", "center": [4.0, 4.6], "half_extent": [2.8, 2.0]},
        ]
        + _GOAL_REGIONS,
        "robots": robots,
        "grasps": grasps,
        "goal": goal,
    }


def gen_boxmove(params: GenParams) -> dict:
    if params.n_robots != 2:
        raise GeneratorError("boxmove uses exactly 2 robots")
    if not (1 <= params.n_goal <= 3):
        raise GeneratorError("boxmove supports 1..3 goal objects")
    if not (0 <= params.n_obstacles <= 8):
        raise GeneratorError("boxmove supports up to 8 obstacles")
    rng = random.Random(params.seed)
    goal_r = 0.22

    robots = [
        {"name": "r1", "base": [3.0, 3.5], "reach_radius": 9.0, "body_radius": 0.28},
        {"name": "r2", "base": [9.0, 3.5], "reach_radius": 9.0, "body_radius": 0.28},
    ]

    shapes = []
    sizes = []
    for _ in range(params.n_obstacles):
        r = _round2(rng.uniform(0.16, 0.22))
        shapes.append({"kind": "circle", "radius": r})
        sizes.append(r)

    # goal objects stay near the corridor axis so straight sweeps from the
    # far robot fit through the gap between the walls
    goal_positions = _sample_positions(
        rng, [goal_r] * params.n_goal, (0.6, 2.6, 3.0, 4.0), occupied=[]
    )
    # clutter inside the corridor between the walls
    obstacle_positions = _sample_positions(
        rng, sizes, (4.1, 7.9, 3.0, 4.0), occupied=[]
    )

    movable = []
    goal = []
    grasps = []
    for i in range(params.n_goal):
        name = f"goal{i + 1}"
        x, y = goal_positions[i]
        movable.append(
            {"name": name, "shape": {"kind": "circle", "radius": goal_r}, "pose": [x, y]}
        )
        goal.append({"object": name, "region": "goalzone"})
        # one robot per goal object keeps handovers out of the action set
        grasps.append(
            {
                "object": name,
                "robot": robots[i % 2]["name"],
                "approach_angle": 0.0,
                "tolerance": 3.141592653589793,
            }
        )
    for i in range(params.n_obstacles):
        name = f"obst{i + 1}"
        x, y = obstacle_positions[i]
        movable.append({"name": name, "shape": shapes[i], "pose": [x, y]})
        for r in robots:
            grasps.append(
                {
                    "object": name,
                    "robot": r["name"],
                    "approach_angle": 0.0,
                    "tolerance": 3.141592653589793,
                }
            )

    return {
        "workspace": {"min": [0.0, 0.0], "max": [12.0, 7.0]},
        "fixed": [
            {
                "name": "wall_top",
                "shape": {"kind": "rect", "half_w": 2.3, "half_h": 0.25},
                "pose": [6.0, 4.75],
            },
            {
                "name": "wall_bottom",
                "shape": {"kind": "rect", "half_w": 2.3, "half_h": 0.25},
                "pose": [6.0, 2.25],
            },
        ],
        "movable": movable,
        "regions": [
            {"name": "start", "center": [1.8, 3.5], "half_extent": [1.5, 1.5]},
            {"name": "goalzone", "center": [10.2, 3.5], "half_extent": [1.5, 1.5]},
            {"name": "table", "center": [6.0, 3.5], "half_extent": [6.0, 3.5]},
        ],
        "robots": robots,
        "grasps": grasps,
        "goal": goal,
    }


def gen_scenario(family: str, params: GenParams) -> dict:
    if family == "pack":
        data = gen_pack(params)
    elif family == "boxmove":
        data = gen_boxmove(params)
    else:
        raise GeneratorError(f"unknown family {family!r}")
    # generated scenes must load cleanly; surface generator bugs here
    scenario_from_dict(data)
    return data


def gen_world(family: str, params: GenParams) -> WorldState:
    return scenario_from_dict(gen_scenario(family, params))
