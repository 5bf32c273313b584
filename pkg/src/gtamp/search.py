"""Tree search over task skeletons with grounding as the evaluation step.

Nodes hold grounded suffixes (joint actions committed for the tail of the
plan); edges hold ungrounded task skeletons. Each iteration selects a path
by UCB, grounds the chosen skeleton ahead of the node's suffix, converts
the outcome into a reward, and backpropagates it. A grounding failure kills
its edge permanently; a partial grounding spawns a child whose edges carry
freshly generated skeletons for the objects that still have to be cleared.

Edge priors favor skeletons that move fewer objects. Rewards: 0 on failure;
1 + alpha / moved-count on a full plan; on a partial grounding, the grounded
share of the eventual plan length plus alpha over the combined moved count.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

from .bip import SolveTimeout
from .cmtg import NoContainingRegion, build_cmtg
from .grounding import (
    Failure,
    GroundConfig,
    GroundedJointAction,
    Partial,
    Plan,
    Success,
    ground,
    moved_objects_of,
)
from .predicates import PredicateConfig, PredicateSet, compute_predicates
from .skeleton_ilp import (
    EmptySkeletonSet,
    SkeletonGenConfig,
    TaskSkeleton,
    generate_skeletons,
)
from .world import WorldState


class NoInitialSkeletons(Exception):
    """The goal admits no task skeleton at all under the abstraction."""


class TreeExhausted(Exception):
    """Every root-reachable edge is dead or terminal."""


@dataclass
class SearchEdge:
    skeleton: TaskSkeleton
    edge_id: int
    prior: float
    value: float = 0.0
    visits: int = 0
    dead: bool = False
    child: "SearchNode | None" = None


@dataclass
class SearchNode:
    grounded_suffix: tuple[GroundedJointAction, ...] = ()
    visits: int = 0
    out_edges: list[SearchEdge] = field(default_factory=list)
    terminal: bool = False


@dataclass(frozen=True)
class SearchConfig:
    c: float = 1.0
    alpha: float = 1.0
    max_iterations: int = 300
    wall_clock_limit: float | None = None
    anytime: bool = False

    def __post_init__(self) -> None:
        if self.c < 0.0 or self.alpha < 0.0:
            raise ValueError("c and alpha must be nonnegative")


@dataclass(frozen=True)
class PlannerConfig:
    search: SearchConfig = SearchConfig()
    skeletons: SkeletonGenConfig = SkeletonGenConfig()
    grounding: GroundConfig = GroundConfig()
    predicates: PredicateConfig = PredicateConfig()


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    path: tuple[int, ...]  # edge ids, root outwards
    outcome: str  # success | partial | partial_exhausted | failure
    reward: float
    new_edges: int


@dataclass
class SearchResult:
    best_plan: Plan | None
    iterations_used: int
    trace: list[IterationRecord]
    status: str  # success | exhausted | iterations | timeout | no_skeletons
    elapsed: float


@dataclass
class SearchTree:
    root: SearchNode
    world: WorldState
    preds: PredicateSet
    next_edge_id: int = 0
    # regeneration cache: (targets, frozen) -> skeletons (None = none exist)
    skeleton_cache: dict = field(default_factory=dict)

    def new_edge(self, skeleton: TaskSkeleton) -> SearchEdge:
        edge = SearchEdge(
            skeleton=skeleton,
            edge_id=self.next_edge_id,
            prior=1.0 / len(skeleton.moved_objects),
        )
        self.next_edge_id += 1
        return edge


def ucb(node: SearchNode, edge: SearchEdge, c: float) -> float:
    """Exploitation plus prior-weighted exploration."""
    return edge.value / (edge.visits + 1) + c * edge.prior * math.sqrt(
        node.visits
    ) / (edge.visits + 1)


def _select_edge(node: SearchNode, c: float) -> SearchEdge | None:
    best: SearchEdge | None = None
    best_score = -math.inf
    for edge in node.out_edges:
        if edge.dead:
            continue
        score = ucb(node, edge, c)
        if score > best_score:
            best = edge
            best_score = score
    return best


def init_tree(
    world: WorldState,
    preds: PredicateSet,
    skel_cfg: SkeletonGenConfig = SkeletonGenConfig(),
    deadline: float | None = None,
) -> SearchTree:
    goal_objects = {o for o, _ in world.scene.goal}
    if not goal_objects:
        raise NoInitialSkeletons("goal specification is empty")
    robots = tuple(r.name for r in world.scene.robots)
    cmtg = build_cmtg(goal_objects, preds, world)
    try:
        skeletons = generate_skeletons(cmtg, robots, skel_cfg, deadline)
    except EmptySkeletonSet as exc:
        raise NoInitialSkeletons(str(exc)) from exc
    tree = SearchTree(root=SearchNode(), world=world, preds=preds)
    for sk in skeletons:
        tree.root.out_edges.append(tree.new_edge(sk))
    return tree


def iterate(
    tree: SearchTree,
    cfg: SearchConfig,
    skel_cfg: SkeletonGenConfig,
    ground_cfg: GroundConfig,
    rng: random.Random,
    iteration: int,
    deadline: float | None = None,
) -> tuple[IterationRecord, Plan | None]:
    """One selection / expansion / evaluation / backpropagation cycle."""
    while True:
        node = tree.root
        path_nodes = [node]
        path_edges: list[SearchEdge] = []
        restart = False
        while True:
            edge = _select_edge(node, cfg.c)
            if edge is None:
                if node is tree.root:
                    raise TreeExhausted()
                path_edges[-1].dead = True
                restart = True
                break
            path_edges.append(edge)
            if edge.child is None:
                break
            node = edge.child
            path_nodes.append(node)
        if not restart:
            break

    edge = path_edges[-1]
    parent = path_nodes[-1]
    child = SearchNode()
    edge.child = child

    result = ground(edge.skeleton, parent.grounded_suffix, tree.world, ground_cfg, rng)
    plan: Plan | None = None
    new_edges = 0
    if isinstance(result, Failure):
        reward = 0.0
        edge.dead = True
        child.terminal = True
        outcome = "failure"
    elif isinstance(result, Success):
        plan = result.plan
        child.grounded_suffix = plan.steps
        child.terminal = True
        reward = 1.0 + cfg.alpha / len(plan.moved_objects)
        outcome = "success"
    else:
        assert isinstance(result, Partial)
        child.grounded_suffix = result.prefix
        frozen = frozenset(moved_objects_of(result.prefix))
        robots = tuple(r.name for r in tree.world.scene.robots)
        cache_key = (frozenset(result.must_move), frozen)
        if cache_key in tree.skeleton_cache:
            skeletons = tree.skeleton_cache[cache_key]
        else:
            try:
                cmtg = build_cmtg(set(result.must_move), tree.preds, tree.world, frozen)
                skeletons = generate_skeletons(cmtg, robots, skel_cfg, deadline)
            except (EmptySkeletonSet, NoContainingRegion):
                skeletons = []
            tree.skeleton_cache[cache_key] = skeletons
        if not skeletons:
            reward = 0.0
            child.terminal = True
            outcome = "partial_exhausted"
        else:
            shortest = min(skeletons, key=lambda s: s.length)
            suffix_steps = len(result.prefix)
            reward = suffix_steps / (suffix_steps + shortest.length) + cfg.alpha / (
                len(frozen) + len(shortest.moved_objects)
            )
            for sk in skeletons:
                child.out_edges.append(tree.new_edge(sk))
            new_edges = len(skeletons)
            outcome = "partial"

    for n in path_nodes:
        n.visits += 1
    for e in path_edges:
        e.visits += 1
        e.value += reward

    record = IterationRecord(
        iteration=iteration,
        path=tuple(e.edge_id for e in path_edges),
        outcome=outcome,
        reward=reward,
        new_edges=new_edges,
    )
    return record, plan


def run(world: WorldState, config: PlannerConfig, seed: int) -> SearchResult:
    """Full planning run: predicates, tree initialization, search loop.

    Deterministic for a given seed when no wall-clock limit is set. By
    default the first full plan ends the search; anytime mode keeps
    iterating to look for plans that move fewer objects.
    """
    start = time.monotonic()
    limit = config.search.wall_clock_limit
    deadline = start + limit if limit is not None else None
    trace: list[IterationRecord] = []
    best: Plan | None = None
    status = "iterations"

    try:
        preds = compute_predicates(world, config.predicates)
        tree = init_tree(world, preds, config.skeletons, deadline)
    except SolveTimeout:
        return SearchResult(None, 0, [], "timeout", time.monotonic() - start)

    rng = random.Random(seed)
    for i in range(config.search.max_iterations):
        if deadline is not None and time.monotonic() > deadline:
            status = "timeout"
            break
        try:
            record, plan = iterate(
                tree, config.search, config.skeletons, config.grounding,
                rng, i, deadline,
            )
        except TreeExhausted:
            status = "exhausted"
            break
        except SolveTimeout:
            status = "timeout"
            break
        trace.append(record)
        if plan is not None:
            if best is None or plan.motion_cost < best.motion_cost:
                best = plan
            if not config.search.anytime:
                break
    if best is not None:
        status = "success"
    return SearchResult(best, len(trace), trace, status, time.monotonic() - start)
