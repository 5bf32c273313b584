"""Multi-robot geometric task-and-motion planning on a 2D tabletop.

Pipeline: compute manipulation predicates for the scene, build a
manipulation-precedence graph for the objects to move, generate task
skeletons with an exact binary program, ground skeletons in reverse into
collision-checked plans, and drive it all with a UCB tree search.
"""
from .geometry import AxisRect, Circle, Corridor, Placed, Vec2, intersects
from .grounding import (
    Failure,
    GroundConfig,
    Partial,
    Plan,
    Success,
    ground,
    validate,
)
from .predicates import PredicateConfig, PredicateSet, compute_predicates
from .search import (
    NoInitialSkeletons,
    PlannerConfig,
    SearchConfig,
    SearchResult,
    TreeExhausted,
    run,
)
from .skeleton_ilp import SkeletonGenConfig, TaskSkeleton
from .world import WorldState, load_scenario, loads_scenario, save_scenario

__all__ = [
    "AxisRect",
    "Circle",
    "Corridor",
    "Failure",
    "GroundConfig",
    "NoInitialSkeletons",
    "Partial",
    "Placed",
    "Plan",
    "PlannerConfig",
    "PredicateConfig",
    "PredicateSet",
    "SearchConfig",
    "SearchResult",
    "SkeletonGenConfig",
    "Success",
    "TaskSkeleton",
    "TreeExhausted",
    "Vec2",
    "WorldState",
    "compute_predicates",
    "ground",
    "intersects",
    "load_scenario",
    "loads_scenario",
    "run",
    "save_scenario",
    "validate",
]
