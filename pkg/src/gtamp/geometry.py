"""2D tabletop geometry kernel.

Shapes are circles and axis-aligned rectangles; robot sweeps are capsules
(corridors). All intersection tests treat shapes as closed point sets, so
tangency counts as a collision. Every test here is exact, including
rectangle vs capsule, which reduces to a segment-to-rectangle distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite vector ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def scaled(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, slots=True)
class Circle:
    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"circle radius must be positive, got {self.radius}")


@dataclass(frozen=True, slots=True)
class AxisRect:
    half_w: float
    half_h: float

    def __post_init__(self) -> None:
        if not (self.half_w > 0.0 and self.half_h > 0.0):
            raise ValueError(f"rect extents must be positive, got {self.half_w}x{self.half_h}")


Shape = Circle | AxisRect


@dataclass(frozen=True, slots=True)
class Placed:
    """A shape positioned at a center point."""

    shape: Shape
    center: Vec2


@dataclass(frozen=True, slots=True)
class Corridor:
    """Capsule swept volume: all points within half_width of segment start-end."""

    start: Vec2
    end: Vec2
    half_width: float

    def __post_init__(self) -> None:
        if not (self.half_width > 0.0):
            raise ValueError(f"corridor half_width must be positive, got {self.half_width}")


def circumradius(shape: Shape) -> float:
    """Radius of the smallest origin-centered disc containing the shape."""
    if isinstance(shape, Circle):
        return shape.radius
    return math.hypot(shape.half_w, shape.half_h)


def wrap_angle(a: float) -> float:
    """Wrap to [-pi, pi)."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a < 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def angle_diff(a: float, b: float) -> float:
    """Absolute angular separation in [0, pi]."""
    return abs(wrap_angle(a - b))


def point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> float:
    ab = b - a
    denom = ab.dot(ab)
    if denom <= 0.0:
        return p.dist(a)
    t = (p - a).dot(ab) / denom
    t = min(1.0, max(0.0, t))
    return p.dist(a + ab.scaled(t))


def _orient(a: Vec2, b: Vec2, c: Vec2) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def _segments_cross(a1: Vec2, a2: Vec2, b1: Vec2, b2: Vec2) -> bool:
    d1 = _orient(b1, b2, a1)
    d2 = _orient(b1, b2, a2)
    d3 = _orient(a1, a2, b1)
    d4 = _orient(a1, a2, b2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    return False


def segment_segment_distance(a1: Vec2, a2: Vec2, b1: Vec2, b2: Vec2) -> float:
    if _segments_cross(a1, a2, b1, b2):
        return 0.0
    return min(
        point_segment_distance(a1, b1, b2),
        point_segment_distance(a2, b1, b2),
        point_segment_distance(b1, a1, a2),
        point_segment_distance(b2, a1, a2),
    )


def point_rect_distance(p: Vec2, center: Vec2, rect: AxisRect) -> float:
    dx = max(abs(p.x - center.x) - rect.half_w, 0.0)
    dy = max(abs(p.y - center.y) - rect.half_h, 0.0)
    return math.hypot(dx, dy)


def point_in_rect(p: Vec2, center: Vec2, rect: AxisRect) -> bool:
    return abs(p.x - center.x) <= rect.half_w and abs(p.y - center.y) <= rect.half_h


def _rect_corners(center: Vec2, rect: AxisRect) -> tuple[Vec2, Vec2, Vec2, Vec2]:
    return (
        Vec2(center.x - rect.half_w, center.y - rect.half_h),
        Vec2(center.x + rect.half_w, center.y - rect.half_h),
        Vec2(center.x + rect.half_w, center.y + rect.half_h),
        Vec2(center.x - rect.half_w, center.y + rect.half_h),
    )


def segment_rect_distance(a: Vec2, b: Vec2, center: Vec2, rect: AxisRect) -> float:
    """Distance between a segment and a solid rectangle (0 when they touch)."""
    if point_in_rect(a, center, rect) or point_in_rect(b, center, rect):
        return 0.0
    corners = _rect_corners(center, rect)
    best = math.inf
    for i in range(4):
        c1 = corners[i]
        c2 = corners[(i + 1) % 4]
        d = segment_segment_distance(a, b, c1, c2)
        if d == 0.0:
            return 0.0
        best = min(best, d)
    return best


def _placed_placed(a: Placed, b: Placed) -> bool:
    sa, sb = a.shape, b.shape
    if isinstance(sa, Circle) and isinstance(sb, Circle):
        return a.center.dist(b.center) <= sa.radius + sb.radius
    if isinstance(sa, Circle) and isinstance(sb, AxisRect):
        return point_rect_distance(a.center, b.center, sb) <= sa.radius
    if isinstance(sa, AxisRect) and isinstance(sb, Circle):
        return point_rect_distance(b.center, a.center, sa) <= sb.radius
    assert isinstance(sa, AxisRect) and isinstance(sb, AxisRect)
    return (
        abs(a.center.x - b.center.x) <= sa.half_w + sb.half_w
        and abs(a.center.y - b.center.y) <= sa.half_h + sb.half_h
    )


def _placed_corridor(a: Placed, c: Corridor) -> bool:
    if isinstance(a.shape, Circle):
        return point_segment_distance(a.center, c.start, c.end) <= a.shape.radius + c.half_width
    return segment_rect_distance(c.start, c.end, a.center, a.shape) <= c.half_width


def intersects(a: Placed | Corridor, b: Placed | Corridor) -> bool:
    """True iff the closed point sets intersect. Symmetric."""
    if isinstance(a, Placed) and isinstance(b, Placed):
        return _placed_placed(a, b)
    if isinstance(a, Placed) and isinstance(b, Corridor):
        return _placed_corridor(a, b)
    if isinstance(a, Corridor) and isinstance(b, Placed):
        return _placed_corridor(b, a)
    assert isinstance(a, Corridor) and isinstance(b, Corridor)
    return (
        segment_segment_distance(a.start, a.end, b.start, b.end)
        <= a.half_width + b.half_width
    )


def separation(a: Placed | Corridor, b: Placed | Corridor) -> float:
    """Signed boundary gap: positive when apart, <= 0 when intersecting.

    For overlapping pairs the magnitude is a lower bound on the penetration,
    which is all the rasterization oracle in the tests needs.
    """
    if isinstance(a, Corridor) and isinstance(b, Placed):
        a, b = b, a
    if isinstance(a, Placed) and isinstance(b, Placed):
        sa, sb = a.shape, b.shape
        if isinstance(sa, Circle) and isinstance(sb, Circle):
            return a.center.dist(b.center) - sa.radius - sb.radius
        if isinstance(sa, Circle) and isinstance(sb, AxisRect):
            d = point_rect_distance(a.center, b.center, sb)
            if d > 0.0:
                return d - sa.radius
            return -min(
                sa.radius,
                sb.half_w - abs(a.center.x - b.center.x) + sa.radius,
                sb.half_h - abs(a.center.y - b.center.y) + sa.radius,
            )
        if isinstance(sa, AxisRect) and isinstance(sb, Circle):
            return separation(b, a)
        assert isinstance(sa, AxisRect) and isinstance(sb, AxisRect)
        gx = abs(a.center.x - b.center.x) - (sa.half_w + sb.half_w)
        gy = abs(a.center.y - b.center.y) - (sa.half_h + sb.half_h)
        if gx > 0.0 or gy > 0.0:
            return math.hypot(max(gx, 0.0), max(gy, 0.0))
        return max(gx, gy)
    if isinstance(a, Placed) and isinstance(b, Corridor):
        if isinstance(a.shape, Circle):
            d = point_segment_distance(a.center, b.start, b.end)
            return d - a.shape.radius - b.half_width
        return (
            segment_rect_distance(b.start, b.end, a.center, a.shape) - b.half_width
        )
    assert isinstance(a, Corridor) and isinstance(b, Corridor)
    return (
        segment_segment_distance(a.start, a.end, b.start, b.end)
        - a.half_width
        - b.half_width
    )


@dataclass(frozen=True, slots=True)
class Workspace:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("workspace min must be strictly below max")

    def contains_point(self, p: Vec2) -> bool:
        return self.xmin <= p.x <= self.xmax and self.ymin <= p.y <= self.ymax

    def contains_placed(self, placed: Placed) -> bool:
        if isinstance(placed.shape, Circle):
            hw = hh = placed.shape.radius
        else:
            hw, hh = placed.shape.half_w, placed.shape.half_h
        c = placed.center
        return (
            c.x - hw >= self.xmin
            and c.x + hw <= self.xmax
            and c.y - hh >= self.ymin
            and c.y + hh <= self.ymax
        )

    def clamp(self, p: Vec2) -> Vec2:
        return Vec2(
            min(self.xmax, max(self.xmin, p.x)),
            min(self.ymax, max(self.ymin, p.y)),
        )


def fits_inside(shape: Shape, pos: Vec2, region_center: Vec2, region: AxisRect) -> bool:
    """True iff the placed shape is entirely inside the region rectangle (closed)."""
    if isinstance(shape, Circle):
        hw = hh = shape.radius
    else:
        hw, hh = shape.half_w, shape.half_h
    if hw > region.half_w or hh > region.half_h:
        return False
    return (
        abs(pos.x - region_center.x) <= region.half_w - hw
        and abs(pos.y - region_center.y) <= region.half_h - hh
    )


def _fit_bounds(
    shape: Shape, region_center: Vec2, region: AxisRect
) -> tuple[float, float, float, float] | None:
    """Center bounds (xlo, xhi, ylo, yhi) keeping the shape inside the region."""
    if isinstance(shape, Circle):
        hw = hh = shape.radius
    else:
        hw, hh = shape.half_w, shape.half_h
    if hw > region.half_w or hh > region.half_h:
        return None
    return (
        region_center.x - (region.half_w - hw),
        region_center.x + (region.half_w - hw),
        region_center.y - (region.half_h - hh),
        region_center.y + (region.half_h - hh),
    )


def sample_placement(
    shape: Shape,
    region_center: Vec2,
    region: AxisRect,
    forbidden: list[Placed | Corridor],
    rng,
    max_attempts: int,
) -> Vec2 | None:
    """Rejection-sample a pose for `shape` inside the region avoiding `forbidden`.

    Deterministic for a given rng state. Returns None when no candidate within
    max_attempts draws is collision-free (or the shape cannot fit at all).
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    bounds = _fit_bounds(shape, region_center, region)
    if bounds is None:
        return None
    xlo, xhi, ylo, yhi = bounds
    for _ in range(max_attempts):
        pos = Vec2(rng.uniform(xlo, xhi), rng.uniform(ylo, yhi))
        candidate = Placed(shape, pos)
        if any(intersects(candidate, f) for f in forbidden):
            continue
        return pos
    return None


def halton(index: int, base: int) -> float:
    """Halton low-discrepancy sequence value in [0, 1)."""
    result = 0.0
    f = 1.0
    i = index
    while i > 0:
        f /= base
        result += f * (i % base)
        i //= base
    return result


def halton_poses(
    shape: Shape, region_center: Vec2, region: AxisRect, count: int
) -> list[Vec2]:
    """Deterministic placement probes keeping the shape inside the region."""
    bounds = _fit_bounds(shape, region_center, region)
    if bounds is None:
        return []
    xlo, xhi, ylo, yhi = bounds
    poses = []
    for i in range(1, count + 1):
        poses.append(
            Vec2(xlo + (xhi - xlo) * halton(i, 2), ylo + (yhi - ylo) * halton(i, 3))
        )
    return poses
