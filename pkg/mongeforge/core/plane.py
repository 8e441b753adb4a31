"""Planar geometry kernel: points, directions, rays, sectors, strips, convex cells and hulls.

All types are immutable. Membership predicates are vectorized over ``(N, 2)`` arrays and take
an absolute tolerance ``eps``; interiors exclude an ``eps``-band around the boundary, closures
include it.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ..utils.logging import get_logger

logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12
# Chebyshev radius cap; anything this large counts as unbounded.
RADIUS_CAP = 1e6


class GeometryError(Exception):
    """Base exception for planar geometry failures."""


class DegenerateHull(GeometryError):
    """All hull input points are collinear."""

    def __init__(self, segment: "Segment"):
        self.segment = segment
        super().__init__(
            f"Points are collinear; extremal segment ({segment.a.x}, {segment.a.y})"
            f" - ({segment.b.x}, {segment.b.y})"
        )


class SingularPoint(GeometryError):
    """A query point coincides with a singular point."""


class NonConvexInput(GeometryError):
    """Vertices do not form a strictly convex counterclockwise polygon."""


def normalize_angle(theta: float) -> float:
    """Map an angle to [0, 2π)."""
    value = math.fmod(theta, TWO_PI)
    if value < 0:
        value += TWO_PI
    if value >= TWO_PI:
        value = 0.0
    return value


def unit(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def rot90(v: np.ndarray) -> np.ndarray:
    """Rotate a vector (or a stack of vectors) by +π/2."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def as_points(points: "Iterable[Point2] | np.ndarray | Sequence[Sequence[float]]") -> np.ndarray:
    """Coerce points into a float ``(N, 2)`` array."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        arr = np.array(
            [(p.x, p.y) if isinstance(p, Point2) else tuple(p) for p in points], dtype=float
        )
    return arr.reshape(-1, 2)


@dataclass(frozen=True)
class Point2:
    """A point of the plane with finite coordinates."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"Non-finite point ({self.x}, {self.y})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    @classmethod
    def of(cls, value: "Point2 | Sequence[float] | np.ndarray") -> "Point2":
        if isinstance(value, Point2):
            return value
        arr = np.asarray(value, dtype=float).reshape(2)
        return cls(float(arr[0]), float(arr[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def distance(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Direction:
    """A unit direction, stored as an angle normalized to [0, 2π)."""

    theta: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise GeometryError(f"Non-finite angle {self.theta}")
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    @classmethod
    def of_vector(cls, v: Sequence[float] | np.ndarray) -> "Direction":
        return cls(math.atan2(float(v[1]), float(v[0])))

    @property
    def vector(self) -> np.ndarray:
        return unit(self.theta)


def _ray_distance(origin: np.ndarray, d: np.ndarray, pts: np.ndarray) -> np.ndarray:
    rel = pts - origin
    t = rel @ d
    perp = np.abs(cross(d, rel))
    return np.where(t >= 0, perp, np.linalg.norm(rel, axis=1))


@dataclass(frozen=True)
class Ray:
    origin: Point2
    dir: Direction

    def point_at(self, t: float) -> np.ndarray:
        return self.origin.as_array() + t * self.dir.vector

    def distance(self, pts: np.ndarray) -> np.ndarray:
        return _ray_distance(self.origin.as_array(), self.dir.vector, as_points(pts))


@dataclass(frozen=True)
class Line:
    """The points ``p`` with ``n·p = offset``, kept in canonical form."""

    normal: Direction
    offset: float

    def __post_init__(self) -> None:
        theta, offset = self.normal.theta, float(self.offset)
        if offset < 0:
            theta, offset = theta + math.pi, -offset
        elif offset == 0 and normalize_angle(theta) >= math.pi:
            theta -= math.pi
        object.__setattr__(self, "normal", Direction(theta))
        object.__setattr__(self, "offset", offset)

    @classmethod
    def through(cls, point: Point2 | np.ndarray, direction_theta: float) -> "Line":
        """Line through ``point`` running along ``direction_theta``."""
        n = unit(direction_theta + math.pi / 2)
        p = as_points([point])[0]
        return cls(Direction(direction_theta + math.pi / 2), float(n @ p))

    @property
    def direction(self) -> np.ndarray:
        return rot90(self.normal.vector)

    @property
    def foot(self) -> np.ndarray:
        """Point of the line closest to the origin."""
        return self.offset * self.normal.vector

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        return as_points(pts) @ self.normal.vector - self.offset

    def distance(self, pts: np.ndarray) -> np.ndarray:
        return np.abs(self.signed_distance(pts))


@dataclass(frozen=True)
class Segment:
    a: Point2
    b: Point2

    @property
    def length(self) -> float:
        return self.a.distance(self.b)

    def distance(self, pts: np.ndarray) -> np.ndarray:
        pts = as_points(pts)
        a, b = self.a.as_array(), self.b.as_array()
        d = b - a
        denom = float(d @ d)
        if denom == 0.0:
            return np.linalg.norm(pts - a, axis=1)
        t = np.clip((pts - a) @ d / denom, 0.0, 1.0)
        return np.linalg.norm(pts - (a + t[:, None] * d), axis=1)


Geometry = Line | Ray | Segment


def sample_geometry(geom: Geometry, count: int, reach: float) -> np.ndarray:
    """Evenly spaced points on ``geom``; unbounded parts are cut at distance ``reach``."""
    s = (np.arange(count) + 0.5) / count
    if isinstance(geom, Segment):
        a, b = geom.a.as_array(), geom.b.as_array()
        return a + s[:, None] * (b - a)
    if isinstance(geom, Ray):
        return geom.origin.as_array() + (s * reach)[:, None] * geom.dir.vector
    return geom.foot + ((2.0 * s - 1.0) * reach)[:, None] * geom.direction


def geometry_key(geom: Geometry, digits: int = 9) -> tuple:
    """Sort/dedupe key of a geometry, rounded to ``digits`` decimals."""
    r = lambda v: round(float(v), digits) + 0.0  # noqa: E731
    if isinstance(geom, Line):
        return (0, r(geom.normal.theta), r(geom.offset))
    if isinstance(geom, Ray):
        return (1, r(geom.origin.x), r(geom.origin.y), r(geom.dir.theta))
    ends = sorted([(r(geom.a.x), r(geom.a.y)), (r(geom.b.x), r(geom.b.y))])
    return (2, *ends[0], *ends[1])


@dataclass(frozen=True)
class Edge:
    """Boundary piece ``origin + t·direction`` for ``t`` in ``[t0, t1]``; ends may be infinite."""

    origin: tuple[float, float]
    direction: tuple[float, float]
    t0: float
    t1: float

    def point(self, t: float | np.ndarray) -> np.ndarray:
        o, d = np.asarray(self.origin), np.asarray(self.direction)
        t = np.asarray(t, dtype=float)
        return o + t[..., None] * d

    def project(self, pts: np.ndarray) -> np.ndarray:
        return (as_points(pts) - np.asarray(self.origin)) @ np.asarray(self.direction)

    def line_distance(self, pts: np.ndarray) -> np.ndarray:
        rel = as_points(pts) - np.asarray(self.origin)
        return np.abs(cross(np.asarray(self.direction), rel))

    def to_geometry(self, t0: float | None = None, t1: float | None = None) -> Geometry:
        t0 = self.t0 if t0 is None else t0
        t1 = self.t1 if t1 is None else t1
        d = np.asarray(self.direction)
        if math.isfinite(t0) and math.isfinite(t1):
            return Segment(Point2.of(self.point(t0)), Point2.of(self.point(t1)))
        if math.isfinite(t0):
            return Ray(Point2.of(self.point(t0)), Direction.of_vector(d))
        if math.isfinite(t1):
            return Ray(Point2.of(self.point(t1)), Direction.of_vector(-d))
        return Line.through(self.point(0.0), math.atan2(d[1], d[0]))


@dataclass(frozen=True)
class ConvexCell:
    """Intersection of finitely many closed half-planes ``n_i·p <= c_i`` (unit normals)."""

    normals: tuple[tuple[float, float], ...] = ()
    offsets: tuple[float, ...] = ()

    @classmethod
    def from_halfplanes(
        cls, normals: np.ndarray | Sequence[Sequence[float]], offsets: Sequence[float]
    ) -> "ConvexCell":
        A = np.asarray(normals, dtype=float).reshape(-1, 2)
        b = np.asarray(offsets, dtype=float).reshape(-1)
        rows: list[tuple[float, float]] = []
        offs: list[float] = []
        for n, c in zip(A, b, strict=True):
            norm = float(np.linalg.norm(n))
            if norm == 0.0:
                raise GeometryError("Half-plane with zero normal")
            n, c = n / norm, float(c) / norm
            duplicate = any(
                abs(n[0] - m[0]) < 1e-12 and abs(n[1] - m[1]) < 1e-12 and abs(c - o) < 1e-12
                for m, o in zip(rows, offs, strict=True)
            )
            if not duplicate:
                rows.append((float(n[0]), float(n[1])))
                offs.append(c)
        return cls(tuple(rows), tuple(offs))

    @classmethod
    def from_lines(cls, lines: Iterable[Line], interior_point: Point2 | np.ndarray) -> "ConvexCell":
        """Cell bounded by ``lines``, each oriented so that ``interior_point`` is inside."""
        q = as_points([interior_point])[0]
        normals, offsets = [], []
        for line in lines:
            n, c = line.normal.vector, line.offset
            if n @ q > c:
                n, c = -n, -c
            normals.append(n)
            offsets.append(c)
        return cls.from_halfplanes(normals, offsets)

    @property
    def A(self) -> np.ndarray:
        return np.asarray(self.normals, dtype=float).reshape(-1, 2)

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=float)

    def intersect(self, other: "ConvexCell") -> "ConvexCell":
        return ConvexCell.from_halfplanes(
            np.vstack([self.A, other.A]), np.concatenate([self.b, other.b])
        )

    def interior_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        pts = as_points(pts)
        if not self.normals:
            return np.ones(len(pts), dtype=bool)
        return np.all(pts @ self.A.T < self.b - eps, axis=1)

    def closure_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        pts = as_points(pts)
        if not self.normals:
            return np.ones(len(pts), dtype=bool)
        return np.all(pts @ self.A.T <= self.b + eps, axis=1)

    def chebyshev_ball(self, cap: float = RADIUS_CAP) -> tuple[np.ndarray | None, float]:
        """Center and radius of the largest inscribed disk (radius capped at ``cap``)."""
        if not self.normals:
            return np.zeros(2), cap
        A_ub = np.hstack([self.A, np.ones((len(self.offsets), 1))])
        result = linprog(
            c=[0.0, 0.0, -1.0],
            A_ub=A_ub,
            b_ub=self.b,
            bounds=[(None, None), (None, None), (0.0, cap)],
            method="highs",
        )
        if result.status != 0:
            return None, -math.inf
        return np.asarray(result.x[:2]), float(result.x[2])

    def is_empty(self, eps: float) -> bool:
        """True when the cell has no interior beyond the tolerance band."""
        _, radius = self.chebyshev_ball()
        return radius <= eps

    def is_unbounded(self, tol: float = 1e-12) -> bool:
        """True when the recession cone is non-trivial."""
        if not self.normals:
            return True
        A = self.A
        for d in np.vstack([rot90(A), -rot90(A)]):
            if np.all(A @ d <= tol):
                return True
        return False

    def edges(self, eps: float = 0.0) -> list[Edge]:
        """Boundary pieces, traversed counterclockwise (interior on the left)."""
        A, b = self.A, self.b
        result = []
        for i, (n, c) in enumerate(zip(A, b, strict=True)):
            p0, d = n * c, rot90(n)
            lo, hi = -math.inf, math.inf
            empty = False
            for j, (m, e) in enumerate(zip(A, b, strict=True)):
                if j == i:
                    continue
                slope, room = float(m @ d), float(e - m @ p0)
                if abs(slope) < 1e-14:
                    if room < -eps:
                        empty = True
                        break
                    continue
                if slope > 0:
                    hi = min(hi, room / slope)
                else:
                    lo = max(lo, room / slope)
            if not empty and hi - lo > eps:
                origin = (float(p0[0]), float(p0[1]))
                result.append(Edge(origin, (float(d[0]), float(d[1])), lo, hi))
        return result

    def vertices(self, eps: float = 0.0) -> np.ndarray:
        """Corner points in counterclockwise order (finite corners only)."""
        corners = [e.point(e.t0) for e in self.edges(eps) if math.isfinite(e.t0)]
        if not corners:
            return np.zeros((0, 2))
        pts = np.array(corners)
        center = pts.mean(axis=0)
        order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
        return pts[order]

    def clipped(self, bbox: tuple[float, float, float, float]) -> "ConvexCell":
        """Intersection with an axis-aligned box ``(xmin, xmax, ymin, ymax)``."""
        xmin, xmax, ymin, ymax = bbox
        box = ConvexCell.from_halfplanes(
            [(1, 0), (-1, 0), (0, 1), (0, -1)], [xmax, -xmin, ymax, -ymin]
        )
        return self.intersect(box)


@dataclass(frozen=True)
class Sector:
    """Open angular sector ``{vertex + ρ e(θ) : ρ > 0, theta_b < θ < theta_f}``."""

    vertex: Point2
    theta_b: float
    theta_f: float

    def __post_init__(self) -> None:
        width = self.theta_f - self.theta_b
        if not (0 < width <= TWO_PI + ANGLE_TOL):
            raise GeometryError(
                f"Sector width {width} outside (0, 2π] for ({self.theta_b}, {self.theta_f})"
            )

    @property
    def width(self) -> float:
        return min(self.theta_f - self.theta_b, TWO_PI)

    @property
    def is_full(self) -> bool:
        return self.width >= TWO_PI - ANGLE_TOL

    def relative_angles(self, pts: np.ndarray) -> np.ndarray:
        """Angles of ``pts`` about the vertex, measured from ``theta_b`` into [0, 2π)."""
        rel = as_points(pts) - self.vertex.as_array()
        return np.mod(np.arctan2(rel[:, 1], rel[:, 0]) - self.theta_b, TWO_PI)

    def contains_direction(self, theta: float | np.ndarray) -> np.ndarray:
        rel = np.mod(np.asarray(theta, dtype=float) - self.theta_b, TWO_PI)
        if self.is_full:
            return np.ones_like(rel, dtype=bool)
        return (rel > 0) & (rel < self.width)

    def _boundary_distances(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertex.as_array()
        return (
            _ray_distance(v, unit(self.theta_b), pts),
            _ray_distance(v, unit(self.theta_f), pts),
        )

    def interior_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        pts = as_points(pts)
        r = np.linalg.norm(pts - self.vertex.as_array(), axis=1)
        if self.is_full:
            return r > eps
        rel = self.relative_angles(pts)
        db, df = self._boundary_distances(pts)
        return (rel > 0) & (rel < self.width) & (db > eps) & (df > eps) & (r > eps)

    def closure_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        pts = as_points(pts)
        if self.is_full:
            return np.ones(len(pts), dtype=bool)
        rel = self.relative_angles(pts)
        db, df = self._boundary_distances(pts)
        return (rel <= self.width) | (db <= eps) | (df <= eps)

    def boundary_rays(self) -> list[Ray]:
        if self.is_full:
            return []
        return [Ray(self.vertex, Direction(t)) for t in (self.theta_b, self.theta_f)]

    def edges(self) -> list[Edge]:
        v = (self.vertex.x, self.vertex.y)
        return [
            Edge(v, tuple(unit(ray.dir.theta).tolist()), 0.0, math.inf)  # type: ignore[arg-type]
            for ray in self.boundary_rays()
        ]

    def as_cells(self) -> list[ConvexCell]:
        """The closed sector as one or two convex cells."""
        if self.width > math.pi + ANGLE_TOL:
            mid = self.theta_b + self.width / 2
            return [
                *Sector(self.vertex, self.theta_b, mid).as_cells(),
                *Sector(self.vertex, mid, self.theta_b + self.width).as_cells(),
            ]
        v = self.vertex.as_array()
        n_b = np.array([math.sin(self.theta_b), -math.cos(self.theta_b)])
        n_f = np.array([-math.sin(self.theta_f), math.cos(self.theta_f)])
        return [ConvexCell.from_halfplanes([n_b, n_f], [n_b @ v, n_f @ v])]

    def complement_cells(self) -> list[ConvexCell]:
        """The closed complement of the sector as convex cells (empty for a full sector)."""
        if self.is_full:
            return []
        return Sector(self.vertex, self.theta_f, self.theta_b + TWO_PI).as_cells()


@dataclass(frozen=True)
class Strip:
    """Open strip ``{p : c_lo < n·p < c_hi}``; a half-plane when one bound is infinite."""

    normal: Direction
    c_lo: float = -math.inf
    c_hi: float = math.inf

    def __post_init__(self) -> None:
        if math.isnan(self.c_lo) or math.isnan(self.c_hi) or not self.c_lo < self.c_hi:
            raise GeometryError(
                f"Strip bounds must satisfy c_lo < c_hi, got {self.c_lo}, {self.c_hi}"
            )

    @property
    def is_plane(self) -> bool:
        return math.isinf(self.c_lo) and math.isinf(self.c_hi)

    @property
    def is_half_plane(self) -> bool:
        return math.isinf(self.c_lo) != math.isinf(self.c_hi)

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.c_lo) and math.isfinite(self.c_hi)

    def coordinates(self, pts: np.ndarray) -> np.ndarray:
        return as_points(pts) @ self.normal.vector

    def interior_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        s = self.coordinates(pts)
        return (s > self.c_lo + eps) & (s < self.c_hi - eps)

    def closure_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        s = self.coordinates(pts)
        return (s >= self.c_lo - eps) & (s <= self.c_hi + eps)

    def boundary_lines(self) -> list[Line]:
        return [Line(self.normal, c) for c in (self.c_lo, self.c_hi) if math.isfinite(c)]

    def edges(self) -> list[Edge]:
        n = self.normal.vector
        d = (float(-n[1]), float(n[0]))
        return [
            Edge((float(n[0] * c), float(n[1] * c)), d, -math.inf, math.inf)
            for c in (self.c_lo, self.c_hi)
            if math.isfinite(c)
        ]

    def as_cell(self) -> ConvexCell:
        n = self.normal.vector
        normals, offsets = [], []
        if math.isfinite(self.c_hi):
            normals.append(n)
            offsets.append(self.c_hi)
        if math.isfinite(self.c_lo):
            normals.append(-n)
            offsets.append(-self.c_lo)
        return ConvexCell.from_halfplanes(normals, offsets) if normals else ConvexCell()


def _turn_tolerance(a: np.ndarray, b: np.ndarray) -> float:
    return 1e-12 * float(np.linalg.norm(a) * np.linalg.norm(b))


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with counterclockwise vertices."""

    vertices: tuple[Point2, ...]

    def __post_init__(self) -> None:
        n = len(self.vertices)
        if n < 3:
            raise NonConvexInput(f"Polygon needs at least 3 vertices, got {n}")
        pts = self.as_array()
        for i in range(n):
            e1 = pts[i] - pts[i - 1]
            e2 = pts[(i + 1) % n] - pts[i]
            if cross(e1, e2) <= _turn_tolerance(e1, e2):
                raise NonConvexInput(
                    f"Vertex {i} ({pts[i][0]}, {pts[i][1]}) is reflex, collinear or clockwise"
                )

    @classmethod
    def of(cls, points: Iterable[Point2 | Sequence[float]]) -> "ConvexPolygon":
        return cls(tuple(Point2.of(p) for p in points))

    def __len__(self) -> int:
        return len(self.vertices)

    def as_array(self) -> np.ndarray:
        return as_points(self.vertices)

    @property
    def area(self) -> float:
        pts = self.as_array()
        return 0.5 * float(np.sum(cross(pts, np.roll(pts, -1, axis=0))))

    @property
    def diameter(self) -> float:
        pts = self.as_array()
        return float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)))

    def turning_angles(self) -> np.ndarray:
        pts = self.as_array()
        incoming = pts - np.roll(pts, 1, axis=0)
        outgoing = np.roll(pts, -1, axis=0) - pts
        return np.arctan2(cross(incoming, outgoing), np.sum(incoming * outgoing, axis=1))

    def as_cell(self) -> ConvexCell:
        pts = self.as_array()
        d = np.roll(pts, -1, axis=0) - pts
        normals = -rot90(d)
        return ConvexCell.from_halfplanes(normals, np.sum(normals * pts, axis=1))

    def same_as(self, other: "ConvexPolygon", tol: float = 0.0) -> bool:
        """Equal vertex cycles up to rotation of the starting index."""
        if len(self) != len(other):
            return False
        a, b = self.as_array(), other.as_array()
        for shift in range(len(self)):
            if np.all(np.abs(np.roll(b, -shift, axis=0) - a) <= tol):
                return True
        return False


def convex_hull(points: Iterable[Point2 | Sequence[float]] | np.ndarray) -> ConvexPolygon:
    """Counterclockwise hull vertices (monotone chain), collinear edge points excluded.

    Raises:
        DegenerateHull: If all points are collinear (or coincide).
    """
    pts = as_points(points)
    if len(pts) == 0:
        raise GeometryError("convex_hull needs at least one point")
    pts = np.unique(pts, axis=0)  # lexicographic order

    def chain(seq: np.ndarray) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2:
                a, b = out[-1] - out[-2], p - out[-2]
                if cross(a, b) > _turn_tolerance(a, b):
                    break
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHull(Segment(Point2.of(pts[0]), Point2.of(pts[-1])))
    return ConvexPolygon(tuple(Point2.of(p) for p in hull))


def exterior_sector(poly: ConvexPolygon, i: int) -> Sector:
    """Sector at vertex ``i`` between the extension of the incoming edge and the outgoing edge."""
    pts = poly.as_array()
    n = len(pts)
    p, nxt, prv = pts[i % n], pts[(i + 1) % n], pts[(i - 1) % n]
    out = nxt - p
    inc = p - prv
    theta_f = math.atan2(out[1], out[0])
    turn = math.atan2(float(cross(inc, out)), float(inc @ out))
    return Sector(Point2.of(p), theta_f - turn, theta_f)
