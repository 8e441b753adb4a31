import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mongeforge.core.plane import (
    ConvexCell,
    ConvexPolygon,
    DegenerateHull,
    Direction,
    GeometryError,
    Line,
    NonConvexInput,
    Point2,
    Ray,
    Sector,
    Segment,
    Strip,
    convex_hull,
    exterior_sector,
    geometry_key,
    normalize_angle,
)

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def test_normalize_angle():
    """Test angle normalization into [0, 2π)."""
    assert normalize_angle(2 * math.pi) == 0.0
    assert normalize_angle(-math.pi / 2) == pytest.approx(1.5 * math.pi)
    assert normalize_angle(5 * math.pi) == pytest.approx(math.pi)


def test_point_rejects_non_finite():
    """Test that points must have finite coordinates."""
    with pytest.raises(GeometryError):
        Point2(math.nan, 0.0)
    with pytest.raises(GeometryError):
        Point2(0.0, math.inf)


def test_line_canonical_form():
    """Test that lines are stored with a non-negative offset."""
    line = Line(Direction(0.0), -1.0)
    assert line.offset == 1.0
    assert line.normal.theta == pytest.approx(math.pi)

    horizontal = Line.through(Point2(0.0, 1.0), 0.0)
    assert horizontal.normal.theta == pytest.approx(math.pi / 2)
    assert horizontal.offset == pytest.approx(1.0)
    assert horizontal.distance(np.array([[5.0, 3.0]]))[0] == pytest.approx(2.0)


def test_ray_and_segment_distance():
    """Test distances to rays and segments."""
    ray = Ray(Point2(0.0, 0.0), Direction(0.0))
    d = ray.distance(np.array([[2.0, 1.0], [-3.0, 4.0]]))
    assert d == pytest.approx([1.0, 5.0])

    seg = Segment(Point2(0.0, 0.0), Point2(2.0, 0.0))
    d = seg.distance(np.array([[1.0, 1.0], [3.0, 0.0]]))
    assert d == pytest.approx([1.0, 1.0])


def test_sector_membership():
    """Test sector interior and closure predicates."""
    sector = Sector(Point2(0.0, 0.0), 0.0, math.pi / 2)
    pts = np.array([[1.0, 1.0], [-1.0, 1.0], [1.0, 0.0]])
    assert list(sector.interior_mask(pts, 1e-9)) == [True, False, False]
    assert list(sector.closure_mask(pts, 1e-9)) == [True, False, True]
    assert len(sector.boundary_rays()) == 2


def test_sector_width_validation():
    """Test that empty or over-wide sectors are rejected."""
    with pytest.raises(GeometryError):
        Sector(Point2(0.0, 0.0), 1.0, 1.0)
    with pytest.raises(GeometryError):
        Sector(Point2(0.0, 0.0), 0.0, 7.0)
    full = Sector(Point2(0.0, 0.0), 0.0, 2 * math.pi)
    assert full.is_full
    assert full.boundary_rays() == []


def test_wide_sector_splits_into_convex_cells():
    """Test that sectors wider than π become two cells."""
    sector = Sector(Point2(0.0, 0.0), 0.0, 1.5 * math.pi)
    assert len(sector.as_cells()) == 2
    assert len(sector.complement_cells()) == 1


def test_strip_validation_and_kind():
    """Test strip bounds and classification."""
    with pytest.raises(GeometryError):
        Strip(Direction(0.0), 1.0, 0.0)
    assert Strip(Direction(0.0)).is_plane
    assert Strip(Direction(0.0), -math.inf, 0.0).is_half_plane
    bounded = Strip(Direction(0.0), 0.0, 1.0)
    assert bounded.is_bounded
    assert len(bounded.boundary_lines()) == 2


def test_convex_cell_clipping():
    """Test clipping a half-plane to a box."""
    half = ConvexCell.from_halfplanes([(1.0, 0.0)], [0.0])
    corners = half.clipped((-1.0, 1.0, -1.0, 1.0)).vertices()
    assert len(corners) == 4
    assert np.max(corners[:, 0]) == pytest.approx(0.0)
    assert half.is_unbounded()
    assert not half.is_empty(1e-9)


def test_convex_cell_empty():
    """Test that disjoint half-planes give an empty cell."""
    cell = ConvexCell.from_halfplanes([(1.0, 0.0), (-1.0, 0.0)], [0.0, -1.0])
    assert cell.is_empty(1e-9)


def test_convex_hull_square():
    """Test the hull of a square with an interior point."""
    hull = convex_hull([*SQUARE, (0.5, 0.5), (0.5, 0.0)])
    assert len(hull) == 4
    assert hull.area == pytest.approx(1.0)
    assert hull.same_as(ConvexPolygon.of(SQUARE))


def test_convex_hull_collinear():
    """Test that collinear input reports its extremal segment."""
    with pytest.raises(DegenerateHull) as exc:
        convex_hull([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])
    assert exc.value.segment.length == pytest.approx(2 * math.sqrt(2))


def test_polygon_rejects_reflex_and_collinear():
    """Test strict convexity of polygons."""
    with pytest.raises(NonConvexInput):
        ConvexPolygon.of([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 1.0)])
    with pytest.raises(NonConvexInput):
        ConvexPolygon.of([(0.0, 0.0), (2.0, 0.0), (1.0, 0.2), (1.0, 2.0)])
    with pytest.raises(NonConvexInput):
        ConvexPolygon.of([(0.0, 0.0), (1.0, 0.0)])


def test_exterior_sector_of_square():
    """Test the exterior sector at a square corner."""
    sector = exterior_sector(ConvexPolygon.of(SQUARE), 0)
    assert sector.vertex == Point2(0.0, 0.0)
    assert sector.theta_f == pytest.approx(0.0)
    assert sector.theta_b == pytest.approx(-math.pi / 2)
    assert sector.width == pytest.approx(math.pi / 2)


def test_geometry_key_dedupes_rounding_noise():
    """Test that nearly equal geometries share a key."""
    a = Ray(Point2(0.0, 0.0), Direction(1.0))
    b = Ray(Point2(1e-13, 0.0), Direction(1.0 + 1e-13))
    assert geometry_key(a) == geometry_key(b)
    assert geometry_key(a) != geometry_key(Line(Direction(1.0), 0.5))


@given(
    n=st.integers(min_value=3, max_value=8),
    offset=st.floats(min_value=0.0, max_value=2 * math.pi),
    radius=st.floats(min_value=0.1, max_value=100.0),
    jitter=st.lists(st.floats(min_value=-0.2, max_value=0.2), min_size=8, max_size=8),
)
def test_hull_of_points_on_circle(n, offset, radius, jitter):
    """Test that points on a circle are all hull vertices, in counterclockwise order."""
    step = 2 * math.pi / n
    angles = [offset + k * step + jitter[k] * step for k in range(n)]
    pts = [(radius * math.cos(t), radius * math.sin(t)) for t in angles]
    hull = convex_hull(pts)
    assert len(hull) == n
    assert hull.area > 0
    assert sum(exterior_sector(hull, i).width for i in range(n)) == pytest.approx(2 * math.pi)
