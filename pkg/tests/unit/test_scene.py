import math

import numpy as np
import pytest

from mongeforge.core.plane import ConvexCell, Point2, Sector, SingularPoint
from mongeforge.core.profile import AffineData, TrigSeries, periodic_profile
from mongeforge.core.scene import (
    ConicalPiece,
    LinearPiece,
    Scene,
    SceneError,
    SceneValidationError,
    evaluate,
    evaluate_many,
    gauge_shift,
    locate,
    validate_scene,
)
from tests.conftest import half_cone_oracle


def test_evaluate_distance_cone(cone_scene):
    """Test value, gradient and Hessian of u = |p|."""
    result = evaluate(cone_scene, (1.0, 1.0))
    r = math.sqrt(2.0)
    assert result.value == pytest.approx(r)
    assert result.gradient == pytest.approx([1 / r, 1 / r])
    expected = np.array([[0.5, -0.5], [-0.5, 0.5]]) / r
    assert result.hessian == pytest.approx(expected)
    assert result.piece_id == 0
    assert not result.umbilic


def test_evaluate_at_singular_point(cone_scene):
    """Test that the vertex cannot be evaluated."""
    with pytest.raises(SingularPoint):
        evaluate(cone_scene, (0.0, 0.0))
    with pytest.raises(SingularPoint):
        locate(cone_scene, Point2(0.0, 0.0))


def test_evaluate_many_marks_singular_rows(cone_scene):
    """Test that batch rows at singular points are NaN with piece id -1."""
    batch = evaluate_many(cone_scene, np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert np.isnan(batch.values[0])
    assert batch.piece_ids[0] == -1
    assert batch.values[1] == pytest.approx(5.0)
    assert batch.piece_ids[1] == 0


def test_half_cone_matches_closed_form(half_cone_scene):
    """Test the half-cone scene against -x³/(2(x²+y²)) on x > 0 and 0 on x < 0."""
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2.0, 2.0, size=(200, 2))
    batch = evaluate_many(half_cone_scene, pts)
    assert batch.values == pytest.approx(half_cone_oracle(pts), abs=1e-12)


def test_locate_on_interface(half_cone_scene):
    """Test that boundary points go to the lowest piece id."""
    piece_id, on_interface = locate(half_cone_scene, (0.0, 1.0))
    assert piece_id == 0
    assert on_interface
    piece_id, on_interface = locate(half_cone_scene, (1.0, 0.0))
    assert piece_id == 1
    assert not on_interface


def test_half_cone_interfaces(half_cone_scene):
    """Test that derived interfaces join the cylinder and the cone."""
    assert half_cone_scene.interfaces
    assert {(f.a, f.b) for f in half_cone_scene.interfaces} == {(0, 1)}


def test_gauge_shift_adds_affine(cone_scene, half_cone_scene):
    """Test that a gauge shift adds the affine function and keeps the geometry."""
    aff = AffineData((1.0, 2.0), 3.0)
    pts = np.array([[1.0, 1.0], [-2.0, 0.5], [0.3, -1.7]])
    for scene in (cone_scene, half_cone_scene):
        before = evaluate_many(scene, pts)
        shifted = gauge_shift(scene, aff)
        after = evaluate_many(shifted, pts)
        assert after.values == pytest.approx(before.values + aff(pts), abs=1e-12)
        assert after.gradients == pytest.approx(before.gradients + np.array([1.0, 2.0]), abs=1e-12)
        assert after.hessians == pytest.approx(before.hessians, abs=1e-12)
        assert shifted.singularities == scene.singularities
        assert shifted.interfaces == scene.interfaces


def test_scale_and_center(square_scene, cone_scene):
    """Test the scene scale and center."""
    assert cone_scene.scale == 1.0
    assert square_scene.scale == pytest.approx(math.sqrt(2.0))
    assert square_scene.center == pytest.approx([0.5, 0.5])


def test_validate_overlapping_pieces():
    """Test that overlapping linear cells break disjointness."""
    left = LinearPiece(AffineData(), ConvexCell.from_halfplanes([(1.0, 0.0)], [1.0]))
    right = LinearPiece(AffineData(), ConvexCell.from_halfplanes([(-1.0, 0.0)], [0.0]))
    with pytest.raises(SceneValidationError) as exc:
        validate_scene(Scene((left, right)))
    assert exc.value.invariant == "disjoint"


def test_validate_uncovered_plane():
    """Test that a half-plane alone does not cover the plane."""
    half = LinearPiece(AffineData(), ConvexCell.from_halfplanes([(1.0, 0.0)], [0.0]))
    with pytest.raises(SceneValidationError) as exc:
        validate_scene(Scene((half,)))
    assert exc.value.invariant == "cover"
    assert isinstance(exc.value, SceneError)


def test_validate_singularity_without_cone(cylinder_scene):
    """Test that every singular point needs a cone vertex."""
    scene = Scene(cylinder_scene.pieces, (Point2(0.0, 0.0),))
    with pytest.raises(SceneValidationError) as exc:
        validate_scene(scene)
    assert exc.value.invariant == "singularity_vertex"


def test_validate_removable_singularity():
    """Test that a flat cone does not make a genuine singular point."""
    vertex = Point2(0.0, 0.0)
    full = Sector(vertex, 0.0, 2 * math.pi)
    flat = ConicalPiece(vertex, full, 0.0, periodic_profile(TrigSeries()))
    with pytest.raises(SceneValidationError) as exc:
        validate_scene(Scene((flat,), (vertex,)))
    assert exc.value.invariant == "singularity_genuine"


def test_validate_accepts_built_scenes(square_scene, strip_pair_scene, sector_pair_scene):
    """Test that builder output passes validation."""
    for scene in (square_scene, strip_pair_scene, sector_pair_scene):
        validate_scene(scene)
