import dataclasses
import math

import numpy as np
import pytest

from mongeforge.core.analyze import (
    DirectionFan,
    Evidence,
    Ruling,
    StructureViolation,
    TooCloseToSingularity,
    UmbilicPoint,
    Unverified,
    admissible,
    build_fans,
    classify,
    decide,
    gradient_bound,
    max_strip,
    normalized_residual,
    pde_residual,
    separate_fans,
    strip_from_rulings,
    trace_ruling,
    verify_scene,
)
from mongeforge.core.builders import build_half_cone
from mongeforge.core.plane import Direction, Line, Point2, Ray, Strip
from mongeforge.core.profile import CylProfile, PolySeries, TrigSeries
from mongeforge.core.scene import ConicalPiece

HALF_CONE_GRADIENT_SUP = 3 * math.sqrt(3) / 8


def test_normalized_residual():
    """Test det H / (1 + |H|²) on rank-1 and full-rank matrices."""
    H = np.array([[[1.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]])
    assert normalized_residual(H) == pytest.approx([0.0, 1.0 / 3.0])


def test_pde_residual_exact(cone_scene):
    """Test the closed-form residual of the distance cone."""
    assert abs(pde_residual(cone_scene, (1.0, 1.0))) <= 1e-12
    with pytest.raises(TooCloseToSingularity):
        pde_residual(cone_scene, (0.0, 1e-3))


def test_trace_ruling_cone(cone_scene, config):
    """Test that cone rulings are half-lines from the vertex."""
    ruling = trace_ruling(cone_scene, (1.0, 1.0), config)
    assert ruling.valid
    assert ruling.kind == "ray"
    assert ruling.endpoints == (0,)
    assert ruling.geometry.origin == Point2(0.0, 0.0)
    assert ruling.geometry.dir.theta == pytest.approx(math.pi / 4)


def test_trace_ruling_cylinder(cylinder_scene, config):
    """Test that u = x² is ruled by vertical lines."""
    ruling = trace_ruling(cylinder_scene, (1.0, 0.0), config)
    assert ruling.kind == "line"
    assert ruling.geometry.offset == pytest.approx(1.0)
    assert math.sin(ruling.geometry.normal.theta) == pytest.approx(0.0, abs=1e-12)
    assert ruling.gradient == pytest.approx((2.0, 0.0))


def test_trace_ruling_umbilic(square_scene, config):
    """Test that flat points have no ruling."""
    with pytest.raises(UmbilicPoint):
        trace_ruling(square_scene, (0.5, 0.5), config)


def test_gradient_bound_half_cone(half_cone_scene):
    """Test the gradient sup of the half-cone on shrinking circles."""
    report = gradient_bound(half_cone_scene, 0, radii=[1.0, 1e-1, 1e-2, 1e-3])
    assert report.bounded
    assert report.radii == [1.0, 1e-1, 1e-2, 1e-3]
    for sup in report.sups:
        assert sup == pytest.approx(HALF_CONE_GRADIENT_SUP, abs=1e-9)

    assert len(gradient_bound(half_cone_scene, 0).radii) == 4


def test_build_fans_groups_directions():
    """Test that close half-line directions form one arc."""
    origin = Point2(0.0, 0.0)
    rulings = [
        Ruling(Ray(origin, Direction(theta)), (0.0, 0.0), (0,)) for theta in (1.0, 1.1, 1.2)
    ]
    rulings.append(None)
    (fan,) = build_fans(rulings, [origin], 0.1)
    assert len(fan.arcs) == 1
    lo, hi = fan.arcs[0]
    assert lo == pytest.approx(1.0, abs=1e-3)
    assert hi == pytest.approx(1.2, abs=1e-3)
    assert lo < 1.0 < 1.2 < hi


def test_build_fans_full_ring():
    """Test that evenly spread directions close the circle."""
    origin = Point2(0.0, 0.0)
    step = 2 * math.pi / 24
    rulings = [Ruling(Ray(origin, Direction(k * step)), (0.0, 0.0), (0,)) for k in range(24)]
    (fan,) = build_fans(rulings, [origin], step)
    assert fan.arcs == ((0.0, 2 * math.pi),)


def test_separate_fans():
    """Test separability of direction fans."""
    a = DirectionFan(0, ((0.0, 1.0),))
    b = DirectionFan(1, ((2.0, 3.0),))
    assert separate_fans(a, b)
    assert separate_fans(a, DirectionFan(1))
    assert not separate_fans(a, DirectionFan(1, ((0.5, 2.0),)))
    interleaved_a = DirectionFan(0, ((0.0, 0.5), (2.0, 2.5)))
    interleaved_b = DirectionFan(1, ((1.0, 1.5), (3.0, 3.5)))
    assert not separate_fans(interleaved_a, interleaved_b)


def test_strip_from_rulings():
    """Test the maximal strip bounded by singular projections."""
    rulings = [
        Ruling(Line(Direction(0.0), 0.2), (0.0, 0.0)),
        Ruling(Line(Direction(0.0), 0.8), (0.0, 0.0)),
    ]
    sing = np.array([[0.0, 0.0], [1.0, 3.0]])
    strip, problems = strip_from_rulings(rulings, sing, 1e-9)
    assert problems == []
    assert strip.is_bounded
    assert (strip.c_lo, strip.c_hi) == pytest.approx((0.0, 1.0))

    strip, problems = strip_from_rulings(rulings, np.array([[0.5, 0.0]]), 1e-9)
    assert strip is None
    assert problems


def test_max_strip(cylinder_scene, cone_scene, config):
    """Test the maximal strip of a cylinder and its absence for a cone."""
    strip = max_strip(cylinder_scene, config=config)
    assert strip is not None
    assert strip.is_plane
    assert max_strip(cone_scene, config=config) is None


def test_admissible(square_scene, sector_pair_scene, cone_scene):
    """Test admissibility of built scenes."""
    assert admissible(square_scene)
    assert admissible(cone_scene)
    assert not admissible(sector_pair_scene)


def test_decide_tree():
    """Test the decision tree on hand-made evidence."""
    none = np.zeros((0, 2))
    assert decide(Evidence(none, True, Strip(Direction(0.0)), None, [], 1e-9)).label == "Cylinder"

    one = np.array([[0.0, 0.0]])
    assert decide(Evidence(one, False, None, None, [[]], 1e-9)).label == "FullCone"
    label = decide(Evidence(one, True, None, None, [[]], 1e-9)).label
    assert label == "HalfCylinderHalfCone"

    pair = np.array([[0.0, 0.0], [1.0, 0.0]])
    bounded = Strip(Direction(0.0), 0.0, 1.0)
    assert decide(Evidence(pair, True, bounded, None, [[], []], 1e-9)).variant == 1
    assert decide(Evidence(pair, False, None, None, [[], []], 1e-9)).variant == 4

    on_line = np.array([[0.0, 0.0], [0.0, 1.0]])
    half = Strip(Direction(0.0), -math.inf, 0.0)
    assert decide(Evidence(on_line, True, half, None, [[], []], 1e-9)).variant == 2
    assert decide(Evidence(pair, True, half, None, [[], []], 1e-9)).variant == 3


def test_decide_many_singular_points():
    """Test the three-or-more branch."""
    pts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [0.5, 0.5]])
    sectors = [[], [], [], []]
    with pytest.raises(StructureViolation):
        decide(Evidence(pts, False, None, True, sectors, 1e-9))
    label = decide(Evidence(pts, False, None, False, sectors, 1e-9)).label
    assert label == "NonAdmissibleOther"


def test_verify_and_classify_cone(cone_scene, config):
    """Test that the distance cone verifies and classifies as a full cone."""
    report = verify_scene(cone_scene, config)
    assert report.passed, report.violations
    assert report.max_residual <= config.residual_tol
    assert report.full_lines == 0
    assert report.half_lines > 0
    assert report.fans[0].arcs == [(0.0, 2 * math.pi)]
    assert classify(cone_scene, report).label == "FullCone"


def test_classify_refuses_failed_report(cone_scene, config):
    """Test that classification needs a passing report."""
    report = verify_scene(cone_scene, config).model_copy(update={"passed": False})
    with pytest.raises(Unverified):
        classify(cone_scene, report)


def test_transverse_check_is_scale_free_near_vertex(config):
    """Test that a tilted, shifted half-cone passes the interface checks near its vertex."""
    line_theta = 1.234
    vertex = (2.7, -1.9)
    c0 = float(np.asarray(vertex) @ np.array([math.sin(line_theta), -math.cos(line_theta)]))
    profile = CylProfile(c0, None, 0.0, 0.0, PolySeries((0.0, 0.0, 1.0), c0))
    scene = build_half_cone(vertex, line_theta, profile)

    report = verify_scene(scene, config)
    assert report.passed, report.violations
    assert report.max_transverse <= config.transverse_tol
    assert report.max_hess_jump <= config.jump_tol


def test_failed_gluing_reports_why(half_cone_scene, config):
    """Test that a cone with curvature left on its rays fails with a message."""
    pieces = list(half_cone_scene.pieces)
    k = next(i for i, p in enumerate(pieces) if isinstance(p, ConicalPiece))
    cone = pieces[k]
    bent = dataclasses.replace(cone.profile, kappa=cone.profile.kappa + TrigSeries.constant(1.0))
    pieces[k] = dataclasses.replace(cone, profile=bent)
    scene = dataclasses.replace(half_cone_scene, pieces=tuple(pieces))

    report = verify_scene(scene, config)
    assert not report.passed
    assert report.max_transverse == pytest.approx(1.0, rel=1e-6)
    assert any("transverse curvature" in v for v in report.violations)
    assert any("interface jump" in v for v in report.violations)
