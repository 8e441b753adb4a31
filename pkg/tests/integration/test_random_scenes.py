import math

import numpy as np
import pytest

from mongeforge.core.analyze import classify, normalized_residual, verify_scene
from mongeforge.core.builders import (
    build_cylinder,
    build_full_cone,
    build_half_cone,
    build_polyhedral,
    build_two_singular,
)
from mongeforge.core.plane import ConvexPolygon, convex_hull, exterior_sector, unit
from mongeforge.core.profile import CylProfile, PolySeries, TrigSeries
from mongeforge.core.scene import ConicalPiece, Scene, evaluate_many
from mongeforge.services.serialization import emit_scene, parse_scene

HALF_PI = 0.5 * math.pi


def _place(rng: np.random.Generator) -> tuple[float, float]:
    x, y = rng.uniform(-3.0, 3.0, size=2)
    return float(x), float(y)


def random_cylinder(rng: np.random.Generator) -> Scene:
    x_b = float(rng.uniform(-1.0, 1.0))
    kappa = PolySeries(tuple(float(c) for c in rng.uniform(0.2, 2.0, size=2)), x_b)
    profile = CylProfile(x_b, None, float(rng.normal()), float(rng.normal()), kappa)
    return build_cylinder(float(rng.uniform(0, 2 * math.pi)), float(rng.normal()), profile)


def random_full_cone(rng: np.random.Generator) -> Scene:
    a, b = rng.uniform(-0.3, 0.3, size=2)
    kappa = TrigSeries.of((0.0, 1.0, 0.0), (2.0, float(a), float(b)))
    return build_full_cone(_place(rng), float(rng.normal()), kappa)


def random_half_cone(rng: np.random.Generator) -> Scene:
    vertex = _place(rng)
    line_theta = float(rng.uniform(0, 2 * math.pi))
    c0 = float(np.asarray(vertex) @ unit(line_theta - HALF_PI))
    profile = CylProfile(c0, None, 0.0, 0.0, PolySeries((0.0, 0.0, 1.0), c0))
    return build_half_cone(vertex, line_theta, profile)


def random_strip_pair(rng: np.random.Generator) -> Scene:
    line_theta = float(rng.uniform(0, 2 * math.pi))
    p1 = np.asarray(_place(rng))
    e1, e2 = unit(line_theta - HALF_PI), unit(line_theta)
    p2 = p1 + rng.uniform(0.5, 2.0) * e1 + rng.uniform(-1.0, 1.0) * e2
    return build_two_singular(1, p1=tuple(p1), p2=tuple(p2), line_theta=line_theta)


def random_half_strip(rng: np.random.Generator) -> Scene:
    line_theta = float(rng.uniform(0, 2 * math.pi))
    p1 = np.asarray(_place(rng))
    p2 = p1 + rng.uniform(0.5, 2.0) * unit(line_theta)
    return build_two_singular(
        2, p1=tuple(p1), p2=tuple(p2), line_theta=line_theta, psi=float(rng.uniform(-1.2, 1.2))
    )


def random_wedge(rng: np.random.Generator) -> Scene:
    return build_two_singular(
        3,
        p1=_place(rng),
        line_theta=float(rng.uniform(0, 2 * math.pi)),
        psi1=float(rng.uniform(-1.3, -0.1)),
        psi2=float(rng.uniform(0.1, 1.3)),
        a=float(rng.uniform(0.5, 1.5)),
        b=float(rng.uniform(0.5, 1.5)),
    )


def random_sector_pair(rng: np.random.Generator) -> Scene:
    phi = float(rng.uniform(0, 2 * math.pi))
    p1 = np.asarray(_place(rng))
    p2 = p1 + rng.uniform(1.0, 3.0) * unit(phi)
    return build_two_singular(
        4,
        p1=tuple(p1),
        sector1=(math.pi + phi, 1.5 * math.pi + phi),
        p2=tuple(p2),
        sector2=(phi, HALF_PI + phi),
    )


def random_polygon(rng: np.random.Generator) -> list[tuple[float, float]]:
    """Counterclockwise vertices of a rotated, stretched and shifted circle polygon."""
    n = int(rng.integers(3, 9))
    gaps = rng.uniform(0.5, 1.5, size=n)
    angles = 2 * math.pi * np.cumsum(gaps) / np.sum(gaps)
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    pts *= rng.uniform(0.5, 3.0) * np.array([1.0, rng.uniform(0.5, 1.0)])
    phi = rng.uniform(0, 2 * math.pi)
    rotation = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    pts = pts @ rotation.T + np.asarray(_place(rng))
    return [(float(x), float(y)) for x, y in pts]


def random_polyhedral(rng: np.random.Generator) -> Scene:
    return build_polyhedral(random_polygon(rng))


FAMILIES = [
    (random_cylinder, "Cylinder", None),
    (random_full_cone, "FullCone", None),
    (random_half_cone, "HalfCylinderHalfCone", None),
    (random_strip_pair, "TwoSingular", 1),
    (random_half_strip, "TwoSingular", 2),
    (random_wedge, "TwoSingular", 3),
    (random_sector_pair, "TwoSingular", 4),
    (random_polyhedral, "Polyhedral", None),
]


def _residual_points(scene: Scene, rng: np.random.Generator, count: int) -> np.ndarray:
    pts = scene.center + scene.scale * rng.uniform(-4.0, 4.0, size=(count, 2))
    sing = scene.singular_array()
    if len(sing):
        dist = np.min(np.linalg.norm(pts[:, None, :] - sing[None, :, :], axis=2), axis=1)
        pts = pts[dist > 1e-6 * scene.scale]
    return pts


@pytest.mark.parametrize("make,label,variant", FAMILIES)
def test_residual_vanishes_on_random_draws(make, label, variant):
    """Test the normalized residual over 100 random scenes of each family."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        scene = make(rng)
        batch = evaluate_many(scene, _residual_points(scene, rng, 100))
        worst = max(worst, float(np.max(np.abs(normalized_residual(batch.hessians)))))
    assert worst <= 1e-10


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("make,label,variant", FAMILIES)
def test_random_orientation_round_trip(make, label, variant, seed, config):
    """Test parse, emit, verify and classify on randomly placed and rotated scenes."""
    scene = parse_scene(emit_scene(make(np.random.default_rng(seed))))

    report = verify_scene(scene, config)
    assert report.passed, report.violations
    assert report.max_transverse <= config.transverse_tol
    assert max(report.max_value_jump, report.max_grad_jump, report.max_hess_jump) <= 1e-9

    result = classify(scene, report)
    assert result.label == label
    assert result.variant == variant


@pytest.mark.parametrize("seed", range(15))
def test_random_polygon_is_polyhedral(seed, config):
    """Test hull, exterior sectors and the zero polygon of a random convex polygon scene."""
    rng = np.random.default_rng(100 + seed)
    vertices = random_polygon(rng)
    scene = build_polyhedral(vertices)
    poly = ConvexPolygon.of(vertices)

    assert convex_hull(vertices).same_as(poly, tol=1e-12)

    cones = [p for p in scene.pieces if isinstance(p, ConicalPiece)]
    assert len(cones) == len(poly)
    for i, vertex in enumerate(poly.vertices):
        (cone,) = [c for c in cones if c.vertex == vertex]
        expected = exterior_sector(poly, i)
        assert math.remainder(cone.sector.theta_b - expected.theta_b, 2 * math.pi) == (
            pytest.approx(0.0, abs=1e-12)
        )
        assert cone.sector.width == pytest.approx(expected.width, abs=1e-12)

    weights = rng.dirichlet(np.ones(len(poly)), size=200)
    inside = weights @ poly.as_array()
    batch = evaluate_many(scene, inside)
    assert np.max(np.abs(batch.values)) <= 1e-12
    assert np.max(np.abs(batch.gradients)) <= 1e-12

    report = verify_scene(scene, config)
    assert report.passed, report.violations
    result = classify(scene, report)
    assert result.label == "Polyhedral"
    assert convex_hull(result.polygon).same_as(poly, tol=1e-9)
