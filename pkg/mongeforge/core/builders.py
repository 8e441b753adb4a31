"""Scene builders, one per solution family.

Conventions shared by the builders that use a boundary line ``r`` at angle ``line_theta``:
``e2`` runs along ``r``, ``e1`` is ``e2`` turned by -π/2 (``frame_theta = line_theta - π/2``), the
cylinder occupies ``x = p·e1 < c0`` and the angles ``psi`` of half-lines leaving ``r`` are
measured from ``e1`` in ``[-π/2, π/2]``.
"""

import math
from collections.abc import Sequence

import numpy as np

from ..utils.logging import get_logger
from .plane import (
    ConvexCell,
    ConvexPolygon,
    Direction,
    Line,
    NonConvexInput,
    Point2,
    Sector,
    Strip,
    cross,
    exterior_sector,
    unit,
)
from .profile import (
    AffineData,
    ConeProfile,
    CylProfile,
    Infeasible,
    Kind,
    PolySeries,
    TrigSeries,
    combine,
    default_cone_basis,
    harmonic_profile,
    periodic_profile,
    solve_kappa,
)
from .scene import (
    BadGeometry,
    ConicalPiece,
    CylindricalPiece,
    GluingInfeasible,
    LinearPiece,
    NotSingular,
    Piece,
    Scene,
    assemble_scene,
)

logger = get_logger(__name__)

HALF_PI = 0.5 * math.pi
AFFINE_TOL = 1e-12
KAPPA_ZERO_TOL = 1e-12


def bridge_cone(
    vertex: Point2,
    theta_b: float,
    theta_f: float,
    aff_b: AffineData,
    aff_f: AffineData,
    basis: Sequence[TrigSeries] | None = None,
) -> ConicalPiece:
    """Cone on ``(theta_b, theta_f)`` matching ``aff_b`` and ``aff_f`` to second order on its rays.

    Raises:
        GluingInfeasible: If the affines disagree at the vertex or the moments are unreachable.
        TrivialOnly: If a zero moment target only admits κ = 0.
    """
    v = vertex.as_array()
    u0 = float(aff_b(v))
    scale = 1.0 + abs(u0) + float(np.max(np.abs(aff_b.gradient)))
    if abs(float(aff_f(v)) - u0) > AFFINE_TOL * scale:
        raise GluingInfeasible(
            f"Neighbor affines disagree at the vertex ({vertex.x}, {vertex.y})"
        )
    dg = aff_f.gradient - aff_b.gradient
    if np.max(np.abs(dg)) <= AFFINE_TOL * scale:
        target = (0.0, 0.0)
    else:
        target = (float(dg @ unit(theta_f)), float(dg @ unit(theta_f + HALF_PI)))
    if basis is None:
        basis = default_cone_basis(theta_b, theta_f)
    try:
        coeffs = solve_kappa(Kind.CONE, basis, theta_b, theta_f, target, endpoint_zero=True)
    except Infeasible as e:
        raise GluingInfeasible(f"Cone at ({vertex.x}, {vertex.y}): {e}") from e
    kappa = combine(basis, coeffs)
    alpha_b, dalpha_b = harmonic_profile(aff_b, vertex, theta_b)
    profile = ConeProfile(theta_b, theta_f, float(alpha_b), float(dalpha_b), kappa)  # type: ignore
    return ConicalPiece(vertex, Sector(vertex, theta_b, theta_f), u0, profile)


def build_cylinder(
    frame_theta: float, v0: float, profile: CylProfile, base: float = 0.0
) -> Scene:
    """Cylindrical function over the whole plane; no singular points."""
    if not profile.whole_line:
        raise BadGeometry("A plane-filling cylinder needs a whole-line profile (x_f = None)")
    piece = CylindricalPiece(frame_theta, Strip(Direction(frame_theta)), v0, profile, base)
    scene = assemble_scene([piece], [])
    logger.info("Built cylinder scene")
    return scene


def build_full_cone(
    vertex: Point2 | Sequence[float], u0: float, kappa: TrigSeries
) -> Scene:
    """Periodic cone on the punctured plane.

    Raises:
        NotSingular: If κ vanishes identically.
        Unsolvable: If κ has a first harmonic.
    """
    vertex = Point2.of(vertex)
    if kappa.is_zero():
        raise NotSingular("κ = 0 gives an affine function; the vertex would be removable")
    profile = periodic_profile(kappa)
    piece = ConicalPiece(vertex, Sector(vertex, 0.0, 2.0 * math.pi), u0, profile)
    scene = assemble_scene([piece], [vertex])
    logger.info(f"Built full cone at ({vertex.x}, {vertex.y})")
    return scene


def _half_plane_cylinder(
    point: Point2,
    line_theta: float,
    kappa: PolySeries,
    alpha_b: float,
    dalpha_b: float,
    v0: float,
    base: float,
    allow_flat: bool,
) -> tuple[CylindricalPiece, float]:
    """Cylinder on ``x < c0`` where ``x = c0`` is the line through ``point``."""
    frame_theta = line_theta - HALF_PI
    c0 = float(point.as_array() @ unit(frame_theta))
    kappa_at_line = abs(float(kappa(c0)))
    if kappa_at_line > KAPPA_ZERO_TOL * (1.0 + float(np.max(np.abs(kappa.coeffs), initial=0.0))):
        raise GluingInfeasible(f"Cylinder curvature {kappa_at_line:.3e} does not vanish on r")
    if not allow_flat and kappa.is_zero():
        raise GluingInfeasible("Cylinder curvature vanishes identically; its half-plane is linear")
    profile = CylProfile(c0, -math.inf, alpha_b, dalpha_b, kappa)
    strip = Strip(Direction(frame_theta), -math.inf, c0)
    return CylindricalPiece(frame_theta, strip, v0, profile, base), c0


def build_half_cone(
    vertex: Point2 | Sequence[float],
    line_theta: float,
    cyl_profile: CylProfile,
    v0: float = 0.0,
    cone_kappa_basis: Sequence[TrigSeries] | None = None,
    base: float = 0.0,
) -> Scene:
    """Cylinder on one side of ``r`` and a cone on the other, vertex on ``r``.

    The cylinder profile is anchored on ``r`` (``x_b = c0``); its curvature must vanish there.

    Raises:
        GluingInfeasible: Anchor off the line or curvature nonzero on it.
        TrivialOnly: If the basis admits no nontrivial cone curvature.
    """
    vertex = Point2.of(vertex)
    c0 = float(vertex.as_array() @ unit(line_theta - HALF_PI))
    if abs(cyl_profile.x_b - c0) > 1e-12 * (1.0 + abs(c0)):
        raise GluingInfeasible(f"Cylinder profile anchored at {cyl_profile.x_b}, line at {c0}")
    if cyl_profile.x_f is not None and cyl_profile.x_f > cyl_profile.x_b:
        raise GluingInfeasible("Cylinder profile must extend towards x < c0")
    cylinder, _ = _half_plane_cylinder(
        vertex,
        line_theta,
        cyl_profile.kappa,
        cyl_profile.alpha_b,
        cyl_profile.dalpha_b,
        v0,
        base,
        allow_flat=True,
    )
    boundary = cylinder.boundary_affine(c0)
    cone = bridge_cone(
        vertex, line_theta - math.pi, line_theta, boundary, boundary, cone_kappa_basis
    )
    scene = assemble_scene([cylinder, cone], [vertex])
    logger.info(f"Built half-cylinder/half-cone at ({vertex.x}, {vertex.y})")
    return scene


def default_strip_kappa(c_lo: float, c_hi: float, amplitude: float = 1.0) -> PolySeries:
    """``amplitude · (x − c_lo)(c_hi − x)``, vanishing on both strip lines."""
    width = c_hi - c_lo
    return PolySeries((0.0, amplitude * width, -amplitude), c_lo)


def build_strip_pair(
    p1: Point2 | Sequence[float],
    p2: Point2 | Sequence[float],
    line_theta: float = HALF_PI,
    line_theta2: float | None = None,
    cyl_kappa: PolySeries | None = None,
    alpha_b: float = 0.0,
    dalpha_b: float = 0.0,
    v0: float = 0.0,
    base: float = 0.0,
    bases: Sequence[Sequence[TrigSeries] | None] = (None, None),
) -> Scene:
    """Cylinder on the strip between two parallel lines, half-plane cones at ``p1`` and ``p2``."""
    p1, p2 = Point2.of(p1), Point2.of(p2)
    if line_theta2 is not None and abs(math.sin(line_theta2 - line_theta)) > 1e-12:
        raise BadGeometry("Strip boundary lines are not parallel")
    frame_theta = line_theta - HALF_PI
    e1 = unit(frame_theta)
    c_lo, c_hi = float(p1.as_array() @ e1), float(p2.as_array() @ e1)
    if c_hi - c_lo <= 1e-9 * max(1.0, p1.distance(p2)):
        raise BadGeometry("p2 must lie on the boundary line on the +e1 side of p1")
    kappa = cyl_kappa if cyl_kappa is not None else default_strip_kappa(c_lo, c_hi)
    ends = np.abs(kappa(np.array([c_lo, c_hi])))
    if np.any(ends > KAPPA_ZERO_TOL * (1.0 + float(np.max(np.abs(kappa.coeffs), initial=0.0)))):
        raise GluingInfeasible("Cylinder curvature must vanish on both strip lines")
    if kappa.is_zero():
        raise GluingInfeasible("Cylinder curvature vanishes identically; the strip is linear")
    profile = CylProfile(c_lo, c_hi, alpha_b, dalpha_b, kappa)
    cylinder = CylindricalPiece(
        frame_theta, Strip(Direction(frame_theta), c_lo, c_hi), v0, profile, base
    )
    lower, upper = cylinder.boundary_affine(c_lo), cylinder.boundary_affine(c_hi)
    cone1 = bridge_cone(p1, line_theta, line_theta + math.pi, lower, lower, bases[0])
    cone2 = bridge_cone(p2, line_theta - math.pi, line_theta, upper, upper, bases[1])
    scene = assemble_scene([cylinder, cone1, cone2], [p1, p2])
    logger.info("Built strip pair (two singular points on opposite strip lines)")
    return scene


def _psi_in_range(psi: float) -> None:
    if not -HALF_PI - 1e-12 <= psi <= HALF_PI + 1e-12:
        raise BadGeometry(f"Half-line angle {psi} must lie in [-π/2, π/2] from e1")


def build_half_strip(
    p1: Point2 | Sequence[float],
    p2: Point2 | Sequence[float],
    line_theta: float = HALF_PI,
    psi: float = 0.0,
    psi2: float | None = None,
    cyl_kappa: PolySeries | None = None,
    alpha_b: float = 0.0,
    dalpha_b: float = 0.0,
    v0: float = 0.0,
    base: float = 0.0,
    bases: Sequence[Sequence[TrigSeries] | None] = (None, None),
) -> Scene:
    """Cylinder half-plane, linear half-strip between parallel half-lines from ``p1`` and ``p2``.

    ``p1`` and ``p2`` lie on ``r``; ``psi`` (and ``psi2`` when given) are the half-line angles.
    """
    p1, p2 = Point2.of(p1), Point2.of(p2)
    if psi2 is not None and abs(math.sin(psi2 - psi)) > 1e-12:
        raise BadGeometry("Half-lines h1, h2 are not parallel")
    if not -HALF_PI < psi < HALF_PI:
        raise BadGeometry(f"Half-lines must leave r into the open side, got psi = {psi}")
    frame_theta = line_theta - HALF_PI
    e1, e2 = unit(frame_theta), unit(line_theta)
    d = p2.as_array() - p1.as_array()
    if abs(float(d @ e1)) > 1e-9 * max(1.0, float(np.linalg.norm(d))):
        raise BadGeometry("p1 and p2 must both lie on r")
    if float(d @ e2) < 0:
        p1, p2 = p2, p1
        d = -d
    if float(d @ e2) <= 1e-9:
        raise BadGeometry("p1 and p2 coincide")
    c0 = float(p1.as_array() @ e1)
    kappa = cyl_kappa if cyl_kappa is not None else PolySeries((0.0, 0.0, 1.0), c0)
    cylinder, _ = _half_plane_cylinder(
        p1, line_theta, kappa, alpha_b, dalpha_b, v0, base, allow_flat=False
    )
    boundary = cylinder.boundary_affine(c0)
    h = frame_theta + psi
    w = unit(h)
    cone1 = bridge_cone(p1, frame_theta - HALF_PI, h, boundary, boundary, bases[0])
    cone2 = bridge_cone(p2, h, frame_theta + HALF_PI, boundary, boundary, bases[1])
    inside = 0.5 * (p1.as_array() + p2.as_array()) + 0.5 * float(d @ e2) * w
    region = ConvexCell.from_lines(
        [Line.through(p1, line_theta), Line.through(p1, h), Line.through(p2, h)], inside
    )
    strip_piece = LinearPiece(boundary, region)
    scene = assemble_scene([cylinder, strip_piece, cone1, cone2], [p1, p2])
    logger.info("Built half-strip configuration (two singular points on r)")
    return scene


def build_wedge(
    p1: Point2 | Sequence[float],
    line_theta: float = HALF_PI,
    psi1: float = -math.pi / 4,
    psi2: float = math.pi / 4,
    a: float = 1.0,
    b: float = 1.0,
    linear_gradient: Sequence[float] | None = None,
    cyl_kappa: PolySeries | None = None,
    alpha_b: float = 0.0,
    dalpha_b: float = 0.0,
    v0: float = 0.0,
    base: float = 0.0,
    bases: Sequence[Sequence[TrigSeries] | None] = (None, None, None),
) -> Scene:
    """Cylinder half-plane and a wedge at ``p1``: an L-shaped linear domain and a cone at ``p2``.

    The wedge is bounded by half-lines ``h1``, ``h2`` from ``p1`` at angles ``psi1 < psi2``;
    ``p2 = p1 + a·w1 + b·w2``. Cones at ``p1`` fill the two gaps between ``r`` and the wedge
    (bridging the cylinder to the linear function), the cone at ``p2`` spans the translated
    wedge. At most one half-line may lie in ``r``.
    """
    p1 = Point2.of(p1)
    _psi_in_range(psi1)
    _psi_in_range(psi2)
    if not psi1 < psi2:
        raise BadGeometry("Need psi1 < psi2")
    low_on_r = psi1 <= -HALF_PI + 1e-12
    high_on_r = psi2 >= HALF_PI - 1e-12
    if low_on_r and high_on_r:
        raise BadGeometry("At most one half-line may lie in r")
    if a <= 0 or b <= 0:
        raise BadGeometry("p2 must lie strictly inside the wedge (a, b > 0)")
    frame_theta = line_theta - HALF_PI
    e1 = unit(frame_theta)
    h1, h2 = frame_theta + psi1, frame_theta + psi2
    w1, w2 = unit(h1), unit(h2)
    origin = p1.as_array()
    p2 = Point2.of(origin + a * w1 + b * w2)
    if float((p2.as_array() - origin) @ e1) <= 1e-9 * max(1.0, a + b):
        raise BadGeometry("p2 lies on r")

    c0 = float(origin @ e1)
    kappa = cyl_kappa if cyl_kappa is not None else PolySeries((0.0, 0.0, 1.0), c0)
    cylinder, _ = _half_plane_cylinder(
        p1, line_theta, kappa, alpha_b, dalpha_b, v0, base, allow_flat=False
    )
    boundary = cylinder.boundary_affine(c0)
    if linear_gradient is None:
        g = boundary.gradient
    else:
        g = np.asarray(linear_gradient, dtype=float)
        if (low_on_r or high_on_r) and np.max(np.abs(g - boundary.gradient)) > AFFINE_TOL:
            raise GluingInfeasible("A half-line in r forces the linear gradient to the cylinder's")
    linear = AffineData((g[0], g[1]), float(boundary(origin)) - float(g @ origin))

    pieces: list[Piece] = [cylinder]
    if not low_on_r:
        pieces.append(bridge_cone(p1, frame_theta - HALF_PI, h1, boundary, linear, bases[0]))
    if not high_on_r:
        pieces.append(bridge_cone(p1, h2, frame_theta + HALF_PI, linear, boundary, bases[1]))
    pieces.append(bridge_cone(p2, h1, h2, linear, linear, bases[2]))

    corner = origin + a * w1
    reach = max(a, b, 1.0)
    d1 = ConvexCell.from_lines(
        [Line.through(p1, h1), Line.through(p1, h2), Line.through(corner, h2)],
        origin + 0.5 * a * w1 + reach * w2,
    )
    d2 = ConvexCell.from_lines(
        [Line.through(p1, h1), Line.through(origin + b * w2, h1), Line.through(corner, h2)],
        corner + reach * w1 + 0.5 * b * w2,
    )
    pieces.extend([LinearPiece(linear, d1), LinearPiece(linear, d2)])
    scene = assemble_scene(pieces, [p1, p2])
    logger.info("Built wedge configuration (one singular point off r)")
    return scene


def build_sector_pair(
    p1: Point2 | Sequence[float],
    sector1: tuple[float, float],
    p2: Point2 | Sequence[float],
    sector2: tuple[float, float],
    linear: AffineData | None = None,
    bases: Sequence[Sequence[TrigSeries] | None] = (None, None),
) -> Scene:
    """Two disjoint sectors carrying cones; one affine function on the complement."""
    p1, p2 = Point2.of(p1), Point2.of(p2)
    linear = linear if linear is not None else AffineData()
    s1 = Sector(p1, *sector1)
    s2 = Sector(p2, *sector2)
    if s1.is_full or s2.is_full:
        raise BadGeometry("Sectors of a sector pair must be proper")
    eps = 1e-9 * max(1.0, p1.distance(p2))
    for c1 in s1.as_cells():
        for c2 in s2.as_cells():
            if not c1.intersect(c2).is_empty(eps):
                raise BadGeometry("Sectors overlap")
    pieces: list[Piece] = [
        bridge_cone(p1, s1.theta_b, s1.theta_f, linear, linear, bases[0]),
        bridge_cone(p2, s2.theta_b, s2.theta_f, linear, linear, bases[1]),
    ]
    for t1 in s1.complement_cells():
        for t2 in s2.complement_cells():
            cell = t1.intersect(t2)
            if not cell.is_empty(eps):
                pieces.append(LinearPiece(linear, cell))
    scene = assemble_scene(pieces, [p1, p2])
    logger.info(f"Built sector pair with {len(pieces) - 2} linear cells")
    return scene


TWO_SINGULAR_BUILDERS = {
    1: build_strip_pair,
    2: build_half_strip,
    3: build_wedge,
    4: build_sector_pair,
}


def build_two_singular(variant: int, **params) -> Scene:
    """Dispatch to the two-singular-point family ``variant`` (1-4)."""
    try:
        builder = TWO_SINGULAR_BUILDERS[variant]
    except KeyError as e:
        raise BadGeometry(f"Unknown two-singular variant {variant}") from e
    return builder(**params)


def build_polyhedral(
    vertices: Sequence[Point2 | Sequence[float]],
    kappa_bases: Sequence[Sequence[TrigSeries] | None] | None = None,
) -> Scene:
    """Zero on the convex polygon, one cone per exterior sector.

    Raises:
        NonConvexInput: Collinear, reflex or too few vertices.
        TrivialOnly: A vertex basis admits only κ = 0.
    """
    pts = [Point2.of(v) for v in vertices]
    if len(pts) < 3:
        raise NonConvexInput(f"Need at least 3 vertices, got {len(pts)}")
    arr = np.array([(p.x, p.y) for p in pts])
    if float(np.sum(cross(arr, np.roll(arr, -1, axis=0)))) < 0:
        pts = pts[::-1]
        if kappa_bases is not None:
            kappa_bases = list(kappa_bases)[::-1]
    poly = ConvexPolygon(tuple(pts))
    if kappa_bases is not None and len(kappa_bases) != len(poly):
        raise NonConvexInput(f"Expected {len(poly)} bases, got {len(kappa_bases)}")
    zero = AffineData()
    pieces: list[Piece] = [LinearPiece(zero, poly.as_cell())]
    for i in range(len(poly)):
        sector = exterior_sector(poly, i)
        basis = kappa_bases[i] if kappa_bases is not None else None
        pieces.append(bridge_cone(sector.vertex, sector.theta_b, sector.theta_f, zero, zero, basis))
    scene = assemble_scene(pieces, list(poly.vertices))
    logger.info(f"Built polyhedral scene with {len(poly)} singular points")
    return scene
