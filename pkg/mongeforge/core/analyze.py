"""Numerical and structural verification of scenes, and classification.

Exact scenes are checked through their closed-form Hessians; sampled grids go through
``core.inference`` and share the fan, strip and decision logic defined here.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..models.config import MongeForgeConfig
from ..models.reports import (
    Classification,
    FanReport,
    GradientBoundReport,
    StripReport,
    VerificationReport,
)
from ..utils.logging import get_logger
from .plane import (
    TWO_PI,
    DegenerateHull,
    Direction,
    Geometry,
    Line,
    Point2,
    Ray,
    Segment,
    Strip,
    as_points,
    convex_hull,
    cross,
    exterior_sector,
    rot90,
    sample_geometry,
)
from .scene import (
    ConicalPiece,
    CylindricalPiece,
    LinearPiece,
    Scene,
    evaluate_many,
    locate_many,
)

logger = get_logger(__name__)

UMBILIC_TOL = 1e-12
RULING_GRADIENT_TOL = 1e-8
SAMPLES_PER_SIDE = 48
APPROACH_SAMPLES = 16
GAP_FACTOR = 2.5


class AnalysisError(Exception):
    """Base exception for analysis failures."""


class TooCloseToSingularity(AnalysisError):
    """The stencil or probe would touch a singular point."""


class OutsideWindow(AnalysisError):
    """The stencil leaves the sampled window."""


class UmbilicPoint(AnalysisError):
    """The Hessian vanishes at the query point; no ruling passes through it."""


class Unverified(AnalysisError):
    """Classification was asked for a field that did not pass verification."""


class StructureViolation(AnalysisError):
    """Admissible with three or more singular points, yet not polyhedral."""


class ResolutionTooLow(AnalysisError):
    """Grid too coarse for structure inference."""


class InconsistentField(AnalysisError):
    """Rulings of one non-umbilic component are neither parallel nor concurrent."""


@dataclass(frozen=True)
class Ruling:
    """Maximal line piece through a seed along which the gradient is constant."""

    geometry: Geometry
    gradient: tuple[float, float]
    endpoints: tuple[int, ...] = ()
    valid: bool = True
    reason: str | None = None
    seed: tuple[float, float] | None = None

    @property
    def kind(self) -> str:
        if isinstance(self.geometry, Line):
            return "line"
        if isinstance(self.geometry, Ray):
            return "ray"
        return "segment"


@dataclass(frozen=True)
class DirectionFan:
    """Directions of half-line rulings leaving one singular point, as disjoint open arcs."""

    singularity: int
    arcs: tuple[tuple[float, float], ...] = ()

    @property
    def empty(self) -> bool:
        return not self.arcs

    def to_report(self) -> FanReport:
        return FanReport(singularity=self.singularity, arcs=list(self.arcs))


def normalized_residual(hessians: np.ndarray) -> np.ndarray:
    """``det H / (1 + ‖H‖²)`` with the Frobenius norm, for a stack of 2×2 matrices."""
    H = np.asarray(hessians, dtype=float).reshape(-1, 2, 2)
    det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0]
    return det / (1.0 + np.sum(H * H, axis=(1, 2)))


def field_singularities(field_: object) -> np.ndarray:
    if isinstance(field_, Scene):
        return field_.singular_array()
    return field_.singular_points()  # type: ignore[attr-defined]


def field_gradients(field_: object, pts: np.ndarray) -> np.ndarray:
    if isinstance(field_, Scene):
        return evaluate_many(field_, pts).gradients
    return field_.gradients(pts)  # type: ignore[attr-defined]


def pde_residual(field_: object, p: Point2 | Sequence[float], h: float = 1e-3) -> float:
    """Normalized residual of ``u_xx u_yy − u_xy²`` at ``p``.

    Exact scenes use the closed-form Hessian; grids use central differences with step ``h``.

    Raises:
        TooCloseToSingularity: If ``p`` is within ``2h`` of a singular point.
    """
    q = Point2.of(p).as_array()
    sing = field_singularities(field_)
    if len(sing) and float(np.min(np.linalg.norm(sing - q, axis=1))) <= 2 * h:
        raise TooCloseToSingularity(f"({q[0]}, {q[1]}) within {2 * h} of a singular point")
    if isinstance(field_, Scene):
        H = evaluate_many(field_, q[None, :]).hessians
        return float(normalized_residual(H)[0])
    return float(field_.residual_at(q, h))  # type: ignore[attr-defined]


def kernel_directions(H: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kernel direction of each (rank-1) Hessian, its dominant and its minor eigenvalue."""
    w, V = np.linalg.eigh(H)
    major = np.argmax(np.abs(w), axis=1)
    idx = np.arange(len(H))
    return rot90(V[idx, :, major]), w[idx, major], w[idx, 1 - major]


def trace_many(
    scene: Scene, seeds: np.ndarray, config: MongeForgeConfig | None = None
) -> list[Ruling | None]:
    """Trace the ruling through every seed; umbilic seeds give ``None``."""
    config = config or MongeForgeConfig()
    seeds = as_points(seeds)
    if len(seeds) == 0:
        return []
    threads = config.thread_count
    ev = evaluate_many(scene, seeds, threads)
    good = np.all(np.isfinite(ev.hessians.reshape(-1, 4)), axis=1)
    H = np.where(good[:, None, None], ev.hessians, 0.0)
    k, lam, minor = kernel_directions(H)
    umbilic = ~good | (np.abs(lam) <= UMBILIC_TOL)
    full_rank = np.abs(minor) > config.rank_eps_exact * np.maximum(np.abs(lam), scene.scale)
    g0 = ev.gradients

    sing = scene.singular_array()
    scale, eps = scene.scale, scene.eps
    reach = 100.0 * scale + np.linalg.norm(seeds - scene.center, axis=1)
    near = np.concatenate(
        [
            np.arange(1, SAMPLES_PER_SIDE + 1) / (SAMPLES_PER_SIDE + 1),
            1.0 - 2.0 ** -np.arange(1, APPROACH_SAMPLES + 1),
        ]
    )
    far = np.geomspace(1e-4, 1.0, SAMPLES_PER_SIDE + APPROACH_SAMPLES)
    n = len(seeds)

    hits, params, dirs = [], [], []
    for sign in (1.0, -1.0):
        d = sign * k
        t_hit = np.full(n, np.inf)
        hit_id = np.full(n, -1)
        if len(sing):
            rel = sing[None, :, :] - seeds[:, None, :]
            t = np.einsum("nmk,nk->nm", rel, d)
            perp = np.abs(d[:, None, 0] * rel[:, :, 1] - d[:, None, 1] * rel[:, :, 0])
            on_ray = (t > eps) & (perp <= 1e-7 * np.maximum(scale, t))
            t_masked = np.where(on_ray, t, np.inf)
            hit_id = np.argmin(t_masked, axis=1)
            t_hit = t_masked[np.arange(n), hit_id]
            hit_id = np.where(np.isfinite(t_hit), hit_id, -1)
        ts = np.where(
            np.isfinite(t_hit)[:, None],
            np.nan_to_num(t_hit, posinf=0.0)[:, None] * near,
            reach[:, None] * far,
        )
        hits.append(hit_id)
        params.append(ts)
        dirs.append(d)

    L = params[0].shape[1]
    pts = np.concatenate(
        [seeds[:, None, :] + params[s][:, :, None] * dirs[s][:, None, :] for s in range(2)], axis=1
    ).reshape(-1, 2)
    grads = evaluate_many(scene, pts, threads).gradients.reshape(n, 2 * L, 2)
    scale_g = 1.0 + np.linalg.norm(g0, axis=1)
    dev = np.linalg.norm(grads - g0[:, None, :], axis=2) / scale_g[:, None]
    broken = ~(dev <= RULING_GRADIENT_TOL)

    rulings: list[Ruling | None] = []
    for i in range(n):
        if umbilic[i]:
            rulings.append(None)
            continue
        grad = (float(g0[i, 0]), float(g0[i, 1]))
        seed = (float(seeds[i, 0]), float(seeds[i, 1]))
        if full_rank[i]:
            here = Point2.of(seeds[i])
            rulings.append(
                Ruling(
                    Segment(here, here),
                    grad,
                    valid=False,
                    reason="Hessian has full rank",
                    seed=seed,
                )
            )
            continue
        ends: list[int | str] = []
        last_good = []
        for s in range(2):
            bad = np.flatnonzero(broken[i, s * L : (s + 1) * L])
            if bad.size:
                ends.append("interior")
                stop = params[s][i, bad[0] - 1] if bad[0] > 0 else 0.0
                last_good.append(seeds[i] + stop * dirs[s][i])
            elif hits[s][i] >= 0:
                ends.append(int(hits[s][i]))
                last_good.append(sing[hits[s][i]])
            else:
                ends.append("unbounded")
                last_good.append(None)
        rulings.append(assemble_ruling(seeds[i], k[i], ends, last_good, sing, grad, seed))
    return rulings


def assemble_ruling(
    p: np.ndarray,
    k: np.ndarray,
    ends: list[int | str],
    last_good: list[np.ndarray | None],
    sing: np.ndarray,
    grad: tuple[float, float],
    seed: tuple[float, float],
) -> Ruling:
    if "interior" in ends:
        a = last_good[0] if last_good[0] is not None else p
        b = last_good[1] if last_good[1] is not None else p
        return Ruling(
            Segment(Point2.of(a), Point2.of(b)),
            grad,
            tuple(e for e in ends if isinstance(e, int)),
            valid=False,
            reason="ruling terminates inside the smooth region",
            seed=seed,
        )
    if ends == ["unbounded", "unbounded"]:
        return Ruling(Line.through(p, math.atan2(k[1], k[0])), grad, (), seed=seed)
    if "unbounded" in ends:
        s = 0 if ends[0] != "unbounded" else 1
        j = int(ends[s])  # type: ignore[arg-type]
        outward = k if s == 1 else -k
        return Ruling(Ray(Point2.of(sing[j]), Direction.of_vector(outward)), grad, (j,), seed=seed)
    j0, j1 = int(ends[0]), int(ends[1])  # type: ignore[arg-type]
    return Ruling(
        Segment(Point2.of(sing[j0]), Point2.of(sing[j1])),
        grad,
        (j0, j1),
        valid=False,
        reason="ruling is a segment between singular points",
        seed=seed,
    )


def trace_ruling(
    field_: object, p: Point2 | Sequence[float], config: MongeForgeConfig | None = None
) -> Ruling:
    """Ruling through ``p``: the Hessian kernel line, extended while the gradient is constant.

    Raises:
        UmbilicPoint: If the Hessian vanishes at ``p``.
    """
    q = Point2.of(p).as_array()
    if not isinstance(field_, Scene):
        from .inference import trace_grid_ruling

        return trace_grid_ruling(field_, q, config)  # type: ignore[arg-type]
    ruling = trace_many(field_, q[None, :], config)[0]
    if ruling is None:
        raise UmbilicPoint(f"Hessian vanishes at ({q[0]}, {q[1]})")
    return ruling


def ruling_seeds(
    scene: Scene, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, list[float]]:
    """Seeds in every non-umbilic piece plus random points, and the fan step per singularity."""
    scale = scene.scale
    steps = [0.0] * len(scene.singularities)
    seeds: list[np.ndarray] = []
    for piece in scene.pieces:
        if piece.is_umbilic():
            continue
        frac = (np.arange(count) + 0.5) / count
        if isinstance(piece, ConicalPiece):
            theta = piece.sector.theta_b + piece.sector.width * frac
            pts = piece.vertex.as_array() + scale * np.stack([np.cos(theta), np.sin(theta)], axis=1)
            kappa = piece.profile.kappa(piece.profile_angles(pts))
            for j, s in enumerate(scene.singularities):
                if piece.vertex.distance(s) <= scene.eps:
                    steps[j] = max(steps[j], piece.sector.width / count)
        elif isinstance(piece, CylindricalPiece):
            lo, hi = piece.strip.c_lo, piece.strip.c_hi
            mid = float(scene.center @ piece.e1)
            if math.isfinite(lo) and math.isfinite(hi):
                x = lo + (hi - lo) * frac
            elif math.isfinite(hi):
                x = hi - 2.0 * scale * frac
            elif math.isfinite(lo):
                x = lo + 2.0 * scale * frac
            else:
                x = mid + 4.0 * scale * (frac - 0.5)
            pts = x[:, None] * piece.e1 + float(scene.center @ piece.e2) * piece.e2
            kappa = piece.profile.kappa(x)
        else:
            continue
        kappa = np.abs(kappa)
        seeds.append(pts[kappa > 1e-9 * max(float(np.max(kappa)), 1e-300)])
    extra = scene.center + scale * rng.uniform(-3.0, 3.0, size=(2 * count, 2))
    if len(scene.singularities):
        dist = np.min(
            np.linalg.norm(extra[:, None, :] - scene.singular_array()[None, :, :], axis=2), axis=1
        )
        extra = extra[dist > 1e-3 * scale]
    _, on_interface = locate_many(scene, extra)
    seeds.append(extra[~on_interface])
    steps = [s if s > 0 else TWO_PI / count for s in steps]
    return np.vstack(seeds), steps


def _arcs_from_angles(angles: np.ndarray, step: float) -> tuple[tuple[float, float], ...]:
    if len(angles) == 0:
        return ()
    a = np.sort(np.mod(angles, TWO_PI))
    gaps = np.diff(np.append(a, a[0] + TWO_PI))
    big = np.flatnonzero(gaps > GAP_FACTOR * step)
    if big.size == 0:
        return ((0.0, TWO_PI),)
    pad = 1e-3 * step
    arcs = []
    n = len(a)
    for idx, end in enumerate(big):
        start = (big[idx - 1] + 1) % n
        theta_s, theta_e = a[start], a[end]
        if end < start:
            theta_e += TWO_PI
        lo = theta_s - pad
        shift = math.floor(lo / TWO_PI) * TWO_PI
        arcs.append((float(lo - shift), float(theta_e + pad - shift)))
    return tuple(sorted(arcs))


def build_fans(
    rulings: Sequence[Ruling | None],
    singularities: Sequence[Point2] | np.ndarray,
    step: float | Sequence[float] = TWO_PI / 48,
) -> list[DirectionFan]:
    """Group half-line rulings by their singular end point into arcs of directions.

    Angles closer than ``2.5·step`` belong to one arc; arcs span the observed directions
    (slightly padded so that a single direction still has positive width).
    """
    count = len(as_points(singularities)) if len(singularities) else 0
    steps = [step] * count if isinstance(step, (int, float)) else list(step)
    angles: list[list[float]] = [[] for _ in range(count)]
    for ruling in rulings:
        if ruling is None or not ruling.valid or not isinstance(ruling.geometry, Ray):
            continue
        if len(ruling.endpoints) == 1 and 0 <= ruling.endpoints[0] < count:
            angles[ruling.endpoints[0]].append(ruling.geometry.dir.theta)
    return [
        DirectionFan(i, _arcs_from_angles(np.array(angles[i]), steps[i])) for i in range(count)
    ]


def _arcs_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    wa, wb = a[1] - a[0], b[1] - b[0]
    return (b[0] - a[0]) % TWO_PI < wa or (a[0] - b[0]) % TWO_PI < wb


def separate_fans(fan_j: DirectionFan, fan_k: DirectionFan) -> bool:
    """True iff two disjoint open arcs hold all arcs of ``fan_j`` and of ``fan_k`` respectively."""
    if fan_j.empty or fan_k.empty:
        return True
    for a in fan_j.arcs:
        for b in fan_k.arcs:
            if _arcs_overlap(a, b):
                return False
    tagged = sorted(
        [(a[0] % TWO_PI, 0) for a in fan_j.arcs] + [(b[0] % TWO_PI, 1) for b in fan_k.arcs]
    )
    labels = [t for _, t in tagged]
    changes = sum(labels[i] != labels[i - 1] for i in range(len(labels)))
    return changes == 2


def strip_from_rulings(
    rulings: Sequence[Ruling | None], singular_pts: np.ndarray, eps: float
) -> tuple[Strip | None, list[str]]:
    """Maximal strip around the full-line rulings, bounded by the nearest singular projections."""
    lines = [
        r.geometry
        for r in rulings
        if r is not None and r.valid and isinstance(r.geometry, Line)
    ]
    if not lines:
        return None, []
    theta = lines[0].normal.theta % math.pi
    n = Direction(theta).vector
    problems = []
    if any(abs(math.sin(line.normal.theta - theta)) > 1e-6 for line in lines):  # type: ignore
        problems.append("full-line rulings are not parallel")
    offsets = np.array([float(n @ line.foot) for line in lines])  # type: ignore[union-attr]
    lo, hi = float(offsets.min()), float(offsets.max())
    proj = singular_pts @ n if len(singular_pts) else np.zeros(0)
    below, above = proj[proj <= lo + eps], proj[proj >= hi - eps]
    c_lo = float(below.max()) if below.size else -math.inf
    c_hi = float(above.min()) if above.size else math.inf
    inside = proj[(proj > lo + eps) & (proj < hi - eps)]
    if inside.size or not c_lo < c_hi:
        problems.append("a singular point lies between full-line rulings")
        return None, problems
    return Strip(Direction(theta), c_lo, c_hi), problems


def strip_report(strip: Strip | None) -> StripReport | None:
    if strip is None:
        return None
    return StripReport(
        normal_theta=strip.normal.theta,
        c_lo=strip.c_lo if math.isfinite(strip.c_lo) else None,
        c_hi=strip.c_hi if math.isfinite(strip.c_hi) else None,
    )


def max_strip(
    field_: object,
    rulings: Sequence[Ruling | None] | None = None,
    config: MongeForgeConfig | None = None,
) -> Strip | None:
    """Maximal strip of parallel full-line rulings, or ``None`` when no ruling is a full line."""
    config = config or MongeForgeConfig()
    if rulings is None:
        if not isinstance(field_, Scene):
            from .inference import infer_rulings

            rulings = infer_rulings(field_, config)  # type: ignore[arg-type]
        else:
            seeds, _ = ruling_seeds(field_, config.trace_seeds, np.random.default_rng(config.seed))
            rulings = trace_many(field_, seeds, config)
    sing = field_singularities(field_)
    eps = field_.eps if isinstance(field_, Scene) else field_.spacing  # type: ignore[attr-defined]
    strip, _ = strip_from_rulings(rulings, sing, eps)
    return strip


def default_radii(field_: object, index: int) -> list[float]:
    sing = field_singularities(field_)
    r0 = 1.0
    if len(sing) > 1:
        others = np.delete(sing, index, axis=0)
        r0 = min(r0, 0.45 * float(np.min(np.linalg.norm(others - sing[index], axis=1))))
    return [r0 * 10.0**-j for j in range(4)]


def gradient_bound(
    field_: object,
    singularity: int,
    radii: Sequence[float] | None = None,
    samples: int = 256,
    slack: float = 1e-9,
) -> GradientBoundReport:
    """Sup of ``‖∇u‖`` over circles about a singular point, for decreasing radii.

    Each circle is sampled at ``samples`` angles and the best sample is refined by bounded
    scalar maximization. ``bounded`` holds when the last sup does not exceed the first by more
    than ``slack`` times the field scale.
    """
    sing = field_singularities(field_)
    center = sing[singularity]
    radii = list(radii) if radii is not None else default_radii(field_, singularity)
    scale = field_.scale if isinstance(field_, Scene) else 1.0  # type: ignore[attr-defined]
    step = TWO_PI / samples
    theta = step * np.arange(samples)
    sups = []
    for r in radii:
        pts = center + r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        norms = np.linalg.norm(field_gradients(field_, pts), axis=1)
        if not np.any(np.isfinite(norms)):
            sups.append(math.inf)
            continue
        j = int(np.nanargmax(norms))

        def negative_norm(t: float, r: float = r) -> float:
            q = center + r * np.array([[math.cos(t), math.sin(t)]])
            value = float(np.linalg.norm(field_gradients(field_, q)[0]))
            return -value if math.isfinite(value) else 0.0

        refined = minimize_scalar(
            negative_norm,
            bounds=(theta[j] - step, theta[j] + step),
            method="bounded",
            options={"xatol": 1e-10},
        )
        sups.append(max(float(norms[j]), -float(refined.fun)))
    bounded = all(math.isfinite(s) for s in sups) and sups[-1] <= sups[0] + slack * scale
    return GradientBoundReport(
        singularity=singularity, radii=[float(r) for r in radii], sups=sups, bounded=bounded
    )


def admissible(scene: Scene) -> bool:
    """False iff some umbilic region contains an unbounded cell with interior (a half-strip)."""
    for piece in scene.pieces:
        if isinstance(piece, LinearPiece):
            if not piece.region.is_empty(scene.eps) and piece.region.is_unbounded():
                return False
        elif piece.is_umbilic():
            return False
    return True


def _interface_normal(geom: Geometry) -> np.ndarray:
    if isinstance(geom, Line):
        return geom.normal.vector
    if isinstance(geom, Ray):
        return rot90(geom.dir.vector)
    d = geom.b.as_array() - geom.a.as_array()
    return rot90(d / np.linalg.norm(d))


@dataclass
class Evidence:
    """What the decision tree needs, from an exact scene or a grid."""

    singular_points: np.ndarray
    full_lines: bool
    strip: Strip | None
    admissible: bool | None
    sectors: list[list[tuple[float, float]]]
    eps: float
    angle_tol: float = 1e-9
    notes: list[str] = field(default_factory=list)


def polyhedral_structure(evidence: Evidence) -> tuple[bool, list[tuple[float, float]], str]:
    """Hull vertices equal the singular points and every cone sector is an exterior sector."""
    pts = evidence.singular_points
    try:
        hull = convex_hull(pts)
    except DegenerateHull:
        return False, [], "singular points are collinear"
    hull_pts = hull.as_array()
    if len(hull_pts) != len(pts):
        return False, [], "some singular point is not a hull vertex"
    for j, vertex in enumerate(hull_pts):
        dist = np.linalg.norm(pts - vertex, axis=1)
        i = int(np.argmin(dist))
        if dist[i] > evidence.eps:
            return False, [], f"hull vertex {j} is not a singular point"
        arcs = evidence.sectors[i]
        expected = exterior_sector(hull, j)
        if len(arcs) != 1:
            return False, [], f"singular point {i} carries {len(arcs)} sectors"
        start, end = arcs[0]
        if (
            abs(math.remainder(start - expected.theta_b, TWO_PI)) > evidence.angle_tol
            or abs((end - start) - expected.width) > evidence.angle_tol
        ):
            return False, [], f"sector at singular point {i} is not the exterior sector"
    return True, [(float(x), float(y)) for x, y in hull_pts], ""


def decide(evidence: Evidence) -> Classification:
    """Decision tree of the case taxonomy."""
    n = len(evidence.singular_points)
    if n == 0:
        return Classification(label="Cylinder")
    if n == 1:
        label = "HalfCylinderHalfCone" if evidence.full_lines else "FullCone"
        return Classification(label=label)
    if n == 2:
        if not evidence.full_lines or evidence.strip is None:
            return Classification(label="TwoSingular", variant=4)
        strip = evidence.strip
        if strip.is_bounded:
            return Classification(label="TwoSingular", variant=1)
        if strip.is_plane:
            return Classification(label="NonAdmissibleOther")
        bound = strip.c_hi if math.isfinite(strip.c_hi) else strip.c_lo
        on_line = np.abs(evidence.singular_points @ strip.normal.vector - bound) <= evidence.eps
        return Classification(label="TwoSingular", variant=2 if bool(np.all(on_line)) else 3)
    if evidence.admissible is False:
        return Classification(label="NonAdmissibleOther")
    ok, polygon, reason = polyhedral_structure(evidence)
    if ok:
        return Classification(label="Polyhedral", polygon=polygon)
    if evidence.admissible:
        raise StructureViolation(f"Admissible with {n} singular points but {reason}")
    return Classification(label="NonAdmissibleOther")


def scene_evidence(scene: Scene, report: VerificationReport) -> Evidence:
    sectors: list[list[tuple[float, float]]] = []
    for k in range(len(scene.singularities)):
        arcs = []
        for c in scene.conical_at(k):
            piece = scene.pieces[c]
            assert isinstance(piece, ConicalPiece)
            arcs.append((piece.sector.theta_b, piece.sector.theta_b + piece.sector.width))
        sectors.append(arcs)
    strip = None
    if report.strip is not None:
        lo, hi = report.strip.bounds
        strip = Strip(Direction(report.strip.normal_theta), lo, hi)
    # a flat cylindrical piece has no traceable rulings but is still ruled by full lines
    has_cylinder = any(isinstance(piece, CylindricalPiece) for piece in scene.pieces)
    return Evidence(
        singular_points=scene.singular_array(),
        full_lines=report.full_lines > 0 or has_cylinder,
        strip=strip,
        admissible=admissible(scene) if report.admissible is None else report.admissible,
        sectors=sectors,
        eps=max(10 * scene.eps, 1e-9),
    )


def classify(scene: Scene, report: VerificationReport) -> Classification:
    """Case label of a verified scene.

    Raises:
        Unverified: If ``report`` did not pass.
        StructureViolation: Admissible, three or more singular points, not polyhedral.
    """
    if not report.passed:
        raise Unverified("Refusing to classify a field that failed verification")
    result = decide(scene_evidence(scene, report))
    logger.debug(f"Classified scene as {result}")
    return result


def _vertex_distance(piece: object, pts: np.ndarray) -> np.ndarray:
    """Distance to the cone vertex, ``inf`` off conical pieces."""
    if isinstance(piece, ConicalPiece):
        return np.linalg.norm(pts - piece.vertex.as_array(), axis=1)
    return np.full(len(pts), np.inf)


def _interface_jumps(
    scene: Scene, config: MongeForgeConfig
) -> tuple[float, float, float, float]:
    """Relative value, gradient and Hessian jumps and the transverse curvature density.

    Cone Hessians grow like ``1/ρ`` towards the vertex, so Hessian quantities are weighed by
    ``ρ`` there: the transverse check compares ``κ = ρ·n·H·n`` and the Hessian jump is taken
    relative to ``min(ρ, scale)/scale``.
    """
    sing = scene.singular_array()
    scale = scene.scale
    value_jump = grad_jump = hess_jump = transverse = 0.0
    for face in scene.interfaces:
        pts = sample_geometry(face.geometry, config.interface_samples, 4.0 * scene.scale)
        if len(sing):
            dist = np.min(np.linalg.norm(pts[:, None, :] - sing[None, :, :], axis=2), axis=1)
            pts = pts[dist > 1e-6 * scene.scale]
        if len(pts) == 0:
            continue
        va, ga, Ha = scene.pieces[face.a].evaluate(pts)
        vb, gb, Hb = scene.pieces[face.b].evaluate(pts)
        n = _interface_normal(face.geometry)
        ra = _vertex_distance(scene.pieces[face.a], pts)
        rb = _vertex_distance(scene.pieces[face.b], pts)
        weight = np.minimum(np.minimum(ra, rb), scale) / scale
        mag_v = 1.0 + np.maximum(np.abs(va), np.abs(vb))
        mag_g = 1.0 + np.linalg.norm(ga, axis=1)
        mag_h = 1.0 + weight * np.linalg.norm(Ha.reshape(-1, 4), axis=1)
        value_jump = max(value_jump, float(np.max(np.abs(va - vb) / mag_v)))
        grad_jump = max(grad_jump, float(np.max(np.linalg.norm(ga - gb, axis=1) / mag_g)))
        hess_jump = max(
            hess_jump,
            float(np.max(weight * np.linalg.norm((Ha - Hb).reshape(-1, 4), axis=1) / mag_h)),
        )
        ka = np.abs(np.einsum("i,nij,j->n", n, Ha, n)) * np.where(np.isfinite(ra), ra, 1.0)
        kb = np.abs(np.einsum("i,nij,j->n", n, Hb, n)) * np.where(np.isfinite(rb), rb, 1.0)
        tn = np.maximum(ka, kb)
        transverse = max(transverse, float(np.max(tn)))
    return value_jump, grad_jump, hess_jump, transverse


def _structure_violations(
    scene: Scene,
    seeds: np.ndarray,
    rulings: Sequence[Ruling | None],
) -> list[str]:
    problems = []
    ids, _ = locate_many(scene, seeds)
    for ruling, piece_id in zip(rulings, ids, strict=True):
        if ruling is None:
            continue
        if not ruling.valid:
            problems.append(f"{ruling.reason} (seed {ruling.seed})")
            continue
        piece = scene.pieces[piece_id]
        if isinstance(piece, ConicalPiece):
            vertex = piece.vertex
            ok = (
                isinstance(ruling.geometry, Ray)
                and ruling.geometry.origin.distance(vertex) <= 1e3 * scene.eps
            )
            if not ok:
                problems.append(f"ruling at seed {ruling.seed} does not leave the cone vertex")
        elif isinstance(piece, CylindricalPiece):
            ok = isinstance(ruling.geometry, Line) and (
                abs(float(cross(ruling.geometry.direction, piece.e2))) <= 1e-9
            )
            if not ok:
                problems.append(f"ruling at seed {ruling.seed} is not parallel to the cylinder")
    return problems


def verify_scene(scene: Scene, config: MongeForgeConfig | None = None) -> VerificationReport:
    """Residual, gluing, gradient-bound and ruling-structure checks of an exact scene."""
    config = config or MongeForgeConfig()
    rng = np.random.default_rng(config.seed)
    scale = scene.scale
    sing = scene.singular_array()

    pts = scene.center + scale * rng.uniform(-4.0, 4.0, size=(config.samples, 2))
    if len(sing):
        dist = np.min(np.linalg.norm(pts[:, None, :] - sing[None, :, :], axis=2), axis=1)
        pts = pts[dist > 1e-6 * scale]
    batch = evaluate_many(scene, pts, config.thread_count)
    max_residual = float(np.max(np.abs(normalized_residual(batch.hessians)), initial=0.0))

    value_jump, grad_jump, hess_jump, transverse = _interface_jumps(scene, config)

    bounds = [
        gradient_bound(scene, k, samples=config.circle_samples, slack=config.gradient_slack)
        for k in range(len(sing))
    ]

    seeds, steps = ruling_seeds(scene, config.trace_seeds, rng)
    rulings = trace_many(scene, seeds, config)
    violations = _structure_violations(scene, seeds, rulings)
    fans = build_fans(rulings, sing, steps)
    for fan in fans:
        if fan.empty:
            violations.append(f"no half-line rulings leave singular point {fan.singularity}")
    for a in range(len(fans)):
        for b in range(a + 1, len(fans)):
            if not separate_fans(fans[a], fans[b]):
                violations.append(f"fans of singular points {a} and {b} are not separable")
    strip, strip_problems = strip_from_rulings(rulings, sing, scene.eps)
    violations.extend(strip_problems)
    full_lines = sum(1 for r in rulings if r is not None and r.valid and r.kind == "line")
    half_lines = sum(1 for r in rulings if r is not None and r.valid and r.kind == "ray")
    if strip is not None:
        for r in rulings:
            if r is not None and r.valid and isinstance(r.geometry, Line):
                if not strip.closure_mask(r.geometry.foot[None, :], scene.eps)[0]:
                    violations.append("a full-line ruling lies outside the maximal strip")
                    break
    is_admissible = admissible(scene)
    if full_lines and is_admissible and len(sing) > 2:
        violations.append("admissible with a full-line ruling and more than two singular points")
    for b in bounds:
        if not b.bounded:
            violations.append(f"gradient grows towards singular point {b.singularity}")

    if max_residual > config.residual_tol:
        violations.append(
            f"residual {max_residual:.3e} exceeds the tolerance {config.residual_tol:.1e}"
        )
    jump = max(value_jump, grad_jump, hess_jump)
    if jump > config.jump_tol:
        violations.append(f"interface jump {jump:.3e} exceeds the tolerance {config.jump_tol:.1e}")
    if transverse > config.transverse_tol:
        violations.append(
            f"transverse curvature {transverse:.3e} on an interface exceeds the tolerance"
            f" {config.transverse_tol:.1e}"
        )
    passed = not violations
    report = VerificationReport(
        source="scene",
        samples=len(pts),
        max_residual=max_residual,
        max_value_jump=value_jump,
        max_grad_jump=grad_jump,
        max_hess_jump=hess_jump,
        max_transverse=transverse,
        singularities=[(s.x, s.y) for s in scene.singularities],
        gradient_bounds=bounds,
        fans=[f.to_report() for f in fans],
        strip=strip_report(strip),
        full_lines=full_lines,
        half_lines=half_lines,
        admissible=is_admissible,
        violations=violations,
        passed=passed,
    )
    logger.info(
        f"Verification {'passed' if passed else 'failed'}: residual {max_residual:.2e},"
        f" jumps {max(value_jump, grad_jump, hess_jump):.2e}, {len(violations)} violations"
    )
    return report
