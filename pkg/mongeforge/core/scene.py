"""Piecewise exact solutions: pieces, scenes, evaluation, gauge shifts and interfaces."""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np

from ..utils.logging import get_logger
from ..utils.parallel import map_batches
from .plane import (
    ConvexCell,
    Edge,
    Geometry,
    Point2,
    Sector,
    SingularPoint,
    Strip,
    as_points,
    geometry_key,
    rot90,
    sample_geometry,
    unit,
)
from .profile import (
    AffineData,
    ConeProfile,
    CylProfile,
    cone_alpha_eval,
    cyl_alpha_eval,
    harmonic_profile,
)

logger = get_logger(__name__)

GEO_EPS = 1e-9
UMBILIC_TOL = 1e-12
TWO_PI = 2.0 * math.pi


class SceneError(Exception):
    """Base exception for scene construction and evaluation."""


class GluingInfeasible(SceneError):
    """Neighboring data cannot be glued C²."""


class BadGeometry(SceneError):
    """Builder parameters describe an impossible configuration."""


class NotSingular(SceneError):
    """A declared singular point would be removable."""


class SceneValidationError(SceneError):
    """A scene invariant failed; ``invariant`` names it."""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


@dataclass(frozen=True)
class ConicalPiece:
    """``u0 + ρ α(θ)`` on an open sector about ``vertex``."""

    vertex: Point2
    sector: Sector
    u0: float
    profile: ConeProfile
    kind: ClassVar[str] = "conical"

    @property
    def region(self) -> Sector:
        return self.sector

    def interior_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        return self.sector.interior_mask(pts, eps)

    def closure_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        return self.sector.closure_mask(pts, eps)

    def edges(self) -> list[Edge]:
        return self.sector.edges()

    def is_umbilic(self) -> bool:
        return self.profile.kappa.is_zero()

    def profile_angles(self, pts: np.ndarray) -> np.ndarray:
        """Polar angles of ``pts`` mapped into the profile range (closure points clamp)."""
        rel = self.sector.relative_angles(pts)
        if self.profile.periodic:
            return rel + self.sector.theta_b
        width = self.profile.width
        over = rel > width
        nearer_start = (TWO_PI - rel) < (rel - width)
        rel = np.where(over & nearer_start, 0.0, np.where(over, width, rel))
        return self.profile.theta_b + rel

    def evaluate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        d = pts - self.vertex.as_array()
        rho = np.linalg.norm(d, axis=1)
        theta = self.profile_angles(pts)
        alpha, dalpha, _ = cone_alpha_eval(self.profile, theta, check=False)
        kappa = self.profile.kappa(theta)
        er = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        et = rot90(er)
        values = self.u0 + rho * alpha
        grads = alpha[:, None] * er + dalpha[:, None] * et
        with np.errstate(divide="ignore", invalid="ignore"):
            hess = (kappa / rho)[:, None, None] * et[:, :, None] * et[:, None, :]
        return values, grads, hess

    def gauge_shifted(self, aff: AffineData) -> "ConicalPiece":
        h, dh = harmonic_profile(aff, self.vertex, self.profile.theta_b)
        profile = self.profile.with_initial(
            self.profile.alpha_b + float(h), self.profile.dalpha_b + float(dh)
        )
        return ConicalPiece(
            self.vertex, self.sector, self.u0 + float(aff(self.vertex.as_array())), profile
        )


@dataclass(frozen=True)
class CylindricalPiece:
    """``base + α(x) + v0 y`` with ``x = p·e1``, ``y = p·e2``, rulings along ``e2``."""

    frame_theta: float
    strip: Strip
    v0: float
    profile: CylProfile
    base: float = 0.0
    kind: ClassVar[str] = "cylindrical"

    @property
    def region(self) -> Strip:
        return self.strip

    @property
    def e1(self) -> np.ndarray:
        return unit(self.frame_theta)

    @property
    def e2(self) -> np.ndarray:
        return rot90(self.e1)

    def interior_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        return self.strip.interior_mask(pts, eps)

    def closure_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        return self.strip.closure_mask(pts, eps)

    def edges(self) -> list[Edge]:
        return self.strip.edges()

    def is_umbilic(self) -> bool:
        return self.profile.kappa.is_zero()

    def evaluate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        e1, e2 = self.e1, self.e2
        x, y = pts @ e1, pts @ e2
        alpha, dalpha, ddalpha = cyl_alpha_eval(self.profile, x, check=False)
        values = self.base + alpha + self.v0 * y
        grads = dalpha[:, None] * e1 + self.v0 * e2
        hess = ddalpha[:, None, None] * np.outer(e1, e1)[None, :, :]
        return values, grads, hess

    def boundary_affine(self, c: float) -> AffineData:
        """Affine function agreeing with the piece to first order along the line ``x = c``."""
        alpha, dalpha, _ = cyl_alpha_eval(self.profile, c, check=False)
        g = float(dalpha) * self.e1 + self.v0 * self.e2
        return AffineData((g[0], g[1]), self.base + float(alpha) - float(dalpha) * c)

    def gauge_shifted(self, aff: AffineData) -> "CylindricalPiece":
        g1, g2 = float(aff.gradient @ self.e1), float(aff.gradient @ self.e2)
        profile = self.profile.with_initial(
            self.profile.alpha_b + g1 * self.profile.x_b, self.profile.dalpha_b + g1
        )
        return CylindricalPiece(
            self.frame_theta, self.strip, self.v0 + g2, profile, self.base + aff.c
        )


@dataclass(frozen=True)
class LinearPiece:
    """Affine function on a closed convex cell."""

    aff: AffineData
    region: ConvexCell
    kind: ClassVar[str] = "linear"

    def interior_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        return self.region.interior_mask(pts, eps)

    def closure_mask(self, pts: np.ndarray, eps: float) -> np.ndarray:
        return self.region.closure_mask(pts, eps)

    def edges(self) -> list[Edge]:
        return self.region.edges()

    def is_umbilic(self) -> bool:
        return True

    def evaluate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = len(pts)
        return (
            self.aff(pts),
            np.broadcast_to(self.aff.gradient, (n, 2)).copy(),
            np.zeros((n, 2, 2)),
        )

    def gauge_shifted(self, aff: AffineData) -> "LinearPiece":
        return LinearPiece(self.aff + aff, self.region)


Piece = ConicalPiece | CylindricalPiece | LinearPiece


@dataclass(frozen=True)
class Interface:
    """Shared boundary between pieces ``a < b``."""

    a: int
    b: int
    geometry: Geometry


@dataclass(frozen=True)
class Scene:
    pieces: tuple[Piece, ...]
    singularities: tuple[Point2, ...] = ()
    interfaces: tuple[Interface, ...] = ()
    geo_eps: float = GEO_EPS

    @cached_property
    def scale(self) -> float:
        """``max(1, diameter of the singular set)``."""
        if len(self.singularities) < 2:
            return 1.0
        pts = as_points(self.singularities)
        diam = float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)))
        return max(1.0, diam)

    @property
    def eps(self) -> float:
        return self.geo_eps * self.scale

    @cached_property
    def center(self) -> np.ndarray:
        if not self.singularities:
            return np.zeros(2)
        return as_points(self.singularities).mean(axis=0)

    def singular_array(self) -> np.ndarray:
        return as_points(self.singularities) if self.singularities else np.zeros((0, 2))

    def conical_at(self, index: int) -> list[int]:
        """Ids of conical pieces whose vertex is singularity ``index``."""
        s = self.singularities[index]
        return [
            i
            for i, piece in enumerate(self.pieces)
            if isinstance(piece, ConicalPiece) and piece.vertex.distance(s) <= self.eps
        ]


@dataclass
class EvalResult:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    piece_id: int
    umbilic: bool
    on_interface: bool = False


@dataclass
class EvalBatch:
    values: np.ndarray
    gradients: np.ndarray
    hessians: np.ndarray
    piece_ids: np.ndarray
    on_interface: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __len__(self) -> int:
        return len(self.values)


def locate_many(scene: Scene, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lowest piece id whose closed region holds each point, plus the shared-boundary flag."""
    pts = as_points(pts)
    ids = np.full(len(pts), -1, dtype=int)
    counts = np.zeros(len(pts), dtype=int)
    for i, piece in enumerate(scene.pieces):
        mask = piece.closure_mask(pts, scene.eps)
        ids = np.where((ids < 0) & mask, i, ids)
        counts += mask
    missing = ids < 0
    if np.any(missing):
        # widen once for points that rounding pushed between two closures
        for i, piece in enumerate(scene.pieces):
            mask = missing & piece.closure_mask(pts, 100 * scene.eps)
            ids = np.where((ids < 0) & mask, i, ids)
        if np.any(ids < 0):
            bad = pts[ids < 0][0]
            raise SceneError(f"Point ({bad[0]}, {bad[1]}) lies in no piece")
    return ids, counts >= 2


def locate(scene: Scene, p: Point2 | Sequence[float]) -> tuple[int, bool]:
    """Piece id containing ``p`` (lowest id on shared boundaries) and the on-interface flag.

    Raises:
        SingularPoint: If ``p`` equals a singular point.
    """
    p = Point2.of(p)
    if any(p == s for s in scene.singularities):
        raise SingularPoint(f"({p.x}, {p.y}) is a singular point")
    ids, on = locate_many(scene, p.as_array()[None, :])
    return int(ids[0]), bool(on[0])


def _evaluate_block(scene: Scene, pts: np.ndarray) -> np.ndarray:
    n = len(pts)
    out = np.full((n, 9), np.nan)
    if n == 0:
        return out
    sing = scene.singular_array()
    singular = np.zeros(n, dtype=bool)
    for s in sing:
        singular |= (pts[:, 0] == s[0]) & (pts[:, 1] == s[1])
    ids, on = locate_many(scene, pts)
    ids = np.where(singular, -1, ids)
    out[:, 7] = ids
    out[:, 8] = on
    for i, piece in enumerate(scene.pieces):
        sel = ids == i
        if not np.any(sel):
            continue
        values, grads, hess = piece.evaluate(pts[sel])
        out[sel, 0] = values
        out[sel, 1:3] = grads
        out[sel, 3:7] = hess.reshape(-1, 4)
    return out


def evaluate_many(scene: Scene, pts: np.ndarray, threads: int = 1) -> EvalBatch:
    """Vectorized evaluation; rows at singular points are NaN with piece id -1."""
    pts = as_points(pts)
    block = map_batches(lambda chunk: _evaluate_block(scene, chunk), pts, threads=threads)
    return EvalBatch(
        values=block[:, 0],
        gradients=block[:, 1:3],
        hessians=block[:, 3:7].reshape(-1, 2, 2),
        piece_ids=block[:, 7].astype(int),
        on_interface=block[:, 8].astype(bool),
    )


def evaluate(scene: Scene, p: Point2 | Sequence[float]) -> EvalResult:
    """Value, gradient and Hessian at ``p`` in closed form.

    Raises:
        SingularPoint: If ``p`` equals a singular point.
    """
    p = Point2.of(p)
    if any(p == s for s in scene.singularities):
        raise SingularPoint(f"({p.x}, {p.y}) is a singular point")
    batch = evaluate_many(scene, p.as_array()[None, :])
    hessian = batch.hessians[0]
    return EvalResult(
        value=float(batch.values[0]),
        gradient=batch.gradients[0],
        hessian=hessian,
        piece_id=int(batch.piece_ids[0]),
        umbilic=bool(np.max(np.abs(hessian)) <= UMBILIC_TOL),
        on_interface=bool(batch.on_interface[0]),
    )


def gauge_shift(scene: Scene, aff: AffineData) -> Scene:
    """Scene whose values are the old ones plus ``aff``; geometry untouched."""
    return Scene(
        pieces=tuple(piece.gauge_shifted(aff) for piece in scene.pieces),
        singularities=scene.singularities,
        interfaces=scene.interfaces,
        geo_eps=scene.geo_eps,
    )


def _first_interior(
    pieces: Sequence[Piece], q: np.ndarray, eps: float, skip: int
) -> int | None:
    for k, piece in enumerate(pieces):
        if k != skip and piece.interior_mask(q, eps)[0]:
            return k
    for k, piece in enumerate(pieces):
        if k != skip and piece.closure_mask(q, eps)[0]:
            return k
    return None


def derive_interfaces(
    pieces: Sequence[Piece],
    singularities: Sequence[Point2],
    eps: float,
    scale: float,
) -> tuple[Interface, ...]:
    """Interfaces read off the piece boundaries.

    Every boundary edge is split at the projections of all singular points and finite edge
    corners lying on it; each sub-interval is probed on the far side to find the neighbor,
    and runs with the same neighbor are merged into one Line, Ray or Segment.
    """
    all_edges = [piece.edges() for piece in pieces]
    anchors = [s.as_array() for s in singularities]
    for edges in all_edges:
        for e in edges:
            anchors.extend(e.point(t) for t in (e.t0, e.t1) if math.isfinite(t))
    anchor_arr = np.array(anchors) if anchors else np.zeros((0, 2))
    delta = 1e-6 * scale

    found: dict[tuple, Interface] = {}
    for i, edges in enumerate(all_edges):
        for edge in edges:
            if len(anchor_arr):
                on_line = edge.line_distance(anchor_arr) <= eps
                ts = edge.project(anchor_arr[on_line])
                ts = ts[(ts > edge.t0 + eps) & (ts < edge.t1 - eps)]
            else:
                ts = np.zeros(0)
            breaks = [edge.t0]
            for t in np.sort(ts):
                if t - breaks[-1] > eps:
                    breaks.append(float(t))
            breaks.append(edge.t1)
            normal = rot90(np.asarray(edge.direction))
            runs: list[list] = []
            for lo, hi in zip(breaks[:-1], breaks[1:], strict=True):
                if math.isfinite(lo) and math.isfinite(hi):
                    if hi - lo <= eps:
                        continue
                    t_mid = 0.5 * (lo + hi)
                elif math.isfinite(lo):
                    t_mid = lo + scale
                elif math.isfinite(hi):
                    t_mid = hi - scale
                else:
                    t_mid = 0.0
                m = edge.point(t_mid)
                sides = [m + delta * normal, m - delta * normal]
                inside = [bool(pieces[i].interior_mask(q[None, :], eps)[0]) for q in sides]
                if inside[0] == inside[1]:
                    continue
                far = sides[1] if inside[0] else sides[0]
                j = _first_interior(pieces, far[None, :], eps, skip=i)
                if j is None:
                    continue
                if runs and runs[-1][0] == j and lo - runs[-1][2] <= eps:
                    runs[-1][2] = hi
                else:
                    runs.append([j, lo, hi])
            for j, lo, hi in runs:
                geom = edge.to_geometry(lo, hi)
                a, b = min(i, j), max(i, j)
                key = (a, b, geometry_key(geom, digits=7))
                found.setdefault(key, Interface(a, b, geom))
    return tuple(found[k] for k in sorted(found))


def validate_scene(scene: Scene, samples: int = 2000, seed: int = 0) -> None:
    """Check the scene invariants.

    Raises:
        SceneValidationError: Naming the first invariant that fails.
    """
    eps, scale = scene.eps, scene.scale
    for i, piece in enumerate(scene.pieces):
        if isinstance(piece, ConicalPiece):
            prof, sector = piece.profile, piece.sector
            if prof.periodic != sector.is_full:
                raise SceneValidationError(
                    "piece_shape", f"piece {i}: periodic profile needs a full sector"
                )
            if not prof.periodic and (
                abs(prof.width - sector.width) > 1e-12 * TWO_PI
                or abs(math.remainder(prof.theta_b - sector.theta_b, TWO_PI)) > 1e-12
            ):
                raise SceneValidationError(
                    "piece_shape", f"piece {i}: sector and profile ranges differ"
                )
        elif isinstance(piece, CylindricalPiece):
            if abs(math.sin(piece.frame_theta - piece.strip.normal.theta)) > 1e-12:
                raise SceneValidationError(
                    "piece_shape", f"piece {i}: rulings not parallel to the strip"
                )
        elif piece.region.is_empty(eps):
            raise SceneValidationError("piece_shape", f"piece {i}: linear cell has no interior")

    rng = np.random.default_rng(seed)
    pts = scene.center + scale * rng.uniform(-4.0, 4.0, size=(samples, 2))
    far = scene.center + 100.0 * scale * rng.normal(size=(samples // 10, 2))
    pts = np.vstack([pts, far])
    interior = np.zeros(len(pts), dtype=int)
    closure = np.zeros(len(pts), dtype=int)
    for piece in scene.pieces:
        interior += piece.interior_mask(pts, eps)
        closure += piece.closure_mask(pts, eps)
    if np.any(interior > 1):
        bad = pts[interior > 1][0]
        raise SceneValidationError("disjoint", f"pieces overlap near ({bad[0]:.6g}, {bad[1]:.6g})")
    if np.any(closure == 0):
        bad = pts[closure == 0][0]
        raise SceneValidationError("cover", f"no piece covers ({bad[0]:.6g}, {bad[1]:.6g})")

    for face in scene.interfaces:
        if not (0 <= face.a < len(scene.pieces) and 0 <= face.b < len(scene.pieces)):
            raise SceneValidationError("interface", f"unknown pieces ({face.a}, {face.b})")
        probe = sample_geometry(face.geometry, 9, 2.0 * scale)
        for k in (face.a, face.b):
            if not np.all(scene.pieces[k].closure_mask(probe, 10 * eps)):
                raise SceneValidationError(
                    "interface", f"interface ({face.a}, {face.b}) leaves piece {k}"
                )
        pa, pb = scene.pieces[face.a], scene.pieces[face.b]
        if isinstance(pa, LinearPiece) and isinstance(pb, LinearPiece):
            tol = 1e-12 * (1.0 + float(np.max(np.abs(pa.aff.gradient))) + abs(pa.aff.c))
            if not pa.aff.close_to(pb.aff, tol):
                raise SceneValidationError(
                    "linear_neighbors", f"linear pieces {face.a}, {face.b} differ"
                )

    for k, s in enumerate(scene.singularities):
        cones = scene.conical_at(k)
        if not cones:
            raise SceneValidationError("singularity_vertex", f"singularity {k} has no cone")
        if all(scene.pieces[c].is_umbilic() for c in cones):
            raise SceneValidationError(
                "singularity_genuine", f"singularity {k} at ({s.x}, {s.y}) is removable"
            )


def assemble_scene(
    pieces: Sequence[Piece], singularities: Sequence[Point2], geo_eps: float = GEO_EPS
) -> Scene:
    """Derive interfaces, validate and return the scene."""
    draft = Scene(tuple(pieces), tuple(singularities), (), geo_eps)
    interfaces = derive_interfaces(draft.pieces, draft.singularities, draft.eps, draft.scale)
    scene = Scene(draft.pieces, draft.singularities, interfaces, geo_eps)
    validate_scene(scene)
    logger.debug(
        f"Assembled scene: {len(scene.pieces)} pieces, {len(interfaces)} interfaces,"
        f" {len(scene.singularities)} singular points"
    )
    return scene
