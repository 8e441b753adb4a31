"""OBJ surface meshes, SVG ruling figures and CSV grids."""

import io
import math
import xml.etree.ElementTree as ET
from collections.abc import Sequence

import numpy as np

from ..core.analyze import ruling_seeds, trace_many
from ..core.inference import GridField
from ..core.plane import (
    Direction,
    Geometry,
    Line,
    Ray,
    Strip,
    as_points,
    geometry_key,
)
from ..core.scene import ConicalPiece, CylindricalPiece, Scene
from ..models.config import ExportConfig, MongeForgeConfig
from ..models.reports import StructureReport, VerificationReport
from ..utils.logging import get_logger
from .sampling import grid_to_csv, node_values, table_to_csv
from .serialization import ShellError

logger = get_logger(__name__)

Exportable = Scene | GridField | VerificationReport | StructureReport
BBox = tuple[float, float, float, float]

SVG_NS = "http://www.w3.org/2000/svg"
DOT_RADIUS = 4.0
STYLE = (
    ".strip{fill:#d8e6f3;stroke:none}"
    ".sector-boundary{stroke:#333;stroke-width:1.5}"
    ".ruling{stroke:#2a6fb0;stroke-width:0.75}"
    ".singularity{fill:#c0392b}"
)


class UnsupportedCombination(ShellError):
    """The requested format cannot represent the given object."""


def _singular_points(target: Exportable) -> np.ndarray:
    if isinstance(target, Scene):
        return target.singular_array()
    if isinstance(target, GridField):
        return target.singular_points()
    if isinstance(target, VerificationReport):
        return as_points(target.singularities)
    return as_points(target.singular_estimates)


def default_bbox(target: Exportable) -> BBox:
    """Window of half-width ``2·scale`` around the singular points."""
    if isinstance(target, GridField):
        return target.bbox
    if isinstance(target, Scene):
        center, scale = target.center, target.scale
    else:
        pts = _singular_points(target)
        center = pts.mean(axis=0) if len(pts) else np.zeros(2)
        diam = float(np.ptp(pts, axis=0).max()) if len(pts) > 1 else 0.0
        scale = max(1.0, diam)
    half = 2.0 * scale
    return (
        float(center[0] - half),
        float(center[0] + half),
        float(center[1] - half),
        float(center[1] + half),
    )


def clip_geometry(geom: Geometry, bbox: BBox) -> tuple[np.ndarray, np.ndarray] | None:
    """Part of ``geom`` inside the box as a segment, or ``None`` (Liang-Barsky)."""
    if isinstance(geom, Line):
        p, d, t0, t1 = geom.foot, geom.direction, -math.inf, math.inf
    elif isinstance(geom, Ray):
        p, d, t0, t1 = geom.origin.as_array(), geom.dir.vector, 0.0, math.inf
    else:
        p = geom.a.as_array()
        d, t0, t1 = geom.b.as_array() - p, 0.0, 1.0
    xmin, xmax, ymin, ymax = bbox
    for q, r in (
        (-d[0], p[0] - xmin),
        (d[0], xmax - p[0]),
        (-d[1], p[1] - ymin),
        (d[1], ymax - p[1]),
    ):
        if abs(q) < 1e-15:
            if r < 0:
                return None
            continue
        t = r / q
        if q < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
    if not t0 < t1:
        return None
    return p + t0 * d, p + t1 * d


class SvgCanvas:
    """World-to-pixel mapping with ``y`` pointing up."""

    def __init__(self, bbox: BBox, width: int):
        self.bbox = bbox
        self.k = width / (bbox[1] - bbox[0])
        self.width = width
        self.height = max(1, round(self.k * (bbox[3] - bbox[2])))
        self.root = ET.Element(
            "svg",
            {
                "xmlns": SVG_NS,
                "version": "1.1",
                "width": str(self.width),
                "height": str(self.height),
                "viewBox": f"0 0 {self.width} {self.height}",
            },
        )
        ET.SubElement(self.root, "style").text = STYLE

    def xy(self, p: np.ndarray) -> tuple[str, str]:
        return (
            f"{(p[0] - self.bbox[0]) * self.k:.3f}",
            f"{(self.bbox[3] - p[1]) * self.k:.3f}",
        )

    def line(self, a: np.ndarray, b: np.ndarray, cls: str) -> None:
        (x1, y1), (x2, y2) = self.xy(a), self.xy(b)
        ET.SubElement(self.root, "line", {"class": cls, "x1": x1, "y1": y1, "x2": x2, "y2": y2})

    def polygon(self, pts: np.ndarray, cls: str) -> None:
        points = " ".join(",".join(self.xy(p)) for p in pts)
        ET.SubElement(self.root, "polygon", {"class": cls, "points": points})

    def dot(self, p: np.ndarray, cls: str) -> None:
        cx, cy = self.xy(p)
        ET.SubElement(self.root, "circle", {"class": cls, "cx": cx, "cy": cy, "r": f"{DOT_RADIUS}"})

    def to_bytes(self) -> bytes:
        ET.indent(self.root)
        return ET.tostring(self.root, encoding="utf-8", xml_declaration=True) + b"\n"


def _strip_key(strip: Strip) -> tuple:
    return (round(strip.normal.theta, 9), strip.c_lo, strip.c_hi)


def _shade_strips(canvas: SvgCanvas, strips: Sequence[Strip]) -> None:
    unique = {_strip_key(s): s for s in strips}
    for key in sorted(unique):
        corners = unique[key].as_cell().clipped(canvas.bbox).vertices()
        if len(corners) >= 3:
            canvas.polygon(corners, "strip")


def _draw_lines(canvas: SvgCanvas, geoms: Sequence[Geometry], cls: str) -> int:
    unique = {geometry_key(g, digits=6): g for g in geoms}
    drawn = 0
    for key in sorted(unique):
        clipped = clip_geometry(unique[key], canvas.bbox)
        if clipped is not None:
            canvas.line(*clipped, cls)
            drawn += 1
    return drawn


def _draw_dots(canvas: SvgCanvas, pts: np.ndarray) -> None:
    xmin, xmax, ymin, ymax = canvas.bbox
    for p in sorted(map(tuple, pts)):
        if xmin <= p[0] <= xmax and ymin <= p[1] <= ymax:
            canvas.dot(np.asarray(p), "singularity")


def scene_svg(scene: Scene, cfg: ExportConfig, config: MongeForgeConfig) -> bytes:
    """Strips shaded, then sector boundaries, traced rulings and singular points."""
    canvas = SvgCanvas(cfg.bbox or default_bbox(scene), cfg.width)
    _shade_strips(canvas, [p.strip for p in scene.pieces if isinstance(p, CylindricalPiece)])

    boundaries: list[Geometry] = []
    for piece in scene.pieces:
        if isinstance(piece, ConicalPiece) and not piece.sector.is_full:
            for theta in (piece.sector.theta_b, piece.sector.theta_f):
                boundaries.append(Ray(piece.vertex, Direction(theta)))
    _draw_lines(canvas, boundaries, "sector-boundary")

    seeds, _ = ruling_seeds(scene, cfg.rulings, np.random.default_rng(config.seed))
    rulings = [r for r in trace_many(scene, seeds, config) if r is not None and r.valid]
    drawn = _draw_lines(canvas, [r.geometry for r in rulings], "ruling")
    _draw_dots(canvas, scene.singular_array())
    logger.debug(f"SVG: {len(boundaries)} sector boundaries, {drawn} rulings")
    return canvas.to_bytes()


def report_svg(report: VerificationReport | StructureReport, cfg: ExportConfig) -> bytes:
    """Strip and singular points recorded in a report."""
    canvas = SvgCanvas(cfg.bbox or default_bbox(report), cfg.width)
    if report.strip is not None:
        lo, hi = report.strip.bounds
        _shade_strips(canvas, [Strip(Direction(report.strip.normal_theta), lo, hi)])
    _draw_dots(canvas, _singular_points(report))
    return canvas.to_bytes()


def mesh_obj(
    xs: np.ndarray, ys: np.ndarray, values: np.ndarray, singular: np.ndarray, clip: float
) -> bytes:
    """Triangulated graph of ``values`` with disks of radius ``clip`` cut out.

    Faces are counterclockwise seen from above; a triangle is dropped when any corner is clipped.
    """
    ny, nx = values.shape
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    keep = np.ones(len(pts), dtype=bool)
    if clip > 0 and len(singular):
        dist = np.linalg.norm(pts[:, None, :] - singular[None, :, :], axis=2)
        keep = np.min(dist, axis=1) > clip
    index = (np.cumsum(keep) * keep).reshape(ny, nx)

    a, b = index[:-1, :-1], index[:-1, 1:]
    c, d = index[1:, 1:], index[1:, :-1]
    tris = np.stack([np.stack([a, b, c], axis=-1), np.stack([a, c, d], axis=-1)], axis=2)
    tris = tris.reshape(-1, 3)
    tris = tris[np.all(tris > 0, axis=1)]

    buffer = io.StringIO()
    buffer.write(f"# mongeforge surface {nx}x{ny}\n")
    vertices = np.column_stack([pts[keep], values.ravel()[keep]])
    np.savetxt(buffer, vertices, fmt="v %.17g %.17g %.17g")
    np.savetxt(buffer, tris, fmt="f %d %d %d")
    logger.debug(f"OBJ: {int(keep.sum())} vertices, {len(tris)} faces")
    return buffer.getvalue().encode("ascii")


def export(
    target: Exportable, cfg: ExportConfig, config: MongeForgeConfig | None = None
) -> bytes:
    """Render ``target`` in the configured format.

    Raises:
        UnsupportedCombination: Meshes and tables of reports, figures of bare grids.
    """
    config = config or MongeForgeConfig()
    kind = type(target).__name__
    if isinstance(target, VerificationReport | StructureReport):
        if cfg.format != "svg":
            raise UnsupportedCombination(f"Cannot export a {kind} as {cfg.format.upper()}")
        return report_svg(target, cfg)

    if isinstance(target, GridField):
        if cfg.format == "svg":
            raise UnsupportedCombination("SVG figures need a scene or a report, not a grid")
        if cfg.format == "csv":
            return grid_to_csv(target).encode("ascii")
        return mesh_obj(target.xs, target.ys, target.values, target.singular_points(), cfg.clip)

    if cfg.format == "svg":
        return scene_svg(target, cfg, config)
    bbox = cfg.bbox or default_bbox(target)
    xs = np.linspace(bbox[0], bbox[1], cfg.nx)
    ys = np.linspace(bbox[2], bbox[3], cfg.ny)
    values = node_values(target, xs, ys, config.thread_count)
    if cfg.format == "csv":
        return table_to_csv(xs, ys, values).encode("ascii")
    return mesh_obj(xs, ys, values, target.singular_array(), cfg.clip)
