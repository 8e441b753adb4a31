"""Grid-sampled fields: finite differences, ruling inference and grid verification."""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy.cluster.hierarchy import fclusterdata
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator

from ..models.config import MongeForgeConfig
from ..models.reports import Classification, StructureReport, VerificationReport
from ..utils.logging import get_logger
from .analyze import (
    DirectionFan,
    Evidence,
    InconsistentField,
    OutsideWindow,
    ResolutionTooLow,
    Ruling,
    UmbilicPoint,
    assemble_ruling,
    build_fans,
    decide,
    default_radii,
    gradient_bound,
    kernel_directions,
    normalized_residual,
    separate_fans,
    strip_from_rulings,
    strip_report,
)
from .plane import Line, Ray, Strip, as_points, rot90

logger = get_logger(__name__)

MIN_NODES = 8
MIN_INFERENCE_NODES = 64
SEED_STRIDE = 16
WINDOW_MARGIN = 2
SINGULAR_MARGIN = 8
UMBILIC_GRID = 1e-6
FAN_STEP = math.pi / 16
ANGLE_TOL = 0.35
PARALLEL_TOL = 5e-2
MIN_CLUSTER = 3
WINDOW, GRADIENT = 0, 1


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of ``u`` on a regular grid; ``values[j, i] = u(xs[i], ys[j])``.

    Rows run along ``y`` and ``x`` varies fastest. ``marks`` lists known singular points; samples
    that are not finite are only accepted next to a mark and are filled from their neighbours.
    """

    bbox: tuple[float, float, float, float]
    nx: int
    ny: int
    values: np.ndarray
    marks: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise ResolutionTooLow(
                f"Grid needs at least {MIN_NODES}x{MIN_NODES} nodes, got {self.nx}x{self.ny}"
            )
        xmin, xmax, ymin, ymax = (float(v) for v in self.bbox)
        if not all(math.isfinite(v) for v in (xmin, xmax, ymin, ymax)):
            raise ValueError(f"Non-finite bbox {self.bbox}")
        if not (xmin < xmax and ymin < ymax):
            raise ValueError(f"Degenerate bbox {self.bbox}")
        try:
            values = np.array(self.values, dtype=float).reshape(self.ny, self.nx)
        except ValueError as e:
            raise ValueError(
                f"Expected {self.nx * self.ny} samples, got {np.size(self.values)}"
            ) from e
        object.__setattr__(self, "bbox", (xmin, xmax, ymin, ymax))
        object.__setattr__(self, "marks", tuple((float(x), float(y)) for x, y in self.marks))
        bad = ~np.isfinite(values)
        if bad.any():
            if np.any(bad & ~self.mark_mask(1.5 * self.spacing)):
                raise ValueError("Non-finite samples away from marked singular points")
            values = _fill_from_neighbours(values, bad)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls,
        f: Callable[[np.ndarray, np.ndarray], np.ndarray],
        bbox: tuple[float, float, float, float],
        nx: int,
        ny: int,
        marks: Sequence[tuple[float, float]] = (),
    ) -> "GridField":
        """Sample a vectorized callable ``f(X, Y)`` on the grid."""
        xs = np.linspace(bbox[0], bbox[1], nx)
        ys = np.linspace(bbox[2], bbox[3], ny)
        X, Y = np.meshgrid(xs, ys)
        values = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
        return cls(bbox, nx, ny, values, tuple(marks))

    @cached_property
    def xs(self) -> np.ndarray:
        return np.linspace(self.bbox[0], self.bbox[1], self.nx)

    @cached_property
    def ys(self) -> np.ndarray:
        return np.linspace(self.bbox[2], self.bbox[3], self.ny)

    @property
    def dx(self) -> float:
        return (self.bbox[1] - self.bbox[0]) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.bbox[3] - self.bbox[2]) / (self.ny - 1)

    @property
    def spacing(self) -> float:
        return max(self.dx, self.dy)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.bbox[1] - self.bbox[0], self.bbox[3] - self.bbox[2])

    def nodes(self) -> np.ndarray:
        """All nodes as an ``(ny·nx, 2)`` array in row-major order."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def singular_points(self) -> np.ndarray:
        return as_points(self.marks) if self.marks else np.zeros((0, 2))

    def mark_mask(self, radius: float, centers: np.ndarray | None = None) -> np.ndarray:
        """Nodes within ``radius`` of a mark (or of ``centers``), shaped like ``values``."""
        centers = self.singular_points() if centers is None else as_points(centers)
        mask = np.zeros((self.ny, self.nx), dtype=bool)
        if len(centers) == 0:
            return mask
        X, Y = np.meshgrid(self.xs, self.ys)
        for cx, cy in centers:
            mask |= np.hypot(X - cx, Y - cy) <= radius
        return mask

    def inside(self, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
        pts = as_points(pts)
        xmin, xmax, ymin, ymax = self.bbox
        return (
            (pts[:, 0] >= xmin + margin)
            & (pts[:, 0] <= xmax - margin)
            & (pts[:, 1] >= ymin + margin)
            & (pts[:, 1] <= ymax - margin)
        )

    @cached_property
    def _fd_gradients(self) -> tuple[np.ndarray, np.ndarray]:
        uy, ux = np.gradient(self.values, self.ys, self.xs, edge_order=2)
        return ux, uy

    @cached_property
    def _gradient_interpolator(self) -> RegularGridInterpolator:
        ux, uy = self._fd_gradients
        return RegularGridInterpolator(
            (self.ys, self.xs), np.stack([ux, uy], axis=-1), bounds_error=False, fill_value=np.nan
        )

    @cached_property
    def _spline(self) -> RectBivariateSpline:
        return RectBivariateSpline(self.xs, self.ys, self.values.T, kx=3, ky=3, s=0)

    def gradients(self, pts: np.ndarray) -> np.ndarray:
        """Linearly interpolated finite-difference gradients; NaN outside the window."""
        pts = as_points(pts)
        return self._gradient_interpolator(pts[:, ::-1])

    def fd_hessians(self) -> np.ndarray:
        """Per-node central-difference Hessians, shape ``(ny, nx, 2, 2)``."""
        ux, uy = self._fd_gradients
        uxx = np.gradient(ux, self.xs, axis=1, edge_order=2)
        uxy = np.gradient(ux, self.ys, axis=0, edge_order=2)
        uyy = np.gradient(uy, self.ys, axis=0, edge_order=2)
        return np.stack([np.stack([uxx, uxy], axis=-1), np.stack([uxy, uyy], axis=-1)], axis=-2)

    def spline_hessians(self, pts: np.ndarray) -> np.ndarray:
        pts = as_points(pts)
        x, y = pts[:, 0], pts[:, 1]
        uxx = self._spline.ev(x, y, dx=2)
        uxy = self._spline.ev(x, y, dx=1, dy=1)
        uyy = self._spline.ev(x, y, dy=2)
        return np.stack([np.stack([uxx, uxy], axis=-1), np.stack([uxy, uyy], axis=-1)], axis=-2)

    def residual_at(self, q: np.ndarray, h: float) -> float:
        """Normalized central-difference residual with step ``h`` on the bicubic interpolant.

        Raises:
            OutsideWindow: If the stencil leaves the sampled window.
        """
        x, y = float(q[0]), float(q[1])
        if not self.inside(np.array([[x, y]]), margin=h)[0]:
            raise OutsideWindow(f"Stencil of step {h} around ({x}, {y}) leaves the window")
        f = self._spline.ev
        c = f(x, y)
        uxx = (f(x + h, y) - 2 * c + f(x - h, y)) / h**2
        uyy = (f(x, y + h) - 2 * c + f(x, y - h)) / h**2
        uxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h**2)
        return float(normalized_residual(np.array([[uxx, uxy], [uxy, uyy]]))[0])


def _fill_from_neighbours(values: np.ndarray, bad: np.ndarray) -> np.ndarray:
    out = values.copy()
    padded = np.pad(np.where(bad, np.nan, values), 1, constant_values=np.nan)
    for j, i in zip(*np.nonzero(bad), strict=True):
        window = padded[j : j + 3, i : i + 3]
        out[j, i] = float(np.nanmean(window)) if np.any(np.isfinite(window)) else 0.0
    return out


def singular_margin(grid: GridField) -> float:
    """Radius around singular points excluded from finite-difference checks."""
    return max(SINGULAR_MARGIN * grid.spacing, 0.1 * grid.diagonal)


def grid_residual_map(grid: GridField, centers: np.ndarray | None = None) -> np.ndarray:
    """Normalized residual at every node; NaN on the two outer rings and near singular points."""
    res = normalized_residual(grid.fd_hessians().reshape(-1, 2, 2)).reshape(grid.ny, grid.nx)
    res[:WINDOW_MARGIN, :] = np.nan
    res[-WINDOW_MARGIN:, :] = np.nan
    res[:, :WINDOW_MARGIN] = np.nan
    res[:, -WINDOW_MARGIN:] = np.nan
    res[grid.mark_mask(singular_margin(grid), centers)] = np.nan
    if centers is not None and grid.marks:
        res[grid.mark_mask(singular_margin(grid))] = np.nan
    return res


@dataclass
class GridStructure:
    """Rulings, fans, strip, singular estimates and class inferred from a grid."""

    rulings: list[Ruling]
    fans: list[DirectionFan]
    strip: Strip | None
    singular_estimates: np.ndarray
    classification: Classification | None
    violations: list[str]

    def to_report(self) -> StructureReport:
        return StructureReport(
            rulings=len(self.rulings),
            full_lines=sum(1 for r in self.rulings if r.valid and isinstance(r.geometry, Line)),
            half_lines=sum(1 for r in self.rulings if r.valid and isinstance(r.geometry, Ray)),
            singular_estimates=[(float(x), float(y)) for x, y in self.singular_estimates],
            fans=[f.to_report() for f in self.fans],
            strip=strip_report(self.strip),
            classification=self.classification,
            violations=self.violations,
        )


def _seed_nodes(grid: GridField, config: MongeForgeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Rank-1 seed nodes on a coarse lattice and their kernel directions.

    Raises:
        InconsistentField: If the Hessian has full rank on most non-umbilic seeds.
    """
    stride = max(2, min(SEED_STRIDE, min(grid.nx, grid.ny) // 16))
    start = max(stride // 2, WINDOW_MARGIN + 1)
    ii = np.arange(start, grid.nx - WINDOW_MARGIN - 1, stride)
    jj = np.arange(start, grid.ny - WINDOW_MARGIN - 1, stride)
    X, Y = np.meshgrid(grid.xs[ii], grid.ys[jj])
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    H_fd = grid.fd_hessians()[np.ix_(jj, ii)].reshape(-1, 2, 2)
    if grid.marks:
        keep = ~grid.mark_mask(SINGULAR_MARGIN * grid.spacing)[np.ix_(jj, ii)].ravel()
        pts, H_fd = pts[keep], H_fd[keep]
    H = grid.spline_hessians(pts)
    k, major, minor = kernel_directions(H)
    # two stencils disagreeing bounds the discretization error of the minor eigenvalue
    noise = 3.0 * np.linalg.norm((H - H_fd).reshape(-1, 4), axis=1)
    threshold = np.maximum(config.rank_eps_grid * np.maximum(np.abs(major), 1.0), noise)
    live = np.abs(major) > UMBILIC_GRID
    rank_one = live & (np.abs(minor) <= threshold)
    if live.sum() and rank_one.sum() < 0.1 * live.sum():
        raise InconsistentField(
            f"Hessian has full rank on {int(live.sum() - rank_one.sum())} of"
            f" {int(live.sum())} non-umbilic seed nodes"
        )
    logger.debug(f"{int(rank_one.sum())} rank-1 seeds out of {len(pts)} lattice nodes")
    return pts[rank_one], k[rank_one]


def _march(
    grid: GridField, starts: np.ndarray, dirs: np.ndarray, g0: np.ndarray, config: MongeForgeConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Walk every start along its direction in half-cell steps while the gradient stays put."""
    step = 0.5 * min(grid.dx, grid.dy)
    margin = WINDOW_MARGIN * grid.spacing
    ux, uy = grid._fd_gradients
    g_ref = 1e-2 * float(np.percentile(np.hypot(ux, uy), 95)) + 1e-12
    denom = np.linalg.norm(g0, axis=1) + g_ref
    pos = starts.copy()
    reason = np.full(len(starts), WINDOW)
    active = np.ones(len(starts), dtype=bool)
    for _ in range(int(math.ceil(2.0 * grid.diagonal / step))):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        nxt = pos[idx] + step * dirs[idx]
        inside = grid.inside(nxt, margin)
        dev = np.linalg.norm(grid.gradients(nxt) - g0[idx], axis=1) / denom[idx]
        ok = inside & (dev <= config.grid_gradient_tol)
        stopped = idx[~ok]
        reason[stopped] = np.where(inside[~ok], GRADIENT, WINDOW)
        active[stopped] = False
        pos[idx[ok]] = nxt[ok]
    return pos, reason


def _line_intersection(points: np.ndarray, dirs: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    """Least-squares common point of the lines ``points + t·dirs``."""
    n = rot90(dirs)
    A = n.T @ n
    b = n.T @ np.sum(n * points, axis=1)
    if np.linalg.cond(A) > 1e8:
        logger.warning("Ill-conditioned ruling cluster; using the endpoint centroid")
        return fallback
    return np.linalg.solve(A, b)


def _cluster_endpoints(
    ends: np.ndarray,
    reasons: np.ndarray,
    seeds: np.ndarray,
    dirs: np.ndarray,
    radius: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Singular estimates from clusters of interior ruling ends, and the end labels (-1: none)."""
    labels = np.full(reasons.shape, -1)
    flat = np.argwhere(reasons == GRADIENT)
    if len(flat) < MIN_CLUSTER:
        return np.zeros((0, 2)), labels
    pts = ends[flat[:, 0], flat[:, 1]]
    groups = fclusterdata(pts, t=radius, criterion="distance", method="single")
    estimates = []
    members = []
    for g in np.unique(groups):
        sel = np.flatnonzero(groups == g)
        if len(sel) < MIN_CLUSTER:
            continue
        rows = flat[sel, 0]
        centroid = pts[sel].mean(axis=0)
        est = _line_intersection(seeds[rows], dirs[rows], centroid)
        if np.linalg.norm(est - centroid) > 3 * radius:
            est = centroid
        estimates.append(est)
        members.append(sel)
    order = sorted(range(len(estimates)), key=lambda c: (estimates[c][0], estimates[c][1]))
    for new, old in enumerate(order):
        sel = members[old]
        labels[flat[sel, 0], flat[sel, 1]] = new
    est_arr = np.array([estimates[c] for c in order]) if estimates else np.zeros((0, 2))
    return est_arr, labels


def _check_consistency(rulings: list[Ruling], estimates: np.ndarray, radius: float) -> None:
    """Full lines must be parallel and half-lines must pass through their singular estimate."""
    lines = [r.geometry for r in rulings if r.valid and isinstance(r.geometry, Line)]
    if lines:
        theta0 = lines[0].normal.theta
        spread = max(abs(math.sin(line.normal.theta - theta0)) for line in lines)
        if spread > PARALLEL_TOL:
            raise InconsistentField(f"Full-line rulings are not parallel (spread {spread:.3g})")
    rays = [r for r in rulings if r.valid and isinstance(r.geometry, Ray)]
    misses = 0
    for r in rays:
        seed = np.asarray(r.seed)
        line = Line.through(seed, r.geometry.dir.theta)  # type: ignore[union-attr]
        if float(line.distance(estimates[r.endpoints[0]][None, :])[0]) > 2 * radius:
            misses += 1
    if rays and misses > 0.1 * len(rays):
        raise InconsistentField(f"{misses} of {len(rays)} half-lines miss their common end point")


def _trace_seeds(
    grid: GridField, seeds: np.ndarray, k: np.ndarray, config: MongeForgeConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    g0 = grid.gradients(seeds)
    ok = np.all(np.isfinite(g0), axis=1)
    seeds, k, g0 = seeds[ok], k[ok], g0[ok]
    ends = np.zeros((len(seeds), 2, 2))
    reasons = np.zeros((len(seeds), 2), dtype=int)
    for s, sign in enumerate((1.0, -1.0)):
        ends[:, s], reasons[:, s] = _march(grid, seeds, sign * k, g0, config)
    return seeds, k, g0, ends, reasons


def _rulings_from_ends(
    seeds: np.ndarray,
    k: np.ndarray,
    g0: np.ndarray,
    ends: np.ndarray,
    reasons: np.ndarray,
    labels: np.ndarray,
    estimates: np.ndarray,
) -> list[Ruling]:
    rulings = []
    for i in range(len(seeds)):
        kinds: list[int | str] = []
        last_good: list[np.ndarray | None] = []
        for s in range(2):
            if reasons[i, s] == WINDOW:
                kinds.append("unbounded")
                last_good.append(None)
            elif labels[i, s] >= 0:
                kinds.append(int(labels[i, s]))
                last_good.append(estimates[labels[i, s]])
            else:
                kinds.append("interior")
                last_good.append(ends[i, s])
        rulings.append(
            assemble_ruling(
                seeds[i],
                k[i],
                kinds,
                last_good,
                estimates,
                (float(g0[i, 0]), float(g0[i, 1])),
                (float(seeds[i, 0]), float(seeds[i, 1])),
            )
        )
    return rulings


def _infer(
    grid: GridField, config: MongeForgeConfig
) -> tuple[list[Ruling], np.ndarray, float]:
    if min(grid.nx, grid.ny) < MIN_INFERENCE_NODES:
        raise ResolutionTooLow(
            f"Structure inference needs {MIN_INFERENCE_NODES}x{MIN_INFERENCE_NODES} nodes,"
            f" got {grid.nx}x{grid.ny}"
        )
    radius = config.cluster_radius_cells * grid.spacing
    seeds, k = _seed_nodes(grid, config)
    seeds, k, g0, ends, reasons = _trace_seeds(grid, seeds, k, config)
    estimates, labels = _cluster_endpoints(ends, reasons, seeds, k, radius)
    rulings = _rulings_from_ends(seeds, k, g0, ends, reasons, labels, estimates)
    return rulings, estimates, radius


def infer_rulings(grid: GridField, config: MongeForgeConfig | None = None) -> list[Ruling]:
    rulings, _, _ = _infer(grid, config or MongeForgeConfig())
    return rulings


def trace_grid_ruling(
    grid: GridField, p: np.ndarray, config: MongeForgeConfig | None = None
) -> Ruling:
    """Ruling through ``p``; ends near a mark terminate there, other interior stops are segments.

    Raises:
        UmbilicPoint: If the interpolated Hessian vanishes at ``p``.
        OutsideWindow: If ``p`` lies outside the window.
    """
    config = config or MongeForgeConfig()
    q = as_points(p)
    if not grid.inside(q, WINDOW_MARGIN * grid.spacing)[0]:
        raise OutsideWindow(f"({q[0, 0]}, {q[0, 1]}) lies outside the sampled window")
    k, major, _ = kernel_directions(grid.spline_hessians(q))
    if abs(float(major[0])) <= UMBILIC_GRID:
        raise UmbilicPoint(f"Hessian vanishes at ({q[0, 0]}, {q[0, 1]})")
    q, k, g0, ends, reasons = _trace_seeds(grid, q, k, config)
    if len(q) == 0:
        raise OutsideWindow("No gradient available at the query point")
    marks = grid.singular_points()
    labels = np.full(reasons.shape, -1)
    radius = 2 * config.cluster_radius_cells * grid.spacing
    for s in range(2):
        if reasons[0, s] == GRADIENT and len(marks):
            dist = np.linalg.norm(marks - ends[0, s], axis=1)
            if dist.min() <= radius:
                labels[0, s] = int(np.argmin(dist))
    return _rulings_from_ends(q, k, g0, ends, reasons, labels, marks)[0]


def infer_structure(grid: GridField, config: MongeForgeConfig | None = None) -> GridStructure:
    """Rulings, singular estimates, fans, strip and classification of a sampled field.

    Admissibility stays undetermined on a bounded window, so three or more singular points only
    classify as Polyhedral when the hull and sector checks pass.

    Raises:
        ResolutionTooLow: Below 64x64 nodes.
        InconsistentField: If rulings are neither parallel nor concurrent.
    """
    config = config or MongeForgeConfig()
    rulings, estimates, radius = _infer(grid, config)
    _check_consistency(rulings, estimates, radius)

    violations = []
    invalid = [r for r in rulings if not r.valid]
    if rulings and len(invalid) > 0.05 * len(rulings):
        violations.append(f"{len(invalid)} rulings terminate inside the smooth region")
    valid = [r for r in rulings if r.valid]
    fans = build_fans(valid, estimates, FAN_STEP)
    for fan in fans:
        if fan.empty:
            violations.append(f"no half-line rulings leave singular estimate {fan.singularity}")
    for a in range(len(fans)):
        for b in range(a + 1, len(fans)):
            if not separate_fans(fans[a], fans[b]):
                violations.append(f"fans of singular estimates {a} and {b} are not separable")
    eps = 3 * radius
    strip, problems = strip_from_rulings(valid, estimates, eps)
    violations.extend(problems)

    classification = None
    if not violations:
        evidence = Evidence(
            singular_points=estimates,
            full_lines=any(isinstance(r.geometry, Line) for r in valid),
            strip=strip,
            admissible=None,
            sectors=[list(f.arcs) for f in fans],
            eps=eps,
            angle_tol=ANGLE_TOL,
        )
        classification = decide(evidence)
    logger.info(
        f"Inferred {len(rulings)} rulings, {len(estimates)} singular estimates,"
        f" class {classification}"
    )
    return GridStructure(rulings, fans, strip, estimates, classification, violations)


def _grid_radii(grid: GridField, index: int) -> list[float]:
    center = grid.singular_points()[index]
    xmin, xmax, ymin, ymax = grid.bbox
    room = min(center[0] - xmin, xmax - center[0], center[1] - ymin, ymax - center[1])
    r0 = min(default_radii(grid, index)[0], room - 3 * grid.spacing)
    r_min = 4 * grid.spacing
    if r0 <= r_min:
        return []
    return [float(r) for r in np.geomspace(r0, r_min, 4)]


def verify_grid(grid: GridField, config: MongeForgeConfig | None = None) -> VerificationReport:
    """Finite-difference residual, gradient bounds and inferred ruling structure of a grid."""
    config = config or MongeForgeConfig()
    violations: list[str] = []
    structure: GridStructure | None = None
    try:
        structure = infer_structure(grid, config)
        violations.extend(structure.violations)
    except InconsistentField as e:
        violations.append(str(e))
    estimates = structure.singular_estimates if structure is not None else np.zeros((0, 2))

    res = grid_residual_map(grid, estimates)
    finite = np.isfinite(res)
    max_residual = float(np.max(np.abs(res[finite]))) if finite.any() else 0.0

    probe = grid
    if not grid.marks and len(estimates):
        probe = replace(grid, marks=tuple((float(x), float(y)) for x, y in estimates))
    bounds = []
    for j in range(len(probe.marks)):
        radii = _grid_radii(probe, j)
        if not radii:
            logger.warning(f"Singular point {j} is too close to the window edge to probe")
            continue
        bound = gradient_bound(
            probe, j, radii, samples=config.circle_samples, slack=config.grid_gradient_tol
        )
        bounds.append(bound)
        if not bound.bounded:
            violations.append(f"gradient grows towards singular point {j}")

    passed = max_residual <= config.grid_residual_tol and not violations
    rulings = structure.rulings if structure is not None else []
    report = VerificationReport(
        source="grid",
        samples=int(finite.sum()),
        max_residual=max_residual,
        singularities=[(float(x), float(y)) for x, y in probe.singular_points()],
        gradient_bounds=bounds,
        fans=[f.to_report() for f in structure.fans] if structure is not None else [],
        strip=strip_report(structure.strip) if structure is not None else None,
        full_lines=sum(1 for r in rulings if r.valid and isinstance(r.geometry, Line)),
        half_lines=sum(1 for r in rulings if r.valid and isinstance(r.geometry, Ray)),
        admissible=None,
        violations=violations,
        passed=passed,
    )
    logger.info(
        f"Grid verification {'passed' if passed else 'failed'}: residual {max_residual:.2e},"
        f" {len(violations)} violations"
    )
    return report
