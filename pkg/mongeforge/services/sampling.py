"""Grid sampling of exact scenes and the ``x,y,u`` CSV grid format."""

import io
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from ..core.inference import GridField
from ..core.scene import Scene, evaluate_many
from ..utils.logging import get_logger
from .serialization import ParseError

logger = get_logger(__name__)

CSV_HEADER = "x,y,u"


def singular_marks(
    scene: Scene, bbox: Sequence[float], pad: float = 0.0
) -> tuple[tuple[float, float], ...]:
    """Singular points of ``scene`` inside ``bbox`` grown by ``pad``."""
    xmin, xmax, ymin, ymax = bbox
    return tuple(
        (s.x, s.y)
        for s in scene.singularities
        if xmin - pad <= s.x <= xmax + pad and ymin - pad <= s.y <= ymax + pad
    )


def node_values(scene: Scene, xs: np.ndarray, ys: np.ndarray, threads: int = 1) -> np.ndarray:
    """``u`` at the nodes of ``xs × ys`` as a ``(len(ys), len(xs))`` array.

    Nodes that hit a singular point take the cone value ``u0`` there, the continuous extension.
    """
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    values = evaluate_many(scene, pts, threads).values.copy()

    singular = np.flatnonzero(~np.isfinite(values))
    if len(singular):
        sing = scene.singular_array()
        for row in singular:
            k = int(np.argmin(np.linalg.norm(sing - pts[row], axis=1)))
            cones = scene.conical_at(k)
            if cones:
                values[row] = scene.pieces[cones[0]].u0  # type: ignore[union-attr]
        logger.debug(f"Filled {len(singular)} nodes sitting on singular points")
    return values.reshape(len(ys), len(xs))


def sample_grid(
    scene: Scene,
    bbox: Sequence[float],
    nx: int,
    ny: int,
    threads: int = 1,
) -> GridField:
    """Sample ``scene`` on an ``nx × ny`` grid over ``bbox = (xmin, xmax, ymin, ymax)``.

    Singular points inside the box become the grid's marks.

    Raises:
        ResolutionTooLow: If ``nx`` or ``ny`` is below 8.
    """
    xs = np.linspace(bbox[0], bbox[1], nx)
    ys = np.linspace(bbox[2], bbox[3], ny)
    grid = GridField(
        (float(bbox[0]), float(bbox[1]), float(bbox[2]), float(bbox[3])),
        nx,
        ny,
        node_values(scene, xs, ys, threads),
        singular_marks(scene, bbox),
    )
    logger.info(f"Sampled {nx}x{ny} grid over {grid.bbox}")
    return grid


def table_to_csv(xs: np.ndarray, ys: np.ndarray, values: np.ndarray) -> str:
    """Row-major ``x,y,u`` table, 17 significant digits."""
    X, Y = np.meshgrid(xs, ys)
    table = np.column_stack([X.ravel(), Y.ravel(), np.asarray(values).ravel()])
    buffer = io.StringIO()
    np.savetxt(buffer, table, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
    return buffer.getvalue()


def grid_to_csv(grid: GridField) -> str:
    return table_to_csv(grid.xs, grid.ys, grid.values)


def grid_from_csv(text: str) -> GridField:
    """Parse a grid written by :func:`grid_to_csv`.

    Raises:
        ParseError: Wrong header, unparsable numbers or nodes that do not tile a grid.
    """
    header = text.split("\n", 1)[0].strip()
    if header != CSV_HEADER:
        raise ParseError(f"Expected header '{CSV_HEADER}', got '{header}'", line=1)
    try:
        table = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
    except ValueError as e:
        raise ParseError(f"Malformed grid CSV: {e}") from e
    if table.shape[1] != 3:
        raise ParseError(f"Expected 3 columns, got {table.shape[1]}", line=2)

    x, y, u = table.T
    row_breaks = np.flatnonzero(y != y[0])
    nx = int(row_breaks[0]) if len(row_breaks) else len(y)
    if nx == 0 or len(table) % nx:
        raise ParseError(f"{len(table)} rows do not form a grid")
    ny = len(table) // nx
    X = x.reshape(ny, nx)
    Y = y.reshape(ny, nx)
    if not (np.all(X == X[0]) and np.all(Y == Y[:, :1])):
        raise ParseError("Nodes are not in row-major grid order")

    bbox = (float(X[0, 0]), float(X[0, -1]), float(Y[0, 0]), float(Y[-1, 0]))
    try:
        return GridField(bbox, nx, ny, u.reshape(ny, nx))
    except ValueError as e:
        raise ParseError(f"Invalid grid: {e}") from e


def write_grid(grid: GridField, path: Path) -> None:
    path.write_text(grid_to_csv(grid))
    logger.info(f"Wrote {grid.nx}x{grid.ny} grid to {path}")


def read_grid(path: Path) -> GridField:
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"Cannot read {path}: {e}") from e
    return grid_from_csv(text)
