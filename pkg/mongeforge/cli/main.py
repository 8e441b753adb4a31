"""Command-line interface for MongeForge."""

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import cast

import click
from click import Context
from pydantic import ValidationError
from rich.console import Console

from .. import __version__
from ..core.analyze import (
    AnalysisError,
    InconsistentField,
    ResolutionTooLow,
    StructureViolation,
    Unverified,
    classify,
    verify_scene,
)
from ..core.inference import GridField, infer_structure, verify_grid
from ..core.plane import GeometryError
from ..core.profile import ProfileError
from ..core.scene import Scene, SceneError
from ..models.config import ExportConfig, MongeForgeConfig, load_config
from ..models.reports import StructureReport, VerificationReport
from ..services.export import UnsupportedCombination, export
from ..services.sampling import read_grid, sample_grid, write_grid
from ..services.serialization import ParseError, emit_scene, load_scene
from ..utils.logging import get_logger, log_exception, set_level

logger = get_logger(__name__)

EXIT_UNEXPECTED = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_VERIFICATION = 4

progress_console = Console(stderr=True)


@contextmanager
def exit_codes(action: str) -> Iterator[None]:
    """Turn library exceptions into the documented exit codes."""
    try:
        yield
    except click.ClickException:
        raise
    except (ParseError, ValidationError, UnsupportedCombination) as e:
        log_exception(logger, e, f"{action} failed", EXIT_PARSE)
    except (SceneError, GeometryError, ProfileError, ResolutionTooLow) as e:
        log_exception(logger, e, f"{action} failed", EXIT_VALIDATION)
    except (Unverified, StructureViolation, InconsistentField, AnalysisError) as e:
        log_exception(logger, e, f"{action} failed", EXIT_VERIFICATION)
    except Exception as e:
        log_exception(logger, e, f"{action} failed", EXIT_UNEXPECTED)


@contextmanager
def progress(ctx: Context, message: str) -> Iterator[None]:
    if ctx.obj.get("quiet"):
        yield
        return
    with progress_console.status(message):
        yield


def parse_floats(count: int):
    """Click callback for comma-separated numbers, e.g. ``--bbox -1,1,-1,1``."""

    def callback(ctx: Context, param: click.Parameter, value: str | None):
        if value is None:
            return None
        try:
            numbers = tuple(float(v) for v in value.split(","))
        except ValueError as e:
            raise click.BadParameter(f"expected {count} comma-separated numbers") from e
        if len(numbers) != count:
            raise click.BadParameter(f"expected {count} comma-separated numbers")
        return numbers

    return callback


def parse_sizes(ctx: Context, param: click.Parameter, value: str | None):
    """``--n 65`` or ``--n 65,129``."""
    if value is None:
        return None
    try:
        sizes = tuple(int(v) for v in value.split(","))
    except ValueError as e:
        raise click.BadParameter("expected NX or NX,NY") from e
    if len(sizes) == 1:
        sizes = sizes * 2
    if len(sizes) != 2:
        raise click.BadParameter("expected NX or NX,NY")
    return sizes


def emit(text: str | bytes, out: Path | None) -> None:
    if out is None:
        if isinstance(text, bytes):
            sys.stdout.buffer.write(text)
        else:
            click.echo(text, nl=not text.endswith("\n"))
        return
    if isinstance(text, bytes):
        out.write_bytes(text)
    else:
        out.write_text(text)
    logger.info(f"Wrote {out}")


def load_target(scene: Path | None, grid: Path | None) -> Scene | GridField:
    if (scene is None) == (grid is None):
        raise click.UsageError("Give exactly one of --scene and --grid")
    if scene is not None:
        return load_scene(scene)
    return read_grid(cast(Path, grid))


def load_report(path: Path) -> VerificationReport | StructureReport:
    text = path.read_text()
    try:
        return VerificationReport.model_validate_json(text)
    except ValidationError:
        return StructureReport.model_validate_json(text)


@click.group()
@click.version_option(version=__version__, prog_name="mongeforge")
@click.option(
    "-c",
    "--config",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Path to configuration file ([tool.mongeforge] table)",
)
@click.option("-q", "--quiet", is_flag=True, help="Only log warnings and errors")
@click.pass_context
def cli(ctx: Context, config: Path | None = None, quiet: bool = False):
    """MongeForge - exact solutions of the degenerate Monge-Ampère equation."""
    ctx.ensure_object(dict)
    if quiet:
        set_level(logging.WARNING)
    ctx.obj["quiet"] = quiet
    with exit_codes("Loading configuration"):
        ctx.obj["config"] = load_config(config)


@cli.command()
@click.option(
    "--spec",
    "spec_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Scene document (builder invocation or explicit scene)",
)
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def build(ctx: Context, spec_path: Path, out: Path | None = None):
    """Build a scene and write it in explicit form."""
    with exit_codes("Build"):
        with progress(ctx, "Building scene"):
            scene = load_scene(spec_path)
        logger.info(
            f"Scene has {len(scene.pieces)} pieces and {len(scene.singularities)} singular points"
        )
        emit(emit_scene(scene), out)


@cli.command()
@click.option("--scene", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--grid", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--samples", type=click.IntRange(min=1), help="Random residual samples")
@click.option("--seed", type=click.IntRange(min=0), help="RNG seed")
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), help="Residual tolerance")
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def verify(
    ctx: Context,
    scene: Path | None = None,
    grid: Path | None = None,
    samples: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
    out: Path | None = None,
):
    """Check the equation, the gluing and the ruling structure numerically."""
    config = cast(MongeForgeConfig, ctx.obj["config"])

    # Override config with CLI options
    if samples is not None:
        config.samples = samples
    if seed is not None:
        config.seed = seed

    with exit_codes("Verification"):
        target = load_target(scene, grid)
        with progress(ctx, "Verifying"):
            if isinstance(target, GridField):
                if tol is not None:
                    config.grid_residual_tol = tol
                report = verify_grid(target, config)
            else:
                if tol is not None:
                    config.residual_tol = tol
                report = verify_scene(target, config)
        emit(report.model_dump_json(indent=2), out)

    if not report.passed:
        for violation in report.violations:
            logger.error(violation)
        logger.error(f"Verification failed (max residual {report.max_residual:.3e})")
        sys.exit(EXIT_VERIFICATION)
    logger.info("Verification passed")


@cli.command(name="classify")
@click.option("--scene", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--grid", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def classify_command(
    ctx: Context, scene: Path | None = None, grid: Path | None = None, out: Path | None = None
):
    """Name the case of a verified scene, or infer the structure of a sampled grid."""
    config = cast(MongeForgeConfig, ctx.obj["config"])

    with exit_codes("Classification"):
        target = load_target(scene, grid)
        if isinstance(target, GridField):
            with progress(ctx, "Inferring structure"):
                structure = infer_structure(target, config).to_report()
            emit(structure.model_dump_json(indent=2), out)
            if structure.classification is None:
                raise StructureViolation("; ".join(structure.violations) or "no classification")
            logger.info(f"Classified grid as {structure.classification}")
            return

        with progress(ctx, "Verifying"):
            report = verify_scene(target, config)
        label = classify(target, report)
        emit(label.model_dump_json(indent=2), out)
        logger.info(f"Classified scene as {label}")


@cli.command()
@click.option(
    "--scene", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option(
    "--bbox", required=True, callback=parse_floats(4), help="Window xmin,xmax,ymin,ymax"
)
@click.option("--n", "sizes", default="65", callback=parse_sizes, help="Nodes NX[,NY]")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def sample(
    ctx: Context, scene: Path, bbox: tuple[float, ...], sizes: tuple[int, int], out: Path
):
    """Sample a scene on a grid and write it as x,y,u CSV."""
    config = cast(MongeForgeConfig, ctx.obj["config"])

    with exit_codes("Sampling"):
        if not (bbox[0] < bbox[1] and bbox[2] < bbox[3]):
            raise ParseError(f"Degenerate bbox {bbox}", field="bbox")
        target = load_scene(scene)
        with progress(ctx, f"Sampling {sizes[0]}x{sizes[1]} grid"):
            grid = sample_grid(target, bbox, sizes[0], sizes[1], config.thread_count)
        write_grid(grid, out)


@cli.command(name="export")
@click.option("--scene", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--grid", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--report", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "-f", "--format", "fmt", required=True, type=click.Choice(["obj", "svg", "csv"])
)
@click.option("--bbox", callback=parse_floats(4), help="Window xmin,xmax,ymin,ymax")
@click.option("--n", "sizes", default="65", callback=parse_sizes, help="Nodes NX[,NY]")
@click.option("--clip", default=0.0, type=click.FloatRange(min=0), help="Disk radius to cut")
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def export_command(
    ctx: Context,
    fmt: str,
    sizes: tuple[int, int],
    clip: float,
    scene: Path | None = None,
    grid: Path | None = None,
    report: Path | None = None,
    bbox: tuple[float, float, float, float] | None = None,
    out: Path | None = None,
):
    """Write an OBJ mesh, an SVG ruling figure or a CSV grid."""
    config = cast(MongeForgeConfig, ctx.obj["config"])

    if sum(p is not None for p in (scene, grid, report)) != 1:
        raise click.UsageError("Give exactly one of --scene, --grid and --report")

    with exit_codes("Export"):
        cfg = ExportConfig(format=fmt, bbox=bbox, nx=sizes[0], ny=sizes[1], clip=clip)
        if report is not None:
            target: Scene | GridField | VerificationReport | StructureReport = load_report(report)
        else:
            target = load_target(scene, grid)
        with progress(ctx, f"Exporting {fmt.upper()}"):
            data = export(target, cfg, config)
        emit(data, out)


def main() -> None:
    cli(obj={})


if __name__ == "__main__":
    main()
