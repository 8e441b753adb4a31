"""Configuration model for MongeForge."""

import os
from pathlib import Path
from typing import Literal

import toml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class MongeForgeConfig(BaseModel):
    """Tolerances and sampling knobs shared by verification, inference and the CLI."""

    model_config = ConfigDict(
        validate_assignment=True,
        extra="forbid",
        frozen=False,
    )

    # Residual and gluing tolerances
    residual_tol: float = Field(
        default=1e-10,
        gt=0,
        description="Normalized analytic residual bound for exact scenes",
    )
    grid_residual_tol: float = Field(
        default=1e-2,
        gt=0,
        description="Normalized finite-difference residual bound for grids",
    )
    jump_tol: float = Field(
        default=1e-9,
        gt=0,
        description="Relative value/gradient/Hessian jump bound across interfaces",
    )
    transverse_tol: float = Field(
        default=1e-12,
        gt=0,
        description="Bound on the transverse curvature density ρ·n·H·n along interfaces",
    )
    gradient_slack: float = Field(
        default=1e-9,
        ge=0,
        description="Slack (times scene scale) for the monotone gradient-bound test",
    )

    # Rank thresholds
    rank_eps_exact: float = Field(
        default=1e-10,
        gt=0,
        description="Rank-1 threshold on exact scenes",
    )
    rank_eps_grid: float = Field(
        default=1e-3,
        gt=0,
        description="Rank-1 threshold on grids",
    )

    # Sampling
    samples: int = Field(
        default=10000,
        ge=1,
        description="Random residual samples per verification",
    )
    interface_samples: int = Field(
        default=100,
        ge=1,
        description="Samples per interface",
    )
    trace_seeds: int = Field(
        default=48,
        ge=4,
        description="Ruling seeds per piece",
    )
    circle_samples: int = Field(
        default=256,
        ge=8,
        description="Samples per circle in the gradient-bound probe",
    )
    cluster_radius_cells: float = Field(
        default=2.0,
        gt=0,
        description="Endpoint clustering radius for singular estimates, in grid cells",
    )
    grid_gradient_tol: float = Field(
        default=5e-2,
        gt=0,
        description="Relative gradient constancy tolerance while tracing grid rulings",
    )
    seed: int = Field(
        default=0,
        ge=0,
        description="RNG seed for randomized sampling",
    )

    # Parallelism
    threads: int | str = Field(
        default="env:MONGEFORGE_THREADS",
        description="Cap on internal batch parallelism",
    )

    @model_validator(mode="after")
    def resolve_env_vars(self) -> "MongeForgeConfig":
        """Resolve environment variables in configuration values."""
        if isinstance(self.threads, str):
            raw = self.threads
            if raw.startswith("env:"):
                raw = os.getenv(raw[4:], "1")
            try:
                threads = int(raw)
            except ValueError as e:
                raise ValueError(f"Invalid thread count: {raw!r}") from e
            # bypass validate_assignment recursion
            object.__setattr__(self, "threads", max(1, threads))
        return self

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v: int | str) -> int | str:
        """Validate thread counts given as integers."""
        if isinstance(v, int) and v < 1:
            raise ValueError(f"Invalid thread count: {v}")
        return v

    @property
    def thread_count(self) -> int:
        """Resolved thread count."""
        return int(self.threads)


class ExportConfig(BaseModel):
    """Output format, window and resolution of an export."""

    model_config = ConfigDict(validate_assignment=True, extra="forbid")

    format: Literal["obj", "svg", "csv"] = Field(description="Output format")
    bbox: tuple[float, float, float, float] | None = Field(
        default=None,
        description="Window (xmin, xmax, ymin, ymax); derived from the scene when omitted",
    )
    nx: int = Field(default=65, ge=2, description="Nodes along x")
    ny: int = Field(default=65, ge=2, description="Nodes along y")
    clip: float = Field(
        default=0.0, ge=0, description="Radius of the disks cut around singular points"
    )
    rulings: int = Field(default=24, ge=4, description="Ruling seeds per piece in SVG figures")
    width: int = Field(default=800, ge=16, description="SVG width in pixels")

    @field_validator("bbox")
    @classmethod
    def validate_bbox(
        cls, v: tuple[float, float, float, float] | None
    ) -> tuple[float, float, float, float] | None:
        """Reject empty or inverted windows."""
        if v is not None and not (v[0] < v[1] and v[2] < v[3]):
            raise ValueError(f"Degenerate bbox: {v}")
        return v


def load_config(config_path: Path | None = None) -> MongeForgeConfig:
    """Load configuration from a TOML file, falling back to defaults.

    The ``[tool.mongeforge]`` table is read, so ``pyproject.toml`` works as a config file.
    A local ``.env`` is loaded first so ``env:`` references can point into it.
    """
    load_dotenv()
    if config_path and config_path.exists():
        with open(config_path) as f:
            config_data = toml.load(f)
        return MongeForgeConfig(**config_data.get("tool", {}).get("mongeforge", {}))

    return MongeForgeConfig()
