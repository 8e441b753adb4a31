"""Report models emitted by verification, classification and grid inference."""

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ClassLabel = Literal[
    "Cylinder",
    "FullCone",
    "HalfCylinderHalfCone",
    "TwoSingular",
    "Polyhedral",
    "NonAdmissibleOther",
]


class Classification(BaseModel):
    """Case label of a verified solution."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    label: ClassLabel = Field(description="Case of the taxonomy")
    variant: int | None = Field(default=None, description="Two-singular family, 1-4")
    polygon: list[tuple[float, float]] | None = Field(
        default=None, description="Counterclockwise hull of the singular points (Polyhedral)"
    )

    @model_validator(mode="after")
    def check_payload(self) -> "Classification":
        """Variant only for TwoSingular, polygon only for Polyhedral."""
        if (self.label == "TwoSingular") != (self.variant is not None):
            raise ValueError("variant is required for TwoSingular and only for it")
        if self.variant is not None and self.variant not in (1, 2, 3, 4):
            raise ValueError(f"Invalid variant: {self.variant}")
        if (self.label == "Polyhedral") != (self.polygon is not None):
            raise ValueError("polygon is required for Polyhedral and only for it")
        if self.polygon is not None and len(self.polygon) < 3:
            raise ValueError("Polyhedral needs at least 3 vertices")
        return self

    def __str__(self) -> str:
        if self.variant is not None:
            return f"{self.label}{{{self.variant}}}"
        if self.polygon is not None:
            return f"{self.label}{{{len(self.polygon)} vertices}}"
        return self.label


class StripReport(BaseModel):
    """Strip ``c_lo < n·p < c_hi``; ``None`` bounds are infinite."""

    normal_theta: float
    c_lo: float | None = None
    c_hi: float | None = None

    @property
    def bounds(self) -> tuple[float, float]:
        return (
            -math.inf if self.c_lo is None else self.c_lo,
            math.inf if self.c_hi is None else self.c_hi,
        )


class FanReport(BaseModel):
    singularity: int
    arcs: list[tuple[float, float]] = Field(default_factory=list)


class GradientBoundReport(BaseModel):
    singularity: int
    radii: list[float]
    sups: list[float]
    bounded: bool


class VerificationReport(BaseModel):
    """Numerical evidence that a field solves the equation with the expected structure."""

    model_config = ConfigDict(validate_assignment=True, extra="forbid")

    source: Literal["scene", "grid"] = "scene"
    samples: int = Field(default=0, ge=0, description="Residual sample count")
    max_residual: float = Field(default=0.0, description="Max normalized |det H|")
    max_value_jump: float = 0.0
    max_grad_jump: float = 0.0
    max_hess_jump: float = 0.0
    max_transverse: float = Field(
        default=0.0,
        description="Max transverse curvature density on interfaces (ρ·|n·H·n| on cones)",
    )
    singularities: list[tuple[float, float]] = Field(default_factory=list)
    gradient_bounds: list[GradientBoundReport] = Field(default_factory=list)
    fans: list[FanReport] = Field(default_factory=list)
    strip: StripReport | None = None
    full_lines: int = Field(default=0, description="Traced full-line rulings")
    half_lines: int = Field(default=0, description="Traced half-line rulings")
    admissible: bool | None = Field(default=None, description="None when undetermined")
    violations: list[str] = Field(default_factory=list)
    passed: bool = False

    @field_validator(
        "max_residual", "max_value_jump", "max_grad_jump", "max_hess_jump", "max_transverse"
    )
    @classmethod
    def finite_metric(cls, v: float) -> float:
        """Metrics must be finite; NaN hides a broken evaluation."""
        if math.isnan(v):
            raise ValueError("metric is NaN")
        return v


class StructureReport(BaseModel):
    """Output of grid structure inference."""

    model_config = ConfigDict(extra="forbid")

    rulings: int = 0
    full_lines: int = 0
    half_lines: int = 0
    singular_estimates: list[tuple[float, float]] = Field(default_factory=list)
    fans: list[FanReport] = Field(default_factory=list)
    strip: StripReport | None = None
    admissible: Literal["undetermined"] = "undetermined"
    classification: Classification | None = None
    violations: list[str] = Field(default_factory=list)
