"""Scene document models.

A document either invokes a builder (``{"builder": ..., ...params}``) or spells out a scene
(``{"scene": {...}}``). Infinite strip bounds are ``null``; infinite profile ends are the strings
``"-inf"`` / ``"inf"`` and a ``null`` profile end means the whole line (or a periodic cone).
"""

import math
from typing import Annotated, Any, Literal

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
)

from ..utils.version import CURRENT_SCHEMA


def _parse_extended(value: Any) -> Any:
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "-inf"):
        return float(value)
    return value


def _dump_extended(value: float) -> float | str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


ExtendedFloat = Annotated[
    float, BeforeValidator(_parse_extended), PlainSerializer(_dump_extended)
]
Pair = tuple[float, float]


class Document(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TermDoc(Document):
    """``a cos k(θ−origin) + b sin k(θ−origin)``."""

    k: float = Field(..., ge=0, description="Frequency")
    a: float = Field(0.0, description="Cosine coefficient")
    b: float = Field(0.0, description="Sine coefficient")


def _terms_shorthand(value: Any) -> Any:
    return {"terms": value} if isinstance(value, list) else value


def _coeffs_shorthand(value: Any) -> Any:
    return {"coeffs": value} if isinstance(value, list) else value


class TrigKappaDoc(Document):
    """Trigonometric curvature; a bare list of terms is accepted."""

    origin: float = 0.0
    terms: list[TermDoc] = Field(default_factory=list)


class PolyKappaDoc(Document):
    """Polynomial curvature in ``x − origin``; a bare list of coefficients is accepted."""

    origin: float = 0.0
    coeffs: list[float] = Field(default_factory=list)


TrigKappa = Annotated[TrigKappaDoc, BeforeValidator(_terms_shorthand)]
PolyKappa = Annotated[PolyKappaDoc, BeforeValidator(_coeffs_shorthand)]


class ConeProfileDoc(Document):
    theta_b: float
    theta_f: float | None = Field(None, description="null for a periodic profile")
    alpha_b: float
    dalpha_b: float
    kappa: TrigKappa


class CylProfileDoc(Document):
    x_b: float
    x_f: ExtendedFloat | None = Field(None, description="null for the whole line")
    alpha_b: float
    dalpha_b: float
    kappa: PolyKappa


class StripDoc(Document):
    normal_theta: float
    c_lo: float | None = None
    c_hi: float | None = None


class HalfPlaneDoc(Document):
    """``normal·p <= offset`` with a unit normal."""

    normal: Pair
    offset: float


class ConicalDoc(Document):
    kind: Literal["conical"] = "conical"
    vertex: Pair
    theta_b: float
    theta_f: float
    u0: float
    profile: ConeProfileDoc


class CylindricalDoc(Document):
    kind: Literal["cylindrical"] = "cylindrical"
    frame_theta: float
    strip: StripDoc
    v0: float
    base: float = 0.0
    profile: CylProfileDoc


class LinearDoc(Document):
    kind: Literal["linear"] = "linear"
    gradient: Pair = (0.0, 0.0)
    constant: float = 0.0
    halfplanes: list[HalfPlaneDoc] = Field(default_factory=list)


PieceDoc = Annotated[ConicalDoc | CylindricalDoc | LinearDoc, Field(discriminator="kind")]


class LineDoc(Document):
    type: Literal["line"] = "line"
    normal_theta: float
    offset: float


class RayDoc(Document):
    type: Literal["ray"] = "ray"
    origin: Pair
    theta: float


class SegmentDoc(Document):
    type: Literal["segment"] = "segment"
    a: Pair
    b: Pair


GeometryDoc = Annotated[LineDoc | RayDoc | SegmentDoc, Field(discriminator="type")]


class InterfaceDoc(Document):
    a: int = Field(..., ge=0)
    b: int = Field(..., ge=0)
    geometry: GeometryDoc


class SceneBody(Document):
    geo_eps: float = Field(1e-9, gt=0)
    singularities: list[Pair] = Field(default_factory=list)
    pieces: list[PieceDoc] = Field(..., min_length=1)
    interfaces: list[InterfaceDoc] | None = Field(
        None, description="Derived from the pieces when omitted"
    )


class AffineDoc(Document):
    gradient: Pair = (0.0, 0.0)
    constant: float = 0.0


class VersionedDoc(Document):
    version: str = Field(str(CURRENT_SCHEMA), description="Schema version, 'mongeforge/<major>'")


class SceneDocument(VersionedDoc):
    """Explicit scene; the form ``emit_scene`` writes."""

    scene: SceneBody


class CylinderBuilderDoc(VersionedDoc):
    builder: Literal["cylinder"]
    frame_theta: float = 0.0
    v0: float = 0.0
    base: float = 0.0
    x_b: float = 0.0
    alpha_b: float = 0.0
    dalpha_b: float = 0.0
    kappa: PolyKappa


class FullConeBuilderDoc(VersionedDoc):
    builder: Literal["full_cone"]
    vertex: Pair = (0.0, 0.0)
    u0: float = 0.0
    kappa: TrigKappa


class HalfConeBuilderDoc(VersionedDoc):
    """Cylinder curvature coefficients are in the offset from the line ``r``."""

    builder: Literal["half_cone"]
    vertex: Pair = (0.0, 0.0)
    line_theta: float = math.pi / 2
    kappa: PolyKappa
    alpha_b: float = 0.0
    dalpha_b: float = 0.0
    v0: float = 0.0
    base: float = 0.0
    cone_basis: list[TrigKappa] | None = None


class TwoSingularBuilderDoc(VersionedDoc):
    """Parameters are passed to the variant's builder; only those set are forwarded."""

    builder: Literal["two_singular"]
    variant: int = Field(..., ge=1, le=4)
    p1: Pair | None = None
    p2: Pair | None = None
    line_theta: float | None = None
    line_theta2: float | None = None
    psi: float | None = None
    psi2: float | None = None
    psi1: float | None = None
    a: float | None = None
    b: float | None = None
    linear_gradient: Pair | None = None
    cyl_kappa: PolyKappa | None = None
    alpha_b: float | None = None
    dalpha_b: float | None = None
    v0: float | None = None
    base: float | None = None
    sector1: Pair | None = None
    sector2: Pair | None = None
    linear: AffineDoc | None = None
    bases: list[list[TrigKappa] | None] | None = None


class PolyhedralBuilderDoc(VersionedDoc):
    builder: Literal["polyhedral"]
    vertices: list[Pair] = Field(..., min_length=3)
    kappa_bases: list[list[TrigKappa] | None] | None = None


BuilderDoc = Annotated[
    CylinderBuilderDoc
    | FullConeBuilderDoc
    | HalfConeBuilderDoc
    | TwoSingularBuilderDoc
    | PolyhedralBuilderDoc,
    Field(discriminator="builder"),
]
