"""Scene documents: parse builder invocations or explicit scenes, emit the explicit form."""

import inspect
import json
import math
from pathlib import Path
from typing import Any

from pydantic import TypeAdapter, ValidationError

from ..core.builders import (
    TWO_SINGULAR_BUILDERS,
    build_cylinder,
    build_full_cone,
    build_half_cone,
    build_polyhedral,
    build_two_singular,
)
from ..core.plane import (
    ConvexCell,
    Direction,
    Geometry,
    Line,
    Point2,
    Ray,
    Sector,
    Segment,
    Strip,
    unit,
)
from ..core.profile import (
    AffineData,
    ConeProfile,
    CylProfile,
    PolySeries,
    TrigSeries,
    TrigTerm,
)
from ..core.scene import (
    ConicalPiece,
    CylindricalPiece,
    Interface,
    LinearPiece,
    Piece,
    Scene,
    assemble_scene,
    validate_scene,
)
from ..models.documents import (
    BuilderDoc,
    ConeProfileDoc,
    ConicalDoc,
    CylinderBuilderDoc,
    CylindricalDoc,
    CylProfileDoc,
    FullConeBuilderDoc,
    HalfConeBuilderDoc,
    HalfPlaneDoc,
    InterfaceDoc,
    LinearDoc,
    LineDoc,
    PolyhedralBuilderDoc,
    PolyKappaDoc,
    RayDoc,
    SceneBody,
    SceneDocument,
    SegmentDoc,
    StripDoc,
    TermDoc,
    TrigKappaDoc,
    TwoSingularBuilderDoc,
)
from ..utils.logging import get_logger
from ..utils.version import check_schema

logger = get_logger(__name__)

_builder_adapter: TypeAdapter[Any] = TypeAdapter(BuilderDoc)
_RESERVED = {"version", "builder", "variant"}


class ShellError(Exception):
    """Base exception for documents, files and exports."""


class ParseError(ShellError):
    """A document or data file is malformed; ``line`` and ``field`` locate the problem."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


def _pydantic_error(e: ValidationError) -> ParseError:
    first = e.errors()[0]
    field = ".".join(str(part) for part in first["loc"])
    return ParseError(f"{first['msg']}; {e.error_count()} error(s) in document", field=field)


# Document -> domain


def _trig(doc: TrigKappaDoc) -> TrigSeries:
    return TrigSeries(tuple(TrigTerm(t.k, t.a, t.b) for t in doc.terms), doc.origin)


def _poly(doc: PolyKappaDoc, anchor: float = 0.0) -> PolySeries:
    """Coefficients are about ``anchor`` unless the document sets an origin."""
    origin = doc.origin if "origin" in doc.model_fields_set else anchor
    return PolySeries(tuple(doc.coeffs), origin)


def _bases(docs: list[list[TrigKappaDoc] | None] | None) -> list[list[TrigSeries] | None] | None:
    if docs is None:
        return None
    return [None if basis is None else [_trig(k) for k in basis] for basis in docs]


def _geometry(doc: LineDoc | RayDoc | SegmentDoc) -> Geometry:
    if isinstance(doc, LineDoc):
        return Line(Direction(doc.normal_theta), doc.offset)
    if isinstance(doc, RayDoc):
        return Ray(Point2.of(doc.origin), Direction(doc.theta))
    return Segment(Point2.of(doc.a), Point2.of(doc.b))


def _piece(doc: ConicalDoc | CylindricalDoc | LinearDoc) -> Piece:
    if isinstance(doc, ConicalDoc):
        vertex = Point2.of(doc.vertex)
        p = doc.profile
        profile = ConeProfile(p.theta_b, p.theta_f, p.alpha_b, p.dalpha_b, _trig(p.kappa))
        return ConicalPiece(vertex, Sector(vertex, doc.theta_b, doc.theta_f), doc.u0, profile)
    if isinstance(doc, CylindricalDoc):
        q = doc.profile
        strip = Strip(
            Direction(doc.strip.normal_theta),
            -math.inf if doc.strip.c_lo is None else doc.strip.c_lo,
            math.inf if doc.strip.c_hi is None else doc.strip.c_hi,
        )
        profile = CylProfile(q.x_b, q.x_f, q.alpha_b, q.dalpha_b, _poly(q.kappa))
        return CylindricalPiece(doc.frame_theta, strip, doc.v0, profile, doc.base)
    region = ConvexCell(
        tuple((float(h.normal[0]), float(h.normal[1])) for h in doc.halfplanes),
        tuple(float(h.offset) for h in doc.halfplanes),
    )
    return LinearPiece(AffineData(doc.gradient, doc.constant), region)


def scene_from_body(body: SceneBody) -> Scene:
    """Rebuild an explicit scene; listed interfaces are kept verbatim and validated."""
    pieces = [_piece(p) for p in body.pieces]
    singularities = [Point2.of(s) for s in body.singularities]
    if body.interfaces is None:
        return assemble_scene(pieces, singularities, body.geo_eps)
    interfaces = tuple(Interface(f.a, f.b, _geometry(f.geometry)) for f in body.interfaces)
    scene = Scene(tuple(pieces), tuple(singularities), interfaces, body.geo_eps)
    validate_scene(scene)
    return scene


def _two_singular_params(doc: TwoSingularBuilderDoc) -> dict[str, Any]:
    builder = TWO_SINGULAR_BUILDERS[doc.variant]
    accepted = inspect.signature(builder).parameters
    params: dict[str, Any] = {}
    for name in sorted(doc.model_fields_set - _RESERVED):
        if name not in accepted:
            raise ParseError(f"variant {doc.variant} does not take '{name}'", field=name)
        value = getattr(doc, name)
        if name == "cyl_kappa" and value is not None:
            value = _poly(value)
        elif name == "linear" and value is not None:
            value = AffineData(value.gradient, value.constant)
        elif name == "bases" and value is not None:
            value = _bases(value)
        params[name] = value
    for name, param in accepted.items():
        if param.default is inspect.Parameter.empty and params.get(name) is None:
            raise ParseError(f"variant {doc.variant} needs '{name}'", field=name)
    return params


def scene_from_builder(doc: Any) -> Scene:
    """Invoke the builder a document names."""
    if isinstance(doc, CylinderBuilderDoc):
        profile = CylProfile(doc.x_b, None, doc.alpha_b, doc.dalpha_b, _poly(doc.kappa, doc.x_b))
        return build_cylinder(doc.frame_theta, doc.v0, profile, doc.base)
    if isinstance(doc, FullConeBuilderDoc):
        return build_full_cone(doc.vertex, doc.u0, _trig(doc.kappa))
    if isinstance(doc, HalfConeBuilderDoc):
        c0 = float(Point2.of(doc.vertex).as_array() @ unit(doc.line_theta - 0.5 * math.pi))
        profile = CylProfile(c0, None, doc.alpha_b, doc.dalpha_b, _poly(doc.kappa, c0))
        basis = None if doc.cone_basis is None else [_trig(k) for k in doc.cone_basis]
        return build_half_cone(doc.vertex, doc.line_theta, profile, doc.v0, basis, doc.base)
    if isinstance(doc, TwoSingularBuilderDoc):
        return build_two_singular(doc.variant, **_two_singular_params(doc))
    if isinstance(doc, PolyhedralBuilderDoc):
        return build_polyhedral(doc.vertices, _bases(doc.kappa_bases))
    raise ParseError(f"Unknown builder document {type(doc).__name__}", field="builder")


def parse_scene(text: str) -> Scene:
    """Parse a scene document and build the scene it describes.

    Raises:
        ParseError: Malformed JSON, unknown fields or an unsupported schema version.
        SceneValidationError: The described scene breaks an invariant.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(data, dict):
        raise ParseError("A scene document must be a JSON object")

    try:
        if "scene" in data:
            doc: Any = SceneDocument.model_validate(data)
        elif "builder" in data:
            doc = _builder_adapter.validate_python(data)
        else:
            raise ParseError("Document needs a 'builder' or a 'scene' key")
    except ValidationError as e:
        raise _pydantic_error(e) from e

    try:
        check_schema(doc.version)
    except ValueError as e:
        raise ParseError(str(e), field="version") from e

    if isinstance(doc, SceneDocument):
        scene = scene_from_body(doc.scene)
    else:
        scene = scene_from_builder(doc)
    logger.debug(f"Parsed scene with {len(scene.pieces)} pieces")
    return scene


def load_scene(path: Path) -> Scene:
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"Cannot read {path}: {e}") from e
    return parse_scene(text)


# Domain -> document


def _trig_doc(kappa: TrigSeries) -> TrigKappaDoc:
    return TrigKappaDoc(
        origin=kappa.origin, terms=[TermDoc(k=t.freq, a=t.a, b=t.b) for t in kappa.terms]
    )


def _poly_doc(kappa: PolySeries) -> PolyKappaDoc:
    return PolyKappaDoc(origin=kappa.origin, coeffs=list(kappa.coeffs))


def _bound(value: float) -> float | None:
    return None if math.isinf(value) else float(value)


def _geometry_doc(geom: Geometry) -> Any:
    if isinstance(geom, Line):
        return LineDoc(normal_theta=geom.normal.theta, offset=geom.offset)
    if isinstance(geom, Ray):
        return RayDoc(origin=tuple(geom.origin), theta=geom.dir.theta)
    return SegmentDoc(a=tuple(geom.a), b=tuple(geom.b))


def _piece_doc(piece: Piece) -> Any:
    if isinstance(piece, ConicalPiece):
        p = piece.profile
        return ConicalDoc(
            vertex=tuple(piece.vertex),
            theta_b=piece.sector.theta_b,
            theta_f=piece.sector.theta_f,
            u0=piece.u0,
            profile=ConeProfileDoc(
                theta_b=p.theta_b,
                theta_f=p.theta_f,
                alpha_b=p.alpha_b,
                dalpha_b=p.dalpha_b,
                kappa=_trig_doc(p.kappa),
            ),
        )
    if isinstance(piece, CylindricalPiece):
        q = piece.profile
        return CylindricalDoc(
            frame_theta=piece.frame_theta,
            strip=StripDoc(
                normal_theta=piece.strip.normal.theta,
                c_lo=_bound(piece.strip.c_lo),
                c_hi=_bound(piece.strip.c_hi),
            ),
            v0=piece.v0,
            base=piece.base,
            profile=CylProfileDoc(
                x_b=q.x_b,
                x_f=q.x_f,
                alpha_b=q.alpha_b,
                dalpha_b=q.dalpha_b,
                kappa=_poly_doc(q.kappa),
            ),
        )
    return LinearDoc(
        gradient=piece.aff.g,
        constant=piece.aff.c,
        halfplanes=[
            HalfPlaneDoc(normal=n, offset=c)
            for n, c in zip(piece.region.normals, piece.region.offsets, strict=True)
        ],
    )


def scene_document(scene: Scene) -> SceneDocument:
    body = SceneBody(
        geo_eps=scene.geo_eps,
        singularities=[tuple(s) for s in scene.singularities],
        pieces=[_piece_doc(p) for p in scene.pieces],
        interfaces=[
            InterfaceDoc(a=f.a, b=f.b, geometry=_geometry_doc(f.geometry))
            for f in scene.interfaces
        ],
    )
    return SceneDocument(scene=body)


def emit_scene(scene: Scene) -> str:
    """Explicit-form document: sorted keys, 2-space indent, shortest round-trip floats."""
    doc = scene_document(scene)
    return json.dumps(doc.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"
