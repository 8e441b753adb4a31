import json
import math

import numpy as np
import pytest

from mongeforge.core.scene import SceneValidationError, evaluate_many
from mongeforge.services.serialization import (
    ParseError,
    emit_scene,
    load_scene,
    parse_scene,
    scene_document,
)
from tests.conftest import SQUARE, half_cone_oracle


def test_parse_full_cone_builder():
    """Test a full cone builder document with the bare-list kappa shorthand."""
    scene = parse_scene('{"builder": "full_cone", "vertex": [1, 0], "kappa": [{"k": 0, "a": 1}]}')
    assert len(scene.singularities) == 1
    assert evaluate_many(scene, np.array([[4.0, 4.0]])).values[0] == pytest.approx(5.0)


def test_parse_half_cone_builder():
    """Test the half-cone document against its closed form."""
    text = json.dumps(
        {
            "version": "mongeforge/1",
            "builder": "half_cone",
            "kappa": [],
            "cone_basis": [[{"k": 3, "a": 1}]],
        }
    )
    scene = parse_scene(text)
    pts = np.array([[0.5, 0.5], [1.0, -2.0], [-1.0, 0.3]])
    assert evaluate_many(scene, pts).values == pytest.approx(half_cone_oracle(pts), abs=1e-12)


def test_parse_cylinder_builder():
    """Test a cylinder document whose curvature is anchored at x_b."""
    scene = parse_scene('{"builder": "cylinder", "x_b": 1.0, "kappa": {"coeffs": [2.0]}}')
    pts = np.array([[3.0, 5.0], [-1.0, 0.0]])
    assert evaluate_many(scene, pts).values == pytest.approx((pts[:, 0] - 1.0) ** 2)


def test_parse_two_singular_builder():
    """Test that only the fields a variant accepts are forwarded."""
    scene = parse_scene(
        '{"builder": "two_singular", "variant": 1, "p1": [0, 0], "p2": [1, 0]}'
    )
    assert len(scene.singularities) == 2

    with pytest.raises(ParseError) as exc:
        parse_scene(
            '{"builder": "two_singular", "variant": 4, "p1": [0, 0], "p2": [2, 0],'
            ' "sector1": [3.2, 4.6], "sector2": [0, 1.5], "psi": 0.1}'
        )
    assert exc.value.field == "psi"


def test_parse_polyhedral_builder():
    """Test the polyhedral builder document."""
    scene = parse_scene(json.dumps({"builder": "polyhedral", "vertices": SQUARE}))
    assert {(s.x, s.y) for s in scene.singularities} == set(SQUARE)


def test_parse_errors():
    """Test malformed documents."""
    with pytest.raises(ParseError) as exc:
        parse_scene('{\n  "builder": "full_cone",\n  "kappa": [}')
    assert exc.value.line == 3

    with pytest.raises(ParseError):
        parse_scene("[1, 2]")

    with pytest.raises(ParseError):
        parse_scene('{"pieces": []}')

    with pytest.raises(ParseError) as exc:
        parse_scene('{"builder": "full_cone", "kappa": [], "colour": "red"}')
    assert exc.value.field is not None
    assert "colour" in exc.value.field

    with pytest.raises(ParseError):
        parse_scene('{"builder": "sphere"}')

    with pytest.raises(ParseError):
        parse_scene('{"builder": "polyhedral", "vertices": [[0, 0], [1, 0]]}')


def test_parse_unsupported_version():
    """Test that a future major schema is refused."""
    with pytest.raises(ParseError) as exc:
        parse_scene('{"version": "mongeforge/2", "builder": "full_cone", "kappa": []}')
    assert exc.value.field == "version"


def test_emit_explicit_form(half_cone_scene):
    """Test the emitted document layout."""
    text = emit_scene(half_cone_scene)
    assert text.endswith("}\n")
    data = json.loads(text)
    assert data["version"] == "mongeforge/1"
    assert [p["kind"] for p in data["scene"]["pieces"]] == ["cylindrical", "conical"]
    cylinder = data["scene"]["pieces"][0]
    assert cylinder["profile"]["x_f"] == "-inf"
    assert cylinder["strip"]["c_lo"] is None
    assert data["scene"]["interfaces"]


@pytest.mark.parametrize(
    "fixture",
    ["cone_scene", "half_cone_scene", "cylinder_scene", "square_scene", "sector_pair_scene"],
)
def test_emit_parse_emit_is_stable(fixture, request):
    """Test that re-emitting a parsed explicit document gives the same bytes."""
    scene = request.getfixturevalue(fixture)
    first = emit_scene(scene)
    second = emit_scene(parse_scene(first))
    assert first == second


def test_parse_explicit_scene_derives_interfaces(square_scene):
    """Test that omitted interfaces are derived again."""
    data = scene_document(square_scene).model_dump(mode="json")
    data["scene"]["interfaces"] = None
    scene = parse_scene(json.dumps(data))
    assert len(scene.interfaces) == len(square_scene.interfaces)


def test_parse_explicit_scene_keeps_geo_eps(square_scene):
    """Test that the geometric tolerance travels with the scene document."""
    data = scene_document(square_scene).model_dump(mode="json")
    data["scene"]["geo_eps"] = 1e-7
    scene = parse_scene(json.dumps(data))
    assert scene.geo_eps == 1e-7
    assert json.loads(emit_scene(scene))["scene"]["geo_eps"] == 1e-7

    data["scene"]["interfaces"] = None
    assert parse_scene(json.dumps(data)).geo_eps == 1e-7


def test_parse_explicit_scene_is_validated():
    """Test that explicit scenes must cover the plane."""
    doc = {
        "scene": {
            "pieces": [
                {"kind": "linear", "halfplanes": [{"normal": [1.0, 0.0], "offset": 0.0}]}
            ]
        }
    }
    with pytest.raises(SceneValidationError):
        parse_scene(json.dumps(doc))


def test_parse_periodic_profile_document():
    """Test an explicit full cone with a periodic profile."""
    doc = {
        "scene": {
            "singularities": [[0.0, 0.0]],
            "pieces": [
                {
                    "kind": "conical",
                    "vertex": [0.0, 0.0],
                    "theta_b": 0.0,
                    "theta_f": 2 * math.pi,
                    "u0": 0.0,
                    "profile": {
                        "theta_b": 0.0,
                        "theta_f": None,
                        "alpha_b": 1.0,
                        "dalpha_b": 0.0,
                        "kappa": [{"k": 0, "a": 1.0}],
                    },
                }
            ],
        }
    }
    scene = parse_scene(json.dumps(doc))
    assert evaluate_many(scene, np.array([[0.0, 2.0]])).values[0] == pytest.approx(2.0)


def test_load_scene(temp_dir):
    """Test reading documents from disk."""
    path = temp_dir / "cone.json"
    path.write_text('{"builder": "full_cone", "kappa": [{"k": 0, "a": 1}]}')
    assert len(load_scene(path).pieces) == 1

    with pytest.raises(ParseError):
        load_scene(temp_dir / "missing.json")


def test_parse_two_singular_missing_parameter():
    """Test that a variant's required points must be given."""
    with pytest.raises(ParseError) as exc:
        parse_scene('{"builder": "two_singular", "variant": 1, "p1": [0, 0]}')
    assert exc.value.field == "p2"
