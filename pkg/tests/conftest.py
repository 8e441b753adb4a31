import math
import os
from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest
from _pytest.fixtures import FixtureRequest
from hypothesis import settings

from mongeforge.core.builders import (
    build_cylinder,
    build_full_cone,
    build_half_cone,
    build_polyhedral,
    build_two_singular,
)
from mongeforge.core.profile import CylProfile, PolySeries, TrigSeries
from mongeforge.core.scene import Scene
from mongeforge.models.config import MongeForgeConfig

settings.register_profile("mongeforge", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("mongeforge")

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def half_cone_oracle(pts: np.ndarray) -> np.ndarray:
    """``-x³/(2(x²+y²))`` for ``x >= 0`` and ``0`` for ``x < 0``."""
    x, y = pts[:, 0], pts[:, 1]
    return np.where(x >= 0, -(x**3) / (2.0 * (x**2 + y**2)), 0.0)


@pytest.fixture
def temp_dir(tmp_path: Path) -> Path:
    """Provide a temporary directory for tests."""
    return tmp_path


@pytest.fixture
def config() -> MongeForgeConfig:
    """Provide a configuration with light sampling."""
    return MongeForgeConfig(
        samples=2000,
        interface_samples=30,
        trace_seeds=16,
        circle_samples=64,
        threads=1,
    )


@pytest.fixture
def cone_scene() -> Scene:
    """Distance cone ``u = |p|``."""
    return build_full_cone((0.0, 0.0), 0.0, TrigSeries.constant(1.0))


@pytest.fixture
def half_cone_scene() -> Scene:
    """Zero on ``x < 0``, the cone with κ = cos 3θ on ``x > 0``."""
    profile = CylProfile(0.0, None, 0.0, 0.0, PolySeries())
    return build_half_cone(
        (0.0, 0.0), math.pi / 2, profile, cone_kappa_basis=[TrigSeries.of((3.0, 1.0, 0.0))]
    )


@pytest.fixture
def cylinder_scene() -> Scene:
    """``u = x²``."""
    return build_cylinder(0.0, 0.0, CylProfile(0.0, None, 0.0, 0.0, PolySeries((2.0,))))


@pytest.fixture
def square_scene() -> Scene:
    """Zero on the unit square, one cone per exterior sector."""
    return build_polyhedral(SQUARE)


@pytest.fixture
def strip_pair_scene() -> Scene:
    """Two singular points on the lines bounding the strip ``0 < x < 1``."""
    return build_two_singular(1, p1=(0.0, 0.0), p2=(1.0, 0.0))


@pytest.fixture
def sector_pair_scene() -> Scene:
    """Two opposite quarter-plane cones on a zero background."""
    return build_two_singular(
        4,
        p1=(0.0, 0.0),
        sector1=(math.pi, 1.5 * math.pi),
        p2=(2.0, 0.0),
        sector2=(0.0, 0.5 * math.pi),
    )


@pytest.fixture
def env_vars(request: FixtureRequest) -> Generator[None, None, None]:
    """Set environment variables for tests."""
    old_environ = dict(os.environ)

    os.environ.update({"MONGEFORGE_THREADS": "3"})

    yield

    os.environ.clear()
    os.environ.update(old_environ)
