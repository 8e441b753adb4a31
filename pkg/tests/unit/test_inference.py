import math

import numpy as np
import pytest

from mongeforge.core.analyze import OutsideWindow, ResolutionTooLow, pde_residual
from mongeforge.core.inference import (
    GridField,
    grid_residual_map,
    infer_structure,
    trace_grid_ruling,
    verify_grid,
)

BOX = (-1.0, 1.0, -1.0, 1.0)


def test_grid_field_validation():
    """Test resolution, bbox and sample validation."""
    with pytest.raises(ResolutionTooLow):
        GridField(BOX, 4, 4, np.zeros(16))
    with pytest.raises(ValueError):
        GridField((1.0, 1.0, 0.0, 1.0), 8, 8, np.zeros(64))
    with pytest.raises(ValueError):
        GridField(BOX, 8, 8, np.zeros(10))
    values = np.zeros((8, 8))
    values[3, 3] = np.nan
    with pytest.raises(ValueError):
        GridField(BOX, 8, 8, values)


def test_grid_field_fills_marked_nan():
    """Test that a non-finite sample on a mark is filled from its neighbours."""
    grid = GridField.from_function(
        lambda X, Y: np.where((X == 0) & (Y == 0), np.nan, np.hypot(X, Y)),
        BOX,
        9,
        9,
        marks=[(0.0, 0.0)],
    )
    assert np.all(np.isfinite(grid.values))
    assert grid.singular_points() == pytest.approx(np.zeros((1, 2)))


def test_grid_field_geometry():
    """Test node coordinates and spacing."""
    grid = GridField.from_function(lambda X, Y: X + Y, (0.0, 2.0, 0.0, 1.0), 9, 5)
    assert grid.xs == pytest.approx(np.linspace(0.0, 2.0, 9))
    assert grid.ys == pytest.approx(np.linspace(0.0, 1.0, 5))
    assert grid.spacing == pytest.approx(0.25)
    assert grid.values.shape == (5, 9)
    assert grid.nodes()[1] == pytest.approx([0.25, 0.0])


def test_grid_hessian_and_residual_of_cylinder():
    """Test the interpolated Hessian and residual of u = x²."""
    grid = GridField.from_function(lambda X, Y: X**2, BOX, 33, 33)
    H = grid.spline_hessians(np.array([[0.1, -0.2]]))[0]
    assert H == pytest.approx(np.array([[2.0, 0.0], [0.0, 0.0]]), abs=1e-8)
    assert abs(pde_residual(grid, (0.1, -0.2), h=1e-2)) <= 1e-6


def test_grid_residual_stencil_leaves_window():
    """Test the stencil window check."""
    grid = GridField.from_function(lambda X, Y: X**2, BOX, 33, 33)
    with pytest.raises(OutsideWindow):
        grid.residual_at(np.array([0.999, 0.0]), 1e-2)


def test_infer_structure_needs_resolution():
    """Test the inference resolution floor."""
    grid = GridField.from_function(lambda X, Y: X**2, BOX, 32, 32)
    with pytest.raises(ResolutionTooLow):
        infer_structure(grid)


def test_verify_grid_rejects_convex_paraboloid(config):
    """Test that x² + y² fails grid verification."""
    grid = GridField.from_function(lambda X, Y: X**2 + Y**2, BOX, 65, 65)
    report = verify_grid(grid, config)
    assert not report.passed
    assert report.max_residual == pytest.approx(4.0 / 9.0, rel=1e-3)
    assert report.violations


def test_trace_grid_ruling_outside_window():
    """Test tracing from a point outside the window."""
    grid = GridField.from_function(lambda X, Y: X**2, BOX, 65, 65)
    with pytest.raises(OutsideWindow):
        trace_grid_ruling(grid, np.array([2.0, 0.0]))


def test_trace_grid_ruling_cylinder(config):
    """Test that a ruling of u = x² is a vertical line."""
    grid = GridField.from_function(lambda X, Y: X**2, BOX, 65, 65)
    ruling = trace_grid_ruling(grid, np.array([0.3, 0.1]), config)
    assert ruling.valid
    assert ruling.kind == "line"
    assert abs(math.sin(ruling.geometry.normal.theta)) <= 1e-3


def test_grid_residual_map():
    """Test the per-node residual of a cylinder and a paraboloid."""
    flat = grid_residual_map(GridField.from_function(lambda X, Y: X**2, BOX, 33, 33))
    assert flat.shape == (33, 33)
    assert np.isnan(flat[0, 0])
    assert np.nanmax(np.abs(flat)) <= 1e-8

    bowl = grid_residual_map(GridField.from_function(lambda X, Y: X**2 + Y**2, BOX, 33, 33))
    assert bowl[16, 16] == pytest.approx(4.0 / 9.0, rel=1e-6)
