import pytest
from pydantic import ValidationError

from mongeforge.models.config import ExportConfig, MongeForgeConfig, load_config


def test_default_config(monkeypatch):
    """Test default configuration values."""
    monkeypatch.delenv("MONGEFORGE_THREADS", raising=False)
    config = MongeForgeConfig()

    assert config.residual_tol == 1e-10
    assert config.grid_residual_tol == 1e-2
    assert config.jump_tol == 1e-9
    assert config.rank_eps_exact == 1e-10
    assert config.rank_eps_grid == 1e-3
    assert config.samples == 10000
    assert config.seed == 0
    assert config.thread_count == 1


def test_custom_config():
    """Test custom configuration values."""
    config = MongeForgeConfig(residual_tol=1e-8, samples=500, seed=7, threads=4)

    assert config.residual_tol == 1e-8
    assert config.samples == 500
    assert config.seed == 7
    assert config.thread_count == 4


def test_invalid_config():
    """Test invalid configuration values."""
    with pytest.raises(ValidationError):
        MongeForgeConfig(residual_tol=0.0)

    with pytest.raises(ValidationError):
        MongeForgeConfig(samples=0)

    with pytest.raises(ValidationError):
        MongeForgeConfig(threads=0)

    with pytest.raises(ValidationError):
        MongeForgeConfig(threads="many")


def test_env_var_resolution(env_vars):
    """Test environment variable resolution."""
    config = MongeForgeConfig(threads="env:MONGEFORGE_THREADS")

    assert config.threads == 3
    assert config.thread_count == 3


def test_extra_fields():
    """Test extra fields are forbidden."""
    with pytest.raises(ValidationError):
        MongeForgeConfig(extra_field="value")


def test_geo_eps_is_not_a_config_field(temp_dir):
    """Test that the geometric tolerance is rejected as a config knob."""
    with pytest.raises(ValidationError):
        MongeForgeConfig(geo_eps=1e-6)

    path = temp_dir / "pyproject.toml"
    path.write_text("[tool.mongeforge]\ngeo_eps = 1e-6\n")
    with pytest.raises(ValidationError):
        load_config(path)


def test_validate_assignment():
    """Test assignment validation."""
    config = MongeForgeConfig(threads=1)

    config.grid_residual_tol = 5e-3
    assert config.grid_residual_tol == 5e-3

    with pytest.raises(ValidationError):
        config.samples = -1


def test_load_config_from_pyproject(temp_dir):
    """Test reading the [tool.mongeforge] table."""
    path = temp_dir / "pyproject.toml"
    path.write_text(
        '[tool.poetry]\nname = "demo"\n\n'
        "[tool.mongeforge]\nresidual_tol = 1e-9\nsamples = 123\nthreads = 2\n"
    )
    config = load_config(path)

    assert config.residual_tol == 1e-9
    assert config.samples == 123
    assert config.thread_count == 2


def test_load_config_defaults(temp_dir):
    """Test defaults when the file or table is missing."""
    assert load_config(None).samples == 10000
    assert load_config(temp_dir / "missing.toml").samples == 10000

    path = temp_dir / "other.toml"
    path.write_text('[tool.other]\nsamples = 5\n')
    assert load_config(path).samples == 10000


def test_export_config():
    """Test export options and bbox validation."""
    cfg = ExportConfig(format="obj")
    assert (cfg.nx, cfg.ny, cfg.clip, cfg.bbox) == (65, 65, 0.0, None)

    with pytest.raises(ValidationError):
        ExportConfig(format="png")

    with pytest.raises(ValidationError):
        ExportConfig(format="svg", bbox=(1.0, 0.0, 0.0, 1.0))

    with pytest.raises(ValidationError):
        ExportConfig(format="csv", nx=1)
