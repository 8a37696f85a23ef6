"""
Configuración: validación, archivo .env, overrides y hash de linaje.
"""

import pytest

from latentroute.config import Settings, get_settings, load_settings, parse_assignments
from latentroute.errors import ConfigError


def test_defaults():
    settings = Settings()
    assert settings.CLEARANCE_THRESHOLD == 0.08
    assert settings.hidden_sizes == [300, 200, 75]
    assert settings.workspace_box == ((-0.8, 0.8), (-0.8, 0.8), (0.0, 1.2))
    assert settings.metrics_bins == [2000, 5000, 10000, 20000]


def test_config_hash_ignores_output_location():
    a = Settings(OUTPUT_DIR="uno", LOG_LEVEL="debug", WORKERS=4)
    b = Settings(OUTPUT_DIR="dos")
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != Settings(SEED=8).config_hash()
    assert len(a.config_hash()) == 64


def test_log_level_is_normalized():
    assert Settings(LOG_LEVEL=" warning ").LOG_LEVEL == "WARNING"


@pytest.mark.parametrize("overrides", [
    {"KNN_K": "0"},
    {"REBALANCE_FRACTION": "1.0"},
    {"LOG_LEVEL": "chatty"},
    {"HIDDEN_SIZES": "16,x"},
    {"WORKSPACE_BOX": "0,1,0,1,1,0"},
    {"METRICS_BINS": "1"},
    {"CLEARANCE_THRESHOLD": "0.02", "COLLISION_MARGIN": "0.02"},
    {"NO_EXISTE": "1"},
])
def test_invalid_overrides(overrides):
    with pytest.raises(ConfigError):
        load_settings(overrides=overrides)


def test_overrides_are_coerced():
    settings = load_settings(overrides={"KNN_K": "5", "ADAPTIVE": "false", "SEED": None})
    assert settings.KNN_K == 5
    assert settings.ADAPTIVE is False
    assert settings.SEED == 7


def test_config_file(tmp_path):
    path = tmp_path / "corrida.env"
    path.write_text("# corrida corta\nSEED=42\nKNN_K=5\n")
    settings = load_settings(str(path))
    assert settings.SEED == 42 and settings.KNN_K == 5
    assert load_settings(str(path), {"SEED": "3"}).SEED == 3


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(str(tmp_path / "nada.env"))
    path = tmp_path / "corrida.env"
    path.write_text("SEMILLA=42\n")
    with pytest.raises(ConfigError) as exc:
        load_settings(str(path))
    assert "SEMILLA" in str(exc.value)
    assert exc.value.exit_code == 2


def test_parse_assignments():
    assert parse_assignments(["KNN_K=5", " SEED = 3 ", "HIDDEN_SIZES=16,8"]) == {
        "KNN_K": "5", "SEED": "3", "HIDDEN_SIZES": "16,8",
    }
    assert parse_assignments(None) == {}
    with pytest.raises(ConfigError):
        parse_assignments(["KNN_K"])
    with pytest.raises(ConfigError):
        parse_assignments(["=5"])


def test_get_settings_is_cached():
    assert get_settings() is get_settings()
    assert get_settings().config_hash() == Settings().config_hash()
