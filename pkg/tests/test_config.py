import pytest
from loguru import logger

from ooscam.config.config import parse_env_int
from ooscam.config.run_config import RunConfig
from ooscam.logging_config import setup_logging
from ooscam.training.cross_entropy import CEConfig


@pytest.mark.parametrize("raw, expected", [
    (None, 7),
    ("", 7),
    ("  12 ", 12),
    ("twelve", 7),
    ("0", 7),
    ("1", 1),
])
def test_parse_env_int(monkeypatch, raw, expected):
    if raw is None:
        monkeypatch.delenv("OOSCAM_TEST_INT", raising=False)
    else:
        monkeypatch.setenv("OOSCAM_TEST_INT", raw)
    assert parse_env_int("OOSCAM_TEST_INT", 7, minimum=1) == expected


def test_run_config_dict_leaves_out_machine_settings():
    cfg = RunConfig(init="random", seed=3, ce=CEConfig.for_init("random", seed=3), workers=8, output_dir="/tmp/x")
    data = cfg.as_dict()
    assert "workers" not in data and "output_dir" not in data
    assert data["seed"] == 3
    assert data["ce"]["sigma_dv"] == 1.0
    assert data["grid"]["fine_step"] == 0.08
    assert data["thresholds"]["p_t"] == 1e-4


@pytest.mark.parametrize("overrides", [{"init": "annealing"}, {"dock_gap": 0.0}, {"t1_offset": -1.0},
                                       {"dv_max": -0.5}])
def test_run_config_validation(overrides):
    with pytest.raises(ValueError):
        RunConfig(**overrides)


def test_setup_logging_writes_the_log_file(tmp_path):
    log_file = tmp_path / "logs" / "run.log"
    setup_logging("debug", str(log_file))
    logger.info("episode finished")
    setup_logging(log_file="")
    text = log_file.read_text(encoding="utf-8")
    assert "Logging at DEBUG" in text
    assert "episode finished" in text
