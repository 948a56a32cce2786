import json

import pytest

from app.config import (
    DEFAULTS,
    SETTINGS_PATH,
    denoise_config,
    effective_workers,
    load_settings,
    settings_path,
    thread_cap,
)
from solver.denoise import DenoiseMethod
from solver.errors import InvalidSpecError


def test_bundled_settings_match_defaults():
    with open(SETTINGS_PATH) as f:
        assert json.load(f) == DEFAULTS


def test_missing_file_gives_defaults(tmp_path):
    assert load_settings(tmp_path / "nope.json") == DEFAULTS


def test_partial_file_is_merged(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"denoise": {"k": 5}, "log_level": "DEBUG"}))
    settings = load_settings(path)
    assert settings["denoise"]["k"] == 5
    assert settings["denoise"]["lambda"] == DEFAULTS["denoise"]["lambda"]
    assert settings["log_level"] == "DEBUG"
    assert DEFAULTS["denoise"]["k"] == 2


@pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
def test_unreadable_file_is_ignored(tmp_path, content):
    path = tmp_path / "s.json"
    path.write_text(content)
    assert load_settings(path) == DEFAULTS


def test_settings_path_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "alt.json"
    path.write_text(json.dumps({"unwrap": {"zeta": 0.25}}))
    monkeypatch.setenv("MOD1_SETTINGS", str(path))
    assert settings_path() == path
    assert load_settings()["unwrap"]["zeta"] == 0.25
    monkeypatch.delenv("MOD1_SETTINGS")
    assert settings_path() == SETTINGS_PATH


@pytest.mark.parametrize("raw, cap", [("4", 4), ("0", None), ("-2", None), ("many", None), ("", None)])
def test_thread_cap(monkeypatch, raw, cap):
    monkeypatch.setenv("MOD1_THREADS", raw)
    assert thread_cap() == cap


def test_effective_workers(monkeypatch):
    monkeypatch.delenv("MOD1_THREADS", raising=False)
    assert effective_workers(8) == 8
    assert effective_workers(0) == 1
    monkeypatch.setenv("MOD1_THREADS", "3")
    assert effective_workers(8) == 3
    assert effective_workers(2) == 2


def test_denoise_config_overrides():
    cfg = denoise_config(DEFAULTS, seed=7, lam=0.5, k=None, method="phases")
    assert cfg.lam == 0.5
    assert cfg.k == DEFAULTS["denoise"]["k"]
    assert cfg.method is DenoiseMethod.PHASES
    assert cfg.solver.seed == 7
    assert cfg.solver.max_iterations == DEFAULTS["manifold"]["max_iterations"]


def test_denoise_config_rejects_bad_values():
    settings = load_settings(None)
    settings["denoise"]["k"] = 0
    with pytest.raises(InvalidSpecError):
        denoise_config(settings)
