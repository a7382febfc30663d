#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
設定載入測試：環境預設值 → 設定檔 → 命令列覆寫
"""

import pytest

from src import config as app_config
from src.config import get_config, load_pipeline_config
from src.utils.errors import ConfigError


def test_defaults_from_base_config():
    config = load_pipeline_config(base=app_config.TestingConfig)
    assert config.pwf.beta_vad == app_config.TestingConfig.BETA_VAD
    assert config.model_path is None
    assert config.laec.taps == 10
    assert config.stft.bins() == 321


def test_file_values(tmp_path):
    path = tmp_path / 'aec.conf'
    path.write_text("# 管線設定\n"
                    "laec.taps=8\n"
                    "pwf.beta_asr=0.3\n"
                    "tde.enabled=false\n"
                    "output.select=vad\n", encoding='utf-8')
    config = load_pipeline_config(str(path), base=app_config.TestingConfig)
    assert config.laec.taps == 8
    assert config.pwf.beta_asr == 0.3
    assert config.tde_enabled is False
    assert config.active_outputs() == ('vad',)


def test_overrides_win_over_file(tmp_path):
    path = tmp_path / 'aec.conf'
    path.write_text("pwf.beta_vad=0.9\n", encoding='utf-8')
    config = load_pipeline_config(str(path), {'pwf.beta_vad': 0.7, 'tde.max_delay_ms': None},
                                  base=app_config.TestingConfig)
    assert config.pwf.beta_vad == 0.7
    assert config.max_delay_ms == app_config.TestingConfig.MAX_DELAY_MS


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / 'aec.conf'
    path.write_text("laec.tap=8\n", encoding='utf-8')
    with pytest.raises(ConfigError, match="laec.tap"):
        load_pipeline_config(str(path), base=app_config.TestingConfig)


def test_unparsable_value_rejected(tmp_path):
    path = tmp_path / 'aec.conf'
    path.write_text("laec.taps=many\n", encoding='utf-8')
    with pytest.raises(ConfigError):
        load_pipeline_config(str(path), base=app_config.TestingConfig)


def test_invalid_value_rejected():
    with pytest.raises(ConfigError):
        load_pipeline_config(overrides={'stft.sample_rate_hz': 48000}, base=app_config.TestingConfig)
    with pytest.raises(ConfigError):
        load_pipeline_config(overrides={'output.select': 'all'}, base=app_config.TestingConfig)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_pipeline_config(str(tmp_path / 'missing.conf'), base=app_config.TestingConfig)


def test_get_config():
    assert get_config('testing') is app_config.TestingConfig
    assert get_config('production') is app_config.ProductionConfig
    assert get_config('unknown') is app_config.DevelopmentConfig


def test_production_requires_model(monkeypatch):
    monkeypatch.setattr(app_config.ProductionConfig, 'MODEL_PATH', None)
    with pytest.raises(ConfigError):
        app_config.ProductionConfig.validate_config()


def test_validate_rejects_bad_outputs(monkeypatch):
    monkeypatch.setattr(app_config.TestingConfig, 'OUTPUTS', 'all')
    with pytest.raises(ConfigError):
        app_config.TestingConfig.validate_config()


if __name__ == "__main__":
    test_defaults_from_base_config()
    test_get_config()
    print("🎉 設定測試完成")
