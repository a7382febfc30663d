#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import os
from typing import Dict, Mapping, Optional

from dotenv import dotenv_values, load_dotenv

from src.models.configs import LaecConfig, OUTPUT_SELECTIONS, PipelineConfig, PwfConfig, StftConfig
from src.utils.errors import ConfigError

load_dotenv()


class Config:
    """應用程式配置類（環境變數）"""

    # 模型與管線預設值
    MODEL_PATH = os.getenv('AEC_MODEL_PATH')
    MAX_DELAY_MS = int(os.getenv('AEC_MAX_DELAY_MS', '500'))
    BETA_VAD = float(os.getenv('AEC_BETA_VAD', '0.6'))
    BETA_ASR = float(os.getenv('AEC_BETA_ASR', '0.2'))
    OUTPUTS = os.getenv('AEC_OUTPUTS', 'both')

    # 日誌
    LOG_LEVEL = os.getenv('AEC_LOG_LEVEL', 'INFO')

    # Flask 設定
    DEBUG = os.getenv('FLASK_DEBUG', 'False').lower() == 'true'
    MAX_UPLOAD_MB = int(os.getenv('AEC_MAX_UPLOAD_MB', '50'))
    MAX_CONTENT_LENGTH = MAX_UPLOAD_MB * 1024 * 1024

    @classmethod
    def validate_config(cls):
        """驗證配置值"""
        errors = []

        if cls.OUTPUTS not in OUTPUT_SELECTIONS:
            errors.append(f"AEC_OUTPUTS must be one of {OUTPUT_SELECTIONS}")

        if cls.BETA_VAD < 0 or cls.BETA_ASR < 0:
            errors.append("AEC_BETA_VAD / AEC_BETA_ASR must be >= 0")

        if not 0 <= cls.MAX_DELAY_MS <= 1000:
            errors.append("AEC_MAX_DELAY_MS must be in [0, 1000]")

        if errors:
            raise ConfigError(f"invalid configuration: {', '.join(errors)}")

        return True


class DevelopmentConfig(Config):
    """開發環境配置"""
    DEBUG = True


class ProductionConfig(Config):
    """生產環境配置"""
    DEBUG = False

    @classmethod
    def validate_config(cls):
        super().validate_config()

        if not cls.MODEL_PATH:
            raise ConfigError("production requires AEC_MODEL_PATH")
        if not os.path.isfile(cls.MODEL_PATH):
            raise ConfigError(f"AEC_MODEL_PATH does not exist: {cls.MODEL_PATH}")


class TestingConfig(Config):
    """測試環境配置"""
    TESTING = True
    MODEL_PATH = None


config_map = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(config_name=None):
    """獲取指定的配置類"""
    if config_name is None:
        config_name = os.getenv('AEC_ENV', 'default')

    return config_map.get(config_name, DevelopmentConfig)


def _parse_bool(value: str) -> bool:
    lowered = str(value).strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: {value}")


# 設定檔鍵值 -> (區段, 欄位, 型別)
PIPELINE_KEYS = {
    'stft.sample_rate_hz': ('stft', 'sample_rate_hz', int),
    'stft.frame_len': ('stft', 'frame_len', int),
    'stft.hop': ('stft', 'hop', int),
    'stft.fft_size': ('stft', 'fft_size', int),
    'laec.taps': ('laec', 'taps', int),
    'laec.step_size': ('laec', 'step_size', float),
    'laec.regularization': ('laec', 'regularization', float),
    'laec.norm_cap': ('laec', 'norm_cap', float),
    'laec.power_smoothing': ('laec', 'power_smoothing', float),
    'pwf.beta_vad': ('pwf', 'beta_vad', float),
    'pwf.beta_asr': ('pwf', 'beta_asr', float),
    'pwf.denom_floor': ('pwf', 'denom_floor', float),
    'tde.max_delay_ms': ('pipeline', 'max_delay_ms', int),
    'tde.enabled': ('pipeline', 'tde_enabled', _parse_bool),
    'model.path': ('pipeline', 'model_path', str),
    'output.select': ('pipeline', 'outputs', str),
    'output.mask_mode': ('pipeline', 'mask_mode', str),
}


def _apply(sections: Dict[str, dict], key: str, raw, source: str):
    if key not in PIPELINE_KEYS:
        raise ConfigError(f"{source}: unknown configuration key '{key}'")
    section, name, cast = PIPELINE_KEYS[key]
    if raw is None:
        raise ConfigError(f"{source}: key '{key}' has no value")
    try:
        sections[section][name] = cast(raw) if isinstance(raw, str) else raw
    except ValueError as e:
        raise ConfigError(f"{source}: cannot parse '{key}={raw}' ({e})") from e


def load_pipeline_config(path: Optional[str] = None, overrides: Optional[Mapping[str, object]] = None,
                         base=None) -> PipelineConfig:
    """預設值（環境變數）→ key=value 設定檔 → 覆寫值（CLI 參數），後者優先"""
    base = base or get_config()
    sections = {
        'stft': {},
        'laec': {},
        'pwf': {'beta_vad': base.BETA_VAD, 'beta_asr': base.BETA_ASR},
        'pipeline': {'max_delay_ms': base.MAX_DELAY_MS, 'outputs': base.OUTPUTS,
                     'model_path': base.MODEL_PATH},
    }

    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        for key, raw in dotenv_values(path).items():
            _apply(sections, key, raw, path)

    for key, raw in (overrides or {}).items():
        if raw is not None:
            _apply(sections, key, raw, 'override')

    try:
        stft_config = StftConfig(**sections['stft'])
        laec_values = {'bins': stft_config.bins(), **sections['laec']}
        return PipelineConfig(stft=stft_config, laec=LaecConfig(**laec_values),
                              pwf=PwfConfig(**sections['pwf']), **sections['pipeline'])
    except TypeError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
