#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
各模組的設定資料模型
"""

from dataclasses import dataclass, field, asdict, replace
from typing import Optional, Tuple

import numpy as np
from scipy.signal import get_window

from src.utils.errors import ConfigError

SAMPLE_RATE_HZ = 16000
OUTPUT_SELECTIONS = ('vad', 'asr', 'both')
MASK_MODES = ('pwf', 'mx')


@dataclass(frozen=True)
class StftConfig:
    """STFT 參數：40 ms 音框、20 ms 位移、640 點 FFT、週期性 Hann 窗"""

    sample_rate_hz: int = SAMPLE_RATE_HZ
    frame_len: int = 640
    hop: int = 320
    fft_size: int = 640
    window: str = 'hann'

    def __post_init__(self):
        if self.sample_rate_hz != SAMPLE_RATE_HZ:
            raise ConfigError(f"sample rate must be {SAMPLE_RATE_HZ} Hz, got {self.sample_rate_hz}")
        if self.hop * 2 != self.frame_len:
            raise ConfigError("hop must be frame_len / 2")
        if self.fft_size < self.frame_len:
            raise ConfigError("fft_size must be >= frame_len")
        if self.window != 'hann':
            raise ConfigError(f"unsupported window '{self.window}'")

    def bins(self) -> int:
        return self.fft_size // 2 + 1

    def analysis_window(self) -> np.ndarray:
        # scipy 預設 fftbins=True，即週期性 Hann
        return get_window(self.window, self.frame_len).astype(np.float64)

    @property
    def latency_samples(self) -> int:
        return self.frame_len - self.hop

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LaecConfig:
    """線性 AEC（每頻帶多 tap NLMS）參數"""

    taps: int = 10
    step_size: float = 0.5
    regularization: float = 1e-3
    bins: int = 321
    norm_cap: float = 10.0
    power_smoothing: float = 0.99

    def __post_init__(self):
        if self.taps < 1:
            raise ConfigError("laec.taps must be >= 1")
        if not 0.0 < self.step_size <= 1.0:
            raise ConfigError("laec.step_size must be in (0, 1]")
        if self.regularization <= 0.0:
            raise ConfigError("laec.regularization must be > 0")
        if self.norm_cap <= 0.0:
            raise ConfigError("laec.norm_cap must be > 0")
        if not 0.0 <= self.power_smoothing < 1.0:
            raise ConfigError("laec.power_smoothing must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PwfConfig:
    """Wiener 後處理參數（β 分別給 VAD 與 ASR）"""

    beta_vad: float = 0.6
    beta_asr: float = 0.2
    denom_floor: float = 1e-8

    def __post_init__(self):
        if self.beta_vad < 0 or self.beta_asr < 0:
            raise ConfigError("pwf beta must be >= 0")
        if self.denom_floor <= 0:
            raise ConfigError("pwf.denom_floor must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DfsmnConfig:
    """DFSMN 殘餘回聲抑制模型架構"""

    input_dim: int = 963
    hidden_dim: int = 128
    proj_dim: int = 80
    stages: int = 3
    layers_per_stage: int = 3
    lookback_frames: int = 20
    lookahead_frames: int = 0
    bins: int = 321

    def __post_init__(self):
        if self.lookahead_frames != 0:
            raise ConfigError("lookahead_frames must be 0 (strictly causal)")
        if self.stages < 1 or self.layers_per_stage < 1:
            raise ConfigError("stages and layers_per_stage must be >= 1")
        for name in ('input_dim', 'hidden_dim', 'proj_dim', 'bins'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.lookback_frames < 0:
            raise ConfigError("lookback_frames must be >= 0")

    @property
    def num_layers(self) -> int:
        return self.stages * self.layers_per_stage

    def stage_end_layers(self) -> Tuple[int, ...]:
        """每個 stage 最後一層的索引（0-based）"""
        return tuple((s + 1) * self.layers_per_stage - 1 for s in range(self.stages))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'DfsmnConfig':
        return cls(**{k: int(v) for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class TrainConfig:
    """桌面規模訓練參數（SGD + momentum）"""

    learning_rate: float = 1e-3
    momentum: float = 0.9
    epochs: int = 10
    batch_size: int = 8
    rng_seed: int = 0
    stage_loss_weights: Optional[Tuple[float, ...]] = None
    # 批次平均梯度的全域 L2 範數上限；None 表示不裁剪
    grad_clip: Optional[float] = None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ConfigError("grad_clip must be > 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")

    def weights(self, stages: int) -> np.ndarray:
        if self.stage_loss_weights is None:
            return np.ones(stages)
        if len(self.stage_loss_weights) != stages:
            raise ConfigError(f"expected {stages} stage loss weights, got {len(self.stage_loss_weights)}")
        return np.asarray(self.stage_loss_weights, dtype=np.float64)


@dataclass(frozen=True)
class PipelineConfig:
    """端到端系統接線：TDE → 對齊 → LAEC → RES → PWF"""

    stft: StftConfig = field(default_factory=StftConfig)
    laec: LaecConfig = field(default_factory=LaecConfig)
    pwf: PwfConfig = field(default_factory=PwfConfig)
    model_path: Optional[str] = None
    max_delay_ms: int = 500
    tde_enabled: bool = True
    outputs: str = 'both'
    mask_mode: str = 'pwf'

    def __post_init__(self):
        if self.outputs not in OUTPUT_SELECTIONS:
            raise ConfigError(f"output selection must be one of {OUTPUT_SELECTIONS}")
        if self.mask_mode not in MASK_MODES:
            raise ConfigError(f"mask mode must be one of {MASK_MODES}")
        if not 0 <= self.max_delay_ms <= 1000:
            raise ConfigError("tde.max_delay_ms must be in [0, 1000]")
        if self.laec.bins != self.stft.bins():
            raise ConfigError("laec.bins does not match the STFT bin count")

    def active_outputs(self) -> Tuple[str, ...]:
        if self.outputs == 'both':
            return ('vad', 'asr')
        return (self.outputs,)

    def beta_for(self, output: str) -> float:
        return self.pwf.beta_vad if output == 'vad' else self.pwf.beta_asr

    def with_overrides(self, **changes) -> 'PipelineConfig':
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)
