#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
資料合成與訓練相關的資料模型
"""

from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.models.configs import SAMPLE_RATE_HZ
from src.utils.errors import DatasetError

RT60_RANGE_S = (0.1, 0.8)


@dataclass(frozen=True)
class RoomImpulseResponse:
    """房間脈衝響應（能量正規化為 1）"""

    taps: np.ndarray
    rt60_s: float
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self):
        if not RT60_RANGE_S[0] <= self.rt60_s <= RT60_RANGE_S[1]:
            raise DatasetError(f"rt60 must be in {RT60_RANGE_S}, got {self.rt60_s}")
        if not np.all(np.isfinite(self.taps)):
            raise DatasetError("RIR taps must be finite")


@dataclass(frozen=True)
class SpecAugmentParams:
    """參考特徵的頻率 / 時間遮蔽參數"""

    max_freq_masks: int = 2
    max_freq_width_bins: int = 20
    max_time_masks: int = 2
    max_time_width_frames: int = 10
    rng_seed: Optional[int] = None

    def __post_init__(self):
        values = (self.max_freq_masks, self.max_freq_width_bins,
                  self.max_time_masks, self.max_time_width_frames)
        if min(values) < 0:
            raise DatasetError("SpecAugment counts and widths must be >= 0")


@dataclass(frozen=True)
class MergeSpec:
    """多段語音串接：gaps[i] 是第 i 與 i+1 段之間的位移（負值為重疊、正值為靜音）"""

    utterances: Tuple[np.ndarray, ...]
    gaps: Tuple[int, ...] = ()

    def __post_init__(self):
        if not self.utterances:
            raise DatasetError("merge spec needs at least one utterance")
        if len(self.gaps) != len(self.utterances) - 1:
            raise DatasetError(f"expected {len(self.utterances) - 1} gaps, got {len(self.gaps)}")
        for index, gap in enumerate(self.gaps):
            shorter = min(len(self.utterances[index]), len(self.utterances[index + 1]))
            if gap < 0 and -gap > shorter:
                raise DatasetError(
                    f"invalid overlap of {-gap} samples between utterances {index} and {index + 1} "
                    f"(shorter utterance has {shorter})")


@dataclass(frozen=True)
class PlTargetSpec:
    """漸進式學習各 stage 的目標 SER（dB），最後一個必須是 +inf"""

    stage_ser_db: Tuple[float, ...] = (10.0, 20.0, float('inf'))

    def __post_init__(self):
        values = list(self.stage_ser_db)
        if not values or values[-1] != float('inf'):
            raise DatasetError("last PL stage must be +inf (echo-free target)")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise DatasetError("PL stage SERs must be strictly increasing")

    @property
    def stages(self) -> int:
        return len(self.stage_ser_db)


@dataclass
class ManifestRecord:
    """資料集 manifest 的一筆紀錄（JSON-lines）"""

    mixture_path: str
    reference_path: str
    laec_out_path: str
    residual_echo_path: str
    target_paths: List[str]
    ser_db: float
    seed: int
    speech_path: Optional[str] = None
    rt60_s: Optional[float] = None
    jitter_ms: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'ManifestRecord':
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class TrainingExample:
    """訓練樣本：原始 log-magnitude 特徵 (T, 3·bins) 與各 stage 的理想遮罩"""

    features: np.ndarray
    stage_targets: List[np.ndarray]
    components: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for target in self.stage_targets:
            if target.shape[0] != self.features.shape[0]:
                raise DatasetError("stage target frame count does not match features")
            if np.any(target < 0.0) or np.any(target > 1.0):
                raise DatasetError("ideal masks must lie in [0, 1]")

    @property
    def frames(self) -> int:
        return int(self.features.shape[0])
