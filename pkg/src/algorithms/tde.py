#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
時間延遲估計（GCC-PHAT）

每個區塊拿 4096 點參考訊號，與長度 4096 + max_lag 的麥克風片段做
PHAT 加權互相關，所有區塊的相關圖平均後在 [0, max_lag] 取峰值。
只搜尋非負延遲（麥克風永遠落後參考訊號）。
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import fft as sp_fft

from src.algorithms.stft import as_samples
from src.models.configs import SAMPLE_RATE_HZ
from src.utils.errors import DelayEstimationError

logger = logging.getLogger(__name__)

BLOCK_LEN = 4096
BLOCK_HOP = BLOCK_LEN // 2
PHAT_FLOOR = 1e-8
MAX_SEARCH_MS = 1000
# 峰值兩側視為同一主峰的範圍
PEAK_GUARD = 2


@dataclass(frozen=True)
class DelayEstimate:
    """延遲估計結果（delay_samples >= 0 表示麥克風落後）"""

    delay_samples: int
    confidence: float

    def to_dict(self) -> dict:
        return {'delay_samples': self.delay_samples, 'confidence': self.confidence}


def _correlogram(reference: np.ndarray, mic: np.ndarray, max_lag: int) -> np.ndarray:
    nfft = sp_fft.next_fast_len(BLOCK_LEN + max_lag)
    total = np.zeros(max_lag + 1, dtype=np.float64)
    used = 0

    for start in range(0, reference.size - BLOCK_LEN + 1, BLOCK_HOP):
        ref_block = reference[start:start + BLOCK_LEN]
        if not np.any(ref_block):
            continue
        mic_block = mic[start:start + BLOCK_LEN + max_lag]
        if not np.any(mic_block):
            continue

        cross = sp_fft.rfft(mic_block, n=nfft) * np.conj(sp_fft.rfft(ref_block, n=nfft))
        cross /= np.maximum(np.abs(cross), PHAT_FLOOR)
        total += sp_fft.irfft(cross, n=nfft)[:max_lag + 1]
        used += 1

    if used == 0:
        raise DelayEstimationError("no correlation: every block is silent")
    return total / used


def _confidence(magnitude: np.ndarray, peak: int) -> float:
    peak_value = magnitude[peak]
    if peak_value <= 0:
        return 0.0
    rest = magnitude.copy()
    rest[max(0, peak - PEAK_GUARD):peak + PEAK_GUARD + 1] = 0.0
    secondary = float(rest.max()) if rest.size else 0.0
    return float(np.clip(1.0 - secondary / peak_value, 0.0, 1.0))


def estimate_delay(reference, mic, max_delay_ms: int = 500,
                   sample_rate_hz: int = SAMPLE_RATE_HZ) -> DelayEstimate:
    """估計麥克風相對參考訊號的延遲（樣本數）"""
    ref = as_samples(reference)
    mic_data = as_samples(mic)

    if ref.size < sample_rate_hz or mic_data.size < sample_rate_hz:
        raise DelayEstimationError(
            f"buffers too short for delay estimation: need >= {sample_rate_hz} samples, "
            f"got reference={ref.size}, mic={mic_data.size}")
    if not 0 <= max_delay_ms <= MAX_SEARCH_MS:
        raise DelayEstimationError(f"max_delay_ms must be in [0, {MAX_SEARCH_MS}], got {max_delay_ms}")
    if not np.any(ref) or not np.any(mic_data):
        raise DelayEstimationError("no correlation: all-zero input")

    max_lag = int(round(max_delay_ms * sample_rate_hz / 1000))
    magnitude = np.abs(_correlogram(ref, mic_data, max_lag))
    peak = int(np.argmax(magnitude))
    estimate = DelayEstimate(delay_samples=peak, confidence=_confidence(magnitude, peak))

    logger.info(f"[TDE] Estimated delay {peak} samples "
                f"({peak * 1000.0 / sample_rate_hz:.1f} ms), confidence {estimate.confidence:.3f}")
    return estimate


def align(reference, mic, delay: DelayEstimate) -> Tuple[np.ndarray, np.ndarray]:
    """把參考訊號往後移 delay_samples（前端補零），兩者截成相同長度"""
    ref = as_samples(reference)
    mic_data = as_samples(mic)
    shifted = np.concatenate([np.zeros(delay.delay_samples), ref]) if delay.delay_samples else ref
    length = min(shifted.size, mic_data.size)
    return shifted[:length].copy(), mic_data[:length].copy()
