#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
串流 STFT 分析 / 合成

分析端以 FIFO 累積樣本，每湊滿一個 hop 就輸出一個音框；
合成端以 overlap-add 累加，並用實際累積的窗平方逐點正規化。
分段推入的結果與一次推入完全相同（bit-exact）。
"""

import logging
from typing import List, Optional

import numpy as np
from scipy import fft as sp_fft

from src.models.configs import StftConfig
from src.utils.errors import NonFiniteInputError, ShapeMismatchError

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-10
_NORM_EPS = 1e-12


class AnalysisState:
    """STFT 分析狀態：尚未成框的輸入樣本"""

    def __init__(self, config: Optional[StftConfig] = None):
        self.config = config or StftConfig()
        self.window = self.config.analysis_window()
        self.fifo = np.zeros(0, dtype=np.float64)

    def reset(self):
        self.fifo = np.zeros(0, dtype=np.float64)


class SynthesisState:
    """STFT 合成狀態：overlap-add 累加器與窗平方累加器"""

    def __init__(self, config: Optional[StftConfig] = None):
        self.config = config or StftConfig()
        self.window = self.config.analysis_window()
        self.window_sq = self.window ** 2
        self.accumulator = np.zeros(self.config.frame_len, dtype=np.float64)
        self.norm = np.zeros(self.config.frame_len, dtype=np.float64)

    def reset(self):
        self.accumulator = np.zeros(self.config.frame_len, dtype=np.float64)
        self.norm = np.zeros(self.config.frame_len, dtype=np.float64)


def as_samples(samples) -> np.ndarray:
    """轉成 float64 一維陣列並檢查數值有限"""
    data = np.asarray(samples, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(data)):
        bad = int(np.flatnonzero(~np.isfinite(data))[0])
        raise NonFiniteInputError(f"non-finite sample at index {bad}")
    return data


def stft_push(state: AnalysisState, samples) -> List[np.ndarray]:
    """推入樣本，回傳本次完成的所有音框（每個 321 個複數 bin）"""
    data = as_samples(samples)
    cfg = state.config
    buffer = np.concatenate([state.fifo, data]) if state.fifo.size else data.copy()

    frames = []
    start = 0
    while buffer.size - start >= cfg.frame_len:
        segment = buffer[start:start + cfg.frame_len] * state.window
        frames.append(sp_fft.rfft(segment, n=cfg.fft_size))
        start += cfg.hop

    state.fifo = buffer[start:].copy()
    return frames


def istft_push(state: SynthesisState, frame) -> np.ndarray:
    """推入一個音框，回傳 hop 個已完成的輸出樣本"""
    cfg = state.config
    spectrum = np.asarray(frame)
    if spectrum.shape != (cfg.bins(),):
        raise ShapeMismatchError(f"expected {cfg.bins()} bins, got shape {spectrum.shape}")

    time = sp_fft.irfft(spectrum, n=cfg.fft_size)[:cfg.frame_len] * state.window
    state.accumulator += time
    state.norm += state.window_sq

    head_norm = state.norm[:cfg.hop]
    out = np.zeros(cfg.hop, dtype=np.float64)
    valid = head_norm > _NORM_EPS
    out[valid] = state.accumulator[:cfg.hop][valid] / head_norm[valid]

    state.accumulator = np.concatenate([state.accumulator[cfg.hop:], np.zeros(cfg.hop)])
    state.norm = np.concatenate([state.norm[cfg.hop:], np.zeros(cfg.hop)])
    return out


def log_magnitude(frame) -> np.ndarray:
    """ln(max(|bin|, 1e-10))"""
    return np.log(np.maximum(np.abs(np.asarray(frame)), LOG_FLOOR))


def flush_padding(num_samples: int, config: Optional[StftConfig] = None) -> int:
    """讓前 num_samples 個樣本全部輸出所需補的零數量"""
    cfg = config or StftConfig()
    if num_samples <= 0:
        return 0
    frames_needed = -(-num_samples // cfg.hop)
    required = (frames_needed - 1) * cfg.hop + cfg.frame_len
    return max(0, required - num_samples)


def stft(signal, config: Optional[StftConfig] = None) -> np.ndarray:
    """整段訊號的 STFT，回傳 (frames, bins) 矩陣"""
    cfg = config or StftConfig()
    frames = stft_push(AnalysisState(cfg), signal)
    if not frames:
        return np.zeros((0, cfg.bins()), dtype=np.complex128)
    return np.vstack(frames)


def istft(frames, config: Optional[StftConfig] = None, length: Optional[int] = None) -> np.ndarray:
    """整段 iSTFT；length 指定時截斷或補零到該長度"""
    cfg = config or StftConfig()
    state = SynthesisState(cfg)
    chunks = [istft_push(state, frame) for frame in np.asarray(frames)]
    out = np.concatenate(chunks) if chunks else np.zeros(0)
    if length is not None:
        out = out[:length] if out.size >= length else np.concatenate([out, np.zeros(length - out.size)])
    return out


def analyze_full(signal, config: Optional[StftConfig] = None) -> np.ndarray:
    """補零後做 STFT，使 istft(..., length=len(signal)) 可以還原每個樣本"""
    cfg = config or StftConfig()
    data = as_samples(signal)
    padded = np.concatenate([data, np.zeros(flush_padding(data.size, cfg))])
    return stft(padded, cfg)
