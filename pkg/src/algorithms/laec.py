#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
線性 AEC：STFT 域每個頻帶一組多 tap NLMS 濾波器

    E = Y - w^H · R_history
    w <- w + mu · conj(E) · R_history / (||R_history||^2 + delta · P)

P 為每頻帶參考功率的指數平滑值，正規化項因此與音量無關。
濾波器每頻帶範數超過上限時整體縮放回上限。
"""

import logging
from typing import Optional

import numpy as np

from src.algorithms.stft import (
    AnalysisState, SynthesisState, as_samples, flush_padding, istft_push, stft_push
)
from src.models.configs import LaecConfig, StftConfig
from src.utils.errors import NonFiniteInputError, ShapeMismatchError

logger = logging.getLogger(__name__)

_POWER_EPS = 1e-20


class LaecState:
    """單一串流的 LAEC 狀態（濾波器、參考歷史、參考功率）"""

    def __init__(self, config: Optional[LaecConfig] = None):
        self.config = config or LaecConfig()
        self.reset()

    def reset(self):
        shape = (self.config.bins, self.config.taps)
        self.weights = np.zeros(shape, dtype=np.complex128)
        # history[:, 0] 是最新一個參考音框
        self.history = np.zeros(shape, dtype=np.complex128)
        self.ref_power = np.zeros(self.config.bins, dtype=np.float64)
        self.frames_processed = 0

    def copy(self) -> 'LaecState':
        clone = LaecState.__new__(LaecState)
        clone.config = self.config
        clone.weights = self.weights.copy()
        clone.history = self.history.copy()
        clone.ref_power = self.ref_power.copy()
        clone.frames_processed = self.frames_processed
        return clone

    def _restore(self, snapshot: 'LaecState'):
        self.weights = snapshot.weights
        self.history = snapshot.history
        self.ref_power = snapshot.ref_power
        self.frames_processed = snapshot.frames_processed


def _check_frame(frame, bins: int, name: str) -> np.ndarray:
    data = np.asarray(frame, dtype=np.complex128)
    if data.shape != (bins,):
        raise ShapeMismatchError(f"{name} frame must have {bins} bins, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise NonFiniteInputError(f"{name} frame contains non-finite values")
    return data


def laec_process(state: LaecState, ref_frame, mic_frame, adapt: bool = True) -> np.ndarray:
    """處理一個音框，回傳 X_laec；adapt 為 True 時更新濾波器"""
    cfg = state.config
    snapshot = state.copy()
    try:
        ref = _check_frame(ref_frame, cfg.bins, 'reference')
        mic = _check_frame(mic_frame, cfg.bins, 'mic')
    except NonFiniteInputError:
        logger.warning("[LAEC] Non-finite frame rejected, state unchanged")
        raise

    state.history = np.concatenate([ref[:, None], state.history[:, :-1]], axis=1)
    state.ref_power = (cfg.power_smoothing * state.ref_power
                       + (1.0 - cfg.power_smoothing) * np.abs(ref) ** 2)

    echo_estimate = np.sum(np.conj(state.weights) * state.history, axis=1)
    error = mic - echo_estimate

    if adapt:
        energy = np.sum(np.abs(state.history) ** 2, axis=1)
        denom = energy + cfg.regularization * state.ref_power + _POWER_EPS
        step = cfg.step_size * np.conj(error) / denom
        weights = state.weights + step[:, None] * state.history

        norms = np.linalg.norm(weights, axis=1)
        over = norms > cfg.norm_cap
        if np.any(over):
            weights[over] *= (cfg.norm_cap / norms[over])[:, None]
        state.weights = weights

    if not (np.all(np.isfinite(error)) and np.all(np.isfinite(state.weights))):
        state._restore(snapshot)
        logger.warning("[LAEC] Non-finite result, state rolled back")
        raise NonFiniteInputError("LAEC produced non-finite output")

    state.frames_processed += 1
    return error


def laec_signal(reference, mic, config: Optional[LaecConfig] = None,
                stft_config: Optional[StftConfig] = None, adapt: bool = True) -> np.ndarray:
    """對已對齊的時域訊號做 LAEC，輸出長度與輸入相同"""
    ref = as_samples(reference)
    mic_data = as_samples(mic)
    if ref.size != mic_data.size:
        raise ShapeMismatchError(f"length mismatch: reference={ref.size}, mic={mic_data.size}")

    stft_cfg = stft_config or StftConfig()
    state = LaecState(config or LaecConfig(bins=stft_cfg.bins()))
    pad = np.zeros(flush_padding(ref.size, stft_cfg))
    ref_frames = stft_push(AnalysisState(stft_cfg), np.concatenate([ref, pad]))
    mic_frames = stft_push(AnalysisState(stft_cfg), np.concatenate([mic_data, pad]))

    synthesis = SynthesisState(stft_cfg)
    chunks = [istft_push(synthesis, laec_process(state, r, y, adapt=adapt))
              for r, y in zip(ref_frames, mic_frames)]
    out = np.concatenate(chunks) if chunks else np.zeros(0)
    return out[:ref.size]


def laec_residual(echo_recording, reference, config: Optional[LaecConfig] = None) -> np.ndarray:
    """以遠端單講錄音 [R·H_r, R] 跑 LAEC，得到殘餘回聲 R_laec（時域）"""
    residual = laec_signal(reference, echo_recording, config)
    logger.info(f"[LAEC] Residual echo generated for {residual.size} samples")
    return residual
