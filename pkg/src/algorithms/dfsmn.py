#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
串流 DFSMN 推論引擎（殘餘回聲抑制）

每層：
    h = ReLU(W m_prev + b)
    p = V h
    m = m_prev + p + sum_{i=0..L} a_i * p_{t-i}
每個 stage 結束後接 FC + sigmoid 輸出遮罩。
ResState 只保存每層最近 L 個 p 向量，因此逐框推論與整段推論結果完全相同。
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import expit

from src.algorithms.stft import log_magnitude
from src.models.dfsmn_model import DfsmnModel, MaskSet
from src.models.configs import DfsmnConfig
from src.utils.errors import ShapeMismatchError

logger = logging.getLogger(__name__)


class ResState:
    """每層一個環形緩衝區，保存最近 lookback_frames 個投影向量"""

    def __init__(self, config: DfsmnConfig):
        self.config = config
        self.reset()

    def reset(self):
        depth = self.config.lookback_frames
        self.rings = [np.zeros((depth, self.config.proj_dim), dtype=np.float64)
                      for _ in range(self.config.num_layers)]
        self.position = 0
        self.frames_seen = 0

    def history_order(self) -> np.ndarray:
        """由新到舊（t-1, t-2, ...）的環形索引"""
        depth = self.config.lookback_frames
        return (self.position - np.arange(1, depth + 1)) % depth


def res_features(ref_f, mic_f, laec_f) -> np.ndarray:
    """R、Y、X_laec 三者的 log-magnitude 串接"""
    return np.concatenate([log_magnitude(ref_f), log_magnitude(mic_f), log_magnitude(laec_f)])


def _check_shapes(model: DfsmnModel, frames) -> None:
    cfg = model.config
    for name, frame in zip(('reference', 'mic', 'laec'), frames):
        if np.shape(frame) != (cfg.bins,):
            raise ShapeMismatchError(
                f"{name} frame has shape {np.shape(frame)}, model expects ({cfg.bins},)")
    if cfg.input_dim != 3 * cfg.bins:
        raise ShapeMismatchError(
            f"model input_dim {cfg.input_dim} does not match 3 x {cfg.bins} log-magnitude features")


def res_forward(model: DfsmnModel, state: ResState, ref_f, mic_f, laec_f) -> MaskSet:
    """單一音框的前向傳遞，更新 state 並回傳 MaskSet"""
    _check_shapes(model, (ref_f, mic_f, laec_f))
    cfg = model.config
    if state.config != cfg:
        raise ShapeMismatchError("ResState was created for a different model config")
    w = model.compute

    x = (res_features(ref_f, mic_f, laec_f) - w['norm.mean']) / w['norm.std']
    memory = w['input.weight'] @ x + w['input.bias']

    order = state.history_order() if cfg.lookback_frames else None
    stage_ends = cfg.stage_end_layers()
    heads = []
    for layer in range(cfg.num_layers):
        hidden = np.maximum(w[f'layer{layer}.hidden.weight'] @ memory + w[f'layer{layer}.hidden.bias'], 0.0)
        proj = w[f'layer{layer}.project.weight'] @ hidden
        coeffs = w[f'layer{layer}.memory']
        mem = coeffs[:, 0] * proj
        if order is not None:
            past = state.rings[layer][order]
            mem = mem + np.sum(coeffs[:, 1:].T * past, axis=0)
            state.rings[layer][state.position] = proj
        memory = memory + proj + mem

        if layer in stage_ends:
            stage = stage_ends.index(layer)
            heads.append(expit(w[f'head{stage}.weight'] @ memory + w[f'head{stage}.bias']))

    if cfg.lookback_frames:
        state.position = (state.position + 1) % cfg.lookback_frames
    state.frames_seen += 1

    final = heads[-1]
    return MaskSet(stage_masks=tuple(heads[:-1]), m_x=final[:cfg.bins], m_r=final[cfg.bins:])


def res_forward_sequence(model: DfsmnModel, state: ResState, ref_frames: Sequence,
                         mic_frames: Sequence, laec_frames: Sequence) -> List[MaskSet]:
    return [res_forward(model, state, r, y, e) for r, y, e in zip(ref_frames, mic_frames, laec_frames)]


class ResEngine:
    """模型 + 串流狀態，提供管線使用的遮罩估計介面"""

    def __init__(self, model: DfsmnModel, state: Optional[ResState] = None):
        self.model = model
        self.state = state or ResState(model.config)

    def forward(self, ref_f, mic_f, laec_f) -> MaskSet:
        return res_forward(self.model, self.state, ref_f, mic_f, laec_f)

    def reset(self):
        self.state.reset()
