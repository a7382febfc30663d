#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Wiener 濾波後處理

    M_pwf = (M_x / (M_x + M_r))^2
    X_pwf = M_pwf^beta * X_laec

較大的 beta 抑制較多回聲（給 VAD），較小的 beta 保留語音品質（給 ASR）。
同一個 M_pwf 可以同時產生多個 beta 的輸出。
"""

from typing import Dict, Mapping

import numpy as np

from src.models.dfsmn_model import MaskSet

BETA_PRESETS = {
    'vad': 0.6,
    'asr': 0.2,
    'enhance': 0.4,
}


def wiener_mask(m_x, m_r, floor: float = 1e-8) -> np.ndarray:
    """兩個遮罩都接近零時輸出 0（視為完全抑制）"""
    m_x = np.asarray(m_x, dtype=np.float64)
    m_r = np.asarray(m_r, dtype=np.float64)
    total = m_x + m_r
    out = np.zeros_like(total)
    valid = total > floor
    out[valid] = (m_x[valid] / total[valid]) ** 2
    return np.clip(out, 0.0, 1.0)


def apply_pwf(m_pwf, beta: float, laec_frame) -> np.ndarray:
    """X_pwf = M_pwf^beta * X_laec（0^0 = 1）"""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    return np.power(np.asarray(m_pwf, dtype=np.float64), beta) * np.asarray(laec_frame)


def pwf_outputs(masks: MaskSet, laec_frame, betas: Mapping[str, float],
                floor: float = 1e-8, mask_mode: str = 'pwf') -> Dict[str, np.ndarray]:
    """一次計算所有輸出；mask_mode='mx' 時只用 M_x、不做 Wiener 濾波"""
    if mask_mode == 'mx':
        gain = np.asarray(masks.m_x, dtype=np.float64)
        shared = gain * np.asarray(laec_frame)
        return {name: shared for name in betas}

    m_pwf = wiener_mask(masks.m_x, masks.m_r, floor)
    return {name: apply_pwf(m_pwf, beta, laec_frame) for name, beta in betas.items()}
