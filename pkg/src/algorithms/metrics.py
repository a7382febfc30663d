#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
評估指標：ERLE、SER、能量 VAD、DCF
"""

import logging
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from src.algorithms.stft import as_samples
from src.models.configs import StftConfig
from src.utils.errors import AecError, ShapeMismatchError

logger = logging.getLogger(__name__)

ERLE_CLAMP_DB = 120.0
SILENCE_FLOOR_DBFS = -90.0
DCF_W_FALSE = 0.75
DCF_W_MISS = 0.25


def _energy(x: np.ndarray) -> float:
    return float(np.dot(x, x))


def erle(mic, processed) -> float:
    """10·log10(Σ mic² / Σ processed²)；輸出靜音時回傳 120 dB"""
    mic_data = as_samples(mic)
    out = as_samples(processed)
    if mic_data.size != out.size:
        raise ShapeMismatchError(f"length mismatch: mic={mic_data.size}, processed={out.size}")
    mic_energy = _energy(mic_data)
    if mic_energy == 0.0:
        raise AecError("ERLE undefined: mic signal is silent")
    out_energy = _energy(out)
    if out_energy == 0.0:
        return ERLE_CLAMP_DB
    return float(min(10.0 * np.log10(mic_energy / out_energy), ERLE_CLAMP_DB))


def windowed_erle(mic, processed, window: int = 16000) -> np.ndarray:
    """每個完整視窗（預設 1 秒）各算一次 ERLE，用來觀察收斂"""
    mic_data = as_samples(mic)
    out = as_samples(processed)
    count = min(mic_data.size, out.size) // window
    return np.array([erle(mic_data[k * window:(k + 1) * window], out[k * window:(k + 1) * window])
                     for k in range(count)])


def ser(speech, echo) -> float:
    """10·log10(Σ speech² / Σ echo²)；回聲靜音時回傳 +inf"""
    speech_data = as_samples(speech)
    echo_data = as_samples(echo)
    if speech_data.size != echo_data.size:
        raise ShapeMismatchError(f"length mismatch: speech={speech_data.size}, echo={echo_data.size}")
    echo_energy = _energy(echo_data)
    if echo_energy == 0.0:
        return float('inf')
    speech_energy = _energy(speech_data)
    if speech_energy == 0.0:
        raise AecError("SER undefined: speech signal is silent")
    return float(10.0 * np.log10(speech_energy / echo_energy))


def frame_energies_db(signal, hop: Optional[int] = None) -> np.ndarray:
    """以 STFT hop（20 ms）切成不重疊音框的平均能量（dBFS）"""
    data = as_samples(signal)
    hop = hop or StftConfig().hop
    count = -(-data.size // hop)
    padded = np.concatenate([data, np.zeros(count * hop - data.size)])
    power = np.mean(padded.reshape(count, hop) ** 2, axis=1) if count else np.zeros(0)
    return 10.0 * np.log10(power + 1e-20)


def energy_vad(signal, threshold_db: float = -30.0, hangover_frames: int = 0,
               hop: Optional[int] = None) -> np.ndarray:
    """音框能量 >= (第 95 百分位能量 + threshold_db) 即判定為有聲，並延長 hangover 個音框"""
    energies = frame_energies_db(signal, hop)
    if energies.size == 0:
        return np.zeros(0, dtype=bool)
    threshold = np.percentile(energies, 95) + threshold_db
    active = (energies >= threshold) & (energies > SILENCE_FLOOR_DBFS)

    if hangover_frames > 0:
        extended = active.copy()
        remaining = 0
        for index, is_active in enumerate(active):
            if is_active:
                remaining = hangover_frames
            elif remaining > 0:
                extended[index] = True
                remaining -= 1
        active = extended
    return active


@dataclass(frozen=True)
class DcfResult:
    dcf: float
    p_false: float
    p_miss: float

    def to_dict(self) -> dict:
        return asdict(self)


def dcf_breakdown(decisions, truth) -> DcfResult:
    """音框層級的 P_false、P_miss 與 DCF = 0.75·P_false + 0.25·P_miss"""
    decided = np.asarray(decisions).astype(bool).reshape(-1)
    actual = np.asarray(truth).astype(bool).reshape(-1)
    if decided.size != actual.size:
        raise ShapeMismatchError(f"label length mismatch: decisions={decided.size}, truth={actual.size}")

    inactive = int(np.sum(~actual))
    active = int(np.sum(actual))
    if inactive == 0:
        logger.warning("[METRICS] Truth has no inactive frames, P_false set to 0")
        p_false = 0.0
    else:
        p_false = float(np.sum(decided & ~actual)) / inactive
    if active == 0:
        logger.warning("[METRICS] Truth has no active frames, P_miss set to 0")
        p_miss = 0.0
    else:
        p_miss = float(np.sum(~decided & actual)) / active

    return DcfResult(dcf=DCF_W_FALSE * p_false + DCF_W_MISS * p_miss, p_false=p_false, p_miss=p_miss)


def dcf(decisions, truth) -> float:
    return dcf_breakdown(decisions, truth).dcf
