#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
評估服務：每組檔案的 JSON 報告、oracle 遮罩估計器與 β 掃描
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.algorithms.metrics import dcf_breakdown, energy_vad, erle, ser
from src.algorithms.stft import analyze_full, as_samples
from src.models.configs import PipelineConfig, StftConfig
from src.models.dfsmn_model import DfsmnModel, MaskSet
from src.services.pipeline import run_pipeline

logger = logging.getLogger(__name__)

SWEEP_BETAS = (0.1, 0.2, 0.4, 0.6, 0.8)


@dataclass
class EvaluationReport:
    """單組檔案的評估結果；未計算的項目為 None"""

    erle_db: Optional[float] = None
    dcf: Optional[float] = None
    p_false: Optional[float] = None
    p_miss: Optional[float] = None
    ser_db: Optional[float] = None

    def to_dict(self) -> dict:
        data = asdict(self)
        # JSON 不支援 inf
        if data['ser_db'] is not None and not np.isfinite(data['ser_db']):
            data['ser_db'] = None if np.isnan(data['ser_db']) else ('inf' if data['ser_db'] > 0 else '-inf')
        return data


def evaluate_pair(mic=None, processed=None, decisions=None, truth=None, speech=None, echo=None,
                  threshold_db: float = -30.0, hangover_frames: int = 0) -> EvaluationReport:
    """依提供的輸入計算 ERLE、DCF、SER

    decisions 未提供但有 processed 與 truth 時，以 energy_vad(processed) 產生決策。
    """
    report = EvaluationReport()
    if mic is not None and processed is not None:
        report.erle_db = erle(mic, processed)
    if truth is not None:
        if decisions is None and processed is not None:
            decisions = energy_vad(processed, threshold_db, hangover_frames)
        if decisions is not None:
            result = dcf_breakdown(decisions, truth)
            report.dcf, report.p_false, report.p_miss = result.dcf, result.p_false, result.p_miss
    if speech is not None and echo is not None:
        report.ser_db = ser(speech, echo)
    return report


class OracleMaskEstimator:
    """由已知近端語音計算理想遮罩

    M_x = |S| / |X_laec|，M_r = |X_laec − S| / |X_laec|，皆截在 [0, 1]；
    leak 加在 M_x 上，讓遠端單講時 Wiener 遮罩不至於恆為 0。
    """

    def __init__(self, speech, stft_config: Optional[StftConfig] = None, leak: float = 0.0,
                 floor: float = 1e-10):
        self.stft_config = stft_config or StftConfig()
        self.frames = analyze_full(as_samples(speech), self.stft_config)
        self.leak = leak
        self.floor = floor
        self.index = 0

    def forward(self, ref_f, mic_f, laec_f) -> MaskSet:
        speech_f = self.frames[self.index] if self.index < len(self.frames) else np.zeros_like(laec_f)
        self.index += 1
        magnitude = np.maximum(np.abs(laec_f), self.floor)
        m_x = np.clip(np.abs(speech_f) / magnitude + self.leak, 0.0, 1.0)
        m_r = np.clip(np.abs(laec_f - speech_f) / magnitude, 0.0, 1.0)
        return MaskSet(stage_masks=(), m_x=m_x, m_r=m_r)

    def reset(self):
        self.index = 0


def beta_sweep(reference, mic, speech=None, betas: Sequence[float] = SWEEP_BETAS,
               model: Optional[DfsmnModel] = None, config: Optional[PipelineConfig] = None,
               leak: float = 0.05) -> List[Dict[str, float]]:
    """遠端單講片段上各 β 的 ERLE；所有 β 共用一次前向傳遞

    未提供模型時使用 oracle 遮罩（speech 預設為零，即純遠端單講）。
    """
    config = config or PipelineConfig()
    mic_data = as_samples(mic)
    estimator = None
    if model is None:
        speech_data = np.zeros(mic_data.size) if speech is None else as_samples(speech)
        estimator = OracleMaskEstimator(speech_data, config.stft, leak=leak)

    named = {f'beta_{beta:g}': float(beta) for beta in betas}
    result = run_pipeline(config, reference, mic_data, model=model, mask_estimator=estimator, betas=named)
    rows = []
    for name, beta in named.items():
        value = erle(mic_data, result.outputs[name])
        rows.append({'beta': beta, 'erle_db': value})
        logger.info(f"[METRICS] beta={beta:g}: ERLE {value:.2f} dB")
    return rows
