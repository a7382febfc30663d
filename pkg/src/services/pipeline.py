#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
端到端串流管線：TDE → 對齊 → LAEC → RES → PWF → iSTFT

TDE 在串流開始前對整段訊號做一次；之後逐框處理。
所有 β 輸出共用同一次 RES 前向傳遞。
"""

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from src.algorithms.dfsmn import ResEngine
from src.algorithms.laec import LaecState, laec_process
from src.algorithms.pwf import pwf_outputs
from src.algorithms.stft import (
    AnalysisState, SynthesisState, as_samples, flush_padding, istft_push, stft_push
)
from src.algorithms.tde import DelayEstimate, align, estimate_delay
from src.models.configs import PipelineConfig
from src.models.dfsmn_model import DfsmnModel
from src.utils.errors import ShapeMismatchError

logger = logging.getLogger(__name__)


class StreamState:
    """單一串流的所有可變狀態"""

    def __init__(self, config: PipelineConfig, output_names):
        self.config = config
        self.output_names = tuple(output_names)
        self.ref_analysis = AnalysisState(config.stft)
        self.mic_analysis = AnalysisState(config.stft)
        self.laec = LaecState(config.laec)
        self.synthesis = {name: SynthesisState(config.stft) for name in self.output_names}
        self.samples_in = 0
        self.samples_out = 0

    def reset(self):
        self.ref_analysis.reset()
        self.mic_analysis.reset()
        self.laec.reset()
        for state in self.synthesis.values():
            state.reset()
        self.samples_in = 0
        self.samples_out = 0


class AecStream:
    """可分段推入的 AEC 串流

    mask_estimator 需提供 forward(ref_f, mic_f, laec_f) -> MaskSet 與 reset()；
    未提供模型也未提供 estimator 時只做 LAEC。
    """

    def __init__(self, config: Optional[PipelineConfig] = None, model: Optional[DfsmnModel] = None,
                 mask_estimator=None, betas: Optional[Mapping[str, float]] = None):
        self.config = config or PipelineConfig()
        if model is not None and mask_estimator is None:
            if model.config.bins != self.config.stft.bins():
                raise ShapeMismatchError(
                    f"model expects {model.config.bins} bins, STFT produces {self.config.stft.bins()}")
            mask_estimator = ResEngine(model)
        self.mask_estimator = mask_estimator

        if betas is None:
            betas = {name: self.config.beta_for(name) for name in self.config.active_outputs()}
        self.betas = dict(betas)
        self.state = StreamState(self.config, self.betas.keys())

    @property
    def output_names(self):
        return self.state.output_names

    def _process_frame(self, ref_f, mic_f) -> Dict[str, np.ndarray]:
        laec_f = laec_process(self.state.laec, ref_f, mic_f, adapt=True)
        if self.mask_estimator is None:
            spectra = {name: laec_f for name in self.output_names}
        else:
            masks = self.mask_estimator.forward(ref_f, mic_f, laec_f)
            spectra = pwf_outputs(masks, laec_f, self.betas, self.config.pwf.denom_floor,
                                  self.config.mask_mode)
        return {name: istft_push(self.state.synthesis[name], spectra[name]) for name in self.output_names}

    def push(self, ref_chunk, mic_chunk) -> Dict[str, np.ndarray]:
        """推入等長的參考與麥克風片段，回傳各輸出目前完成的樣本"""
        ref_data = as_samples(ref_chunk)
        mic_data = as_samples(mic_chunk)
        if ref_data.size != mic_data.size:
            raise ShapeMismatchError(f"chunk length mismatch: reference={ref_data.size}, mic={mic_data.size}")

        ref_frames = stft_push(self.state.ref_analysis, ref_data)
        mic_frames = stft_push(self.state.mic_analysis, mic_data)
        self.state.samples_in += mic_data.size

        pieces = {name: [] for name in self.output_names}
        for ref_f, mic_f in zip(ref_frames, mic_frames):
            for name, samples in self._process_frame(ref_f, mic_f).items():
                pieces[name].append(samples)

        produced = {name: np.concatenate(chunks) if chunks else np.zeros(0) for name, chunks in pieces.items()}
        if self.output_names:
            self.state.samples_out += produced[self.output_names[0]].size
        return produced

    def flush(self) -> Dict[str, np.ndarray]:
        """補零把剩餘樣本全部輸出，總輸出長度等於總輸入長度"""
        total_in = self.state.samples_in
        already = self.state.samples_out
        padding = flush_padding(total_in, self.config.stft)
        tail = self.push(np.zeros(padding), np.zeros(padding)) if padding else \
            {name: np.zeros(0) for name in self.output_names}
        self.state.samples_in = total_in
        keep = max(0, total_in - already)
        self.state.samples_out = already + keep
        return {name: samples[:keep] for name, samples in tail.items()}

    def reset(self):
        self.state.reset()
        if self.mask_estimator is not None:
            self.mask_estimator.reset()


@dataclass
class PipelineResult:
    outputs: Dict[str, np.ndarray]
    delay: DelayEstimate


def _estimate(config: PipelineConfig, reference: np.ndarray, mic: np.ndarray) -> DelayEstimate:
    if not config.tde_enabled:
        return DelayEstimate(delay_samples=0, confidence=0.0)
    if not np.any(reference) or not np.any(mic):
        logger.warning("[PIPELINE] Silent reference or mic, skipping TDE (delay 0)")
        return DelayEstimate(delay_samples=0, confidence=0.0)
    return estimate_delay(reference, mic, config.max_delay_ms)


def run_pipeline(config: PipelineConfig, reference, mic, model: Optional[DfsmnModel] = None,
                 chunk_size: Optional[int] = None, mask_estimator=None,
                 betas: Optional[Mapping[str, float]] = None,
                 delay: Optional[DelayEstimate] = None) -> PipelineResult:
    """整段處理；chunk_size 指定時以該大小分段推入（結果與一次推入相同）"""
    ref_data = as_samples(reference)
    mic_data = as_samples(mic)
    delay = delay if delay is not None else _estimate(config, ref_data, mic_data)
    if delay.delay_samples:
        logger.info(f"[PIPELINE] Delay {delay.delay_samples} samples (confidence {delay.confidence:.2f})")
    ref_aligned, mic_aligned = align(ref_data, mic_data, delay)

    stream = AecStream(config, model, mask_estimator, betas)
    step = chunk_size or max(mic_aligned.size, 1)
    pieces = {name: [] for name in stream.output_names}
    for start in range(0, mic_aligned.size, step):
        produced = stream.push(ref_aligned[start:start + step], mic_aligned[start:start + step])
        for name, samples in produced.items():
            pieces[name].append(samples)
    for name, samples in stream.flush().items():
        pieces[name].append(samples)

    outputs = {}
    for name, chunks in pieces.items():
        out = np.concatenate(chunks) if chunks else np.zeros(0)
        if out.size < mic_data.size:
            out = np.concatenate([out, np.zeros(mic_data.size - out.size)])
        outputs[name] = out[:mic_data.size]
    return PipelineResult(outputs=outputs, delay=delay)


def stream_process(config: PipelineConfig, reference, mic, model: Optional[DfsmnModel] = None,
                   chunk_size: Optional[int] = None, mask_estimator=None) -> Dict[str, np.ndarray]:
    """回傳 {'vad': ..., 'asr': ...} 中依 output 選擇啟用的部分，長度等於 mic"""
    return run_pipeline(config, reference, mic, model, chunk_size, mask_estimator).outputs
