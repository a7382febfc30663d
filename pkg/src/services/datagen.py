#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
資料合成服務

包含三種資料增強（參考訊號 SpecAugment、參考訊號時間抖動、多段語音串接）、
依 SER 混音、合成 RIR、漸進式學習目標，以及整個語料庫的產生流程。
所有隨機行為都由明確的 seed / Generator 決定，可重現。
"""

import logging
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve, firwin, lfilter

from src.algorithms.laec import laec_residual, laec_signal
from src.algorithms.stft import as_samples
from src.database.manifest import ManifestRepository
from src.database.wav_io import write_wav
from src.models.configs import LaecConfig, SAMPLE_RATE_HZ
from src.models.datasets import (
    ManifestRecord, MergeSpec, PlTargetSpec, RoomImpulseResponse, SpecAugmentParams, RT60_RANGE_S
)
from src.utils.errors import DatasetError

logger = logging.getLogger(__name__)

SER_GRID_DB = (-20.0, -10.0, 0.0, 10.0)
MAX_JITTER_MS = 20.0
# exp(-6.908) = 1e-3，即 60 dB 振幅衰減
DECAY_60DB = 6.908


# ---------------------------------------------------------------- SpecAugment

def draw_masks(shape: Tuple[int, int], params: SpecAugmentParams,
               rng: Optional[np.random.Generator] = None):
    """抽出頻率與時間遮蔽矩形，回傳 ([(start, width)], [(start, width)])"""
    frames, bins = shape
    rng = rng if rng is not None else np.random.default_rng(params.rng_seed)

    freq_masks = []
    for _ in range(int(rng.integers(0, params.max_freq_masks + 1))):
        width = int(rng.integers(0, min(params.max_freq_width_bins, bins) + 1))
        start = int(rng.integers(0, bins - width + 1))
        freq_masks.append((start, width))

    time_masks = []
    for _ in range(int(rng.integers(0, params.max_time_masks + 1))):
        width = int(rng.integers(0, min(params.max_time_width_frames, frames) + 1))
        start = int(rng.integers(0, frames - width + 1))
        time_masks.append((start, width))
    return freq_masks, time_masks


def apply_masks(features, freq_masks: Sequence[Tuple[int, int]] = (),
                time_masks: Sequence[Tuple[int, int]] = ()) -> np.ndarray:
    out = np.array(features, dtype=np.float64, copy=True)
    for start, width in freq_masks:
        out[:, start:start + width] = 0.0
    for start, width in time_masks:
        out[start:start + width, :] = 0.0
    return out


def spec_augment(features, params: SpecAugmentParams,
                 rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """只用在 RES 的參考特徵；混音與 LAEC 看到的參考訊號不變"""
    data = np.asarray(features, dtype=np.float64)
    freq_masks, time_masks = draw_masks(data.shape, params, rng)
    return apply_masks(data, freq_masks, time_masks)


# ---------------------------------------------------------------- 時域增強

def jitter_reference(reference, shift_ms: Optional[float] = None,
                     rng: Optional[np.random.Generator] = None,
                     sample_rate_hz: int = SAMPLE_RATE_HZ) -> np.ndarray:
    """參考訊號提前 round(shift_ms·16) 個樣本，尾端補零"""
    data = as_samples(reference)
    if shift_ms is None:
        rng = rng if rng is not None else np.random.default_rng()
        shift_ms = float(rng.uniform(0.0, MAX_JITTER_MS))
    if not 0.0 <= shift_ms <= MAX_JITTER_MS:
        raise DatasetError(f"shift_ms must be in [0, {MAX_JITTER_MS}], got {shift_ms}")

    shift = int(round(shift_ms * sample_rate_hz / 1000.0))
    if shift == 0:
        return data.copy()
    return np.concatenate([data[shift:], np.zeros(min(shift, data.size))])


def merge_utterances(spec: MergeSpec) -> np.ndarray:
    """依 gaps 把各段語音疊加到同一條時間軸；超過 ±1 時做峰值正規化"""
    utterances = [as_samples(u) for u in spec.utterances]
    starts = [0]
    for index, gap in enumerate(spec.gaps):
        starts.append(starts[-1] + utterances[index].size + int(gap))

    length = max(start + u.size for start, u in zip(starts, utterances))
    out = np.zeros(length, dtype=np.float64)
    for start, utterance in zip(starts, utterances):
        out[start:start + utterance.size] += utterance

    peak = float(np.max(np.abs(out))) if out.size else 0.0
    if peak > 1.0:
        out /= peak
    return out


def random_merge_spec(utterances: Sequence[np.ndarray], rng: np.random.Generator,
                      max_overlap_s: float = 0.5, max_gap_s: float = 1.0,
                      sample_rate_hz: int = SAMPLE_RATE_HZ) -> MergeSpec:
    """隨機決定相鄰語音之間的重疊或靜音間隔"""
    gaps = []
    for left, right in zip(utterances, utterances[1:]):
        max_overlap = min(int(max_overlap_s * sample_rate_hz), len(left), len(right))
        max_gap = int(max_gap_s * sample_rate_hz)
        gaps.append(int(rng.integers(-max_overlap, max_gap + 1)))
    return MergeSpec(utterances=tuple(utterances), gaps=tuple(gaps))


# ---------------------------------------------------------------- 混音與目標

def mix_at_ser(speech, echo, ser_db: float) -> Tuple[np.ndarray, float]:
    """縮放語音使 SER 等於 ser_db；回聲保持不變"""
    speech_data = as_samples(speech)
    echo_data = as_samples(echo)
    if speech_data.size != echo_data.size:
        raise DatasetError(f"length mismatch: speech={speech_data.size}, echo={echo_data.size}")
    speech_power = float(np.dot(speech_data, speech_data))
    echo_power = float(np.dot(echo_data, echo_data))
    if speech_power == 0.0 or echo_power == 0.0:
        raise DatasetError("cannot mix at a target SER with a silent input")

    gain = float(np.sqrt(echo_power * 10.0 ** (ser_db / 10.0) / speech_power))
    return gain * speech_data + echo_data, gain


def make_pl_targets(speech_rev, residual_echo, spec: Optional[PlTargetSpec] = None) -> List[np.ndarray]:
    """第 k 個目標 = speech + α_k·residual，α_k 使 SER 等於 stage_ser_db[k]；+inf 即乾淨語音"""
    spec = spec or PlTargetSpec()
    speech = as_samples(speech_rev)
    residual = as_samples(residual_echo)
    if speech.size != residual.size:
        raise DatasetError(f"length mismatch: speech={speech.size}, residual={residual.size}")
    speech_power = float(np.dot(speech, speech))
    if speech_power == 0.0:
        raise DatasetError("cannot build PL targets from silent speech")
    residual_power = float(np.dot(residual, residual))

    targets = []
    for target_ser in spec.stage_ser_db:
        if np.isinf(target_ser) or residual_power == 0.0:
            targets.append(speech.copy())
            continue
        alpha = np.sqrt(speech_power / (residual_power * 10.0 ** (target_ser / 10.0)))
        targets.append(speech + alpha * residual)
    return targets


# ---------------------------------------------------------------- RIR 與合成音源

def decay_envelope(rt60_s: float, num_taps: int, sample_rate_hz: int = SAMPLE_RATE_HZ) -> np.ndarray:
    t = np.arange(num_taps) / sample_rate_hz
    return np.exp(-DECAY_60DB * t / rt60_s)


def synth_rir(rt60_s: float, rng: Optional[np.random.Generator] = None,
              sample_rate_hz: int = SAMPLE_RATE_HZ) -> RoomImpulseResponse:
    """指數衰減白雜訊 RIR，長度涵蓋到 t = rt60，能量正規化為 1"""
    if not RT60_RANGE_S[0] <= rt60_s <= RT60_RANGE_S[1]:
        raise DatasetError(f"rt60 must be in {RT60_RANGE_S}, got {rt60_s}")
    rng = rng if rng is not None else np.random.default_rng()
    num_taps = int(round(rt60_s * sample_rate_hz)) + 1
    taps = rng.standard_normal(num_taps) * decay_envelope(rt60_s, num_taps, sample_rate_hz)
    taps /= np.sqrt(np.dot(taps, taps))
    return RoomImpulseResponse(taps=taps, rt60_s=rt60_s, sample_rate_hz=sample_rate_hz)


def speech_shaped_noise(num_samples: int, rng: np.random.Generator, rms: float = 0.1) -> np.ndarray:
    """一階 AR 濾波的有色雜訊，頻譜向高頻下降"""
    colored = lfilter([1.0], [1.0, -0.95], rng.standard_normal(num_samples))
    return colored * (rms / np.sqrt(np.mean(colored ** 2)))


def synthetic_utterance(duration_s: float, rng: np.random.Generator,
                        sample_rate_hz: int = SAMPLE_RATE_HZ) -> np.ndarray:
    """諧波 + 音節包絡的類語音訊號"""
    n = int(duration_s * sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    f0 = rng.uniform(100.0, 220.0)
    vibrato = 1.0 + 0.03 * np.sin(2 * np.pi * rng.uniform(3.0, 6.0) * t)
    phase = 2 * np.pi * f0 * np.cumsum(vibrato) / sample_rate_hz

    voiced = np.zeros(n)
    for k in range(1, int(4000 // f0) + 1):
        voiced += np.sin(k * phase + rng.uniform(0, 2 * np.pi)) / k
    syllables = np.abs(np.sin(2 * np.pi * rng.uniform(3.0, 5.0) * t / 2 + rng.uniform(0, np.pi)))
    signal = voiced * syllables + 0.05 * speech_shaped_noise(n, rng, rms=1.0) * syllables
    return 0.5 * signal / np.max(np.abs(signal))


def simulate_echo(reference, rir: RoomImpulseResponse, drive: float = 2.0, gain: float = 0.5) -> np.ndarray:
    """喇叭軟削波非線性後再經過房間響應"""
    data = as_samples(reference)
    distorted = np.tanh(drive * data) / drive
    return gain * fftconvolve(distorted, rir.taps)[:data.size]


def _fit_length(signal: np.ndarray, length: int) -> np.ndarray:
    if signal.size >= length:
        return signal[:length]
    return np.concatenate([signal, np.zeros(length - signal.size)])


def _merged_speech(rng: np.random.Generator, duration_s: float, count: int) -> np.ndarray:
    utterances = [synthetic_utterance(rng.uniform(0.6, 1.5), rng) for _ in range(count)]
    merged = merge_utterances(random_merge_spec(utterances, rng))
    return _fit_length(merged, int(duration_s * SAMPLE_RATE_HZ))


def synthesize_example(rng: np.random.Generator, duration_s: float = 4.0,
                       ser_grid: Sequence[float] = SER_GRID_DB,
                       pl_spec: Optional[PlTargetSpec] = None,
                       laec_config: Optional[LaecConfig] = None) -> Dict[str, object]:
    """合成一筆訓練資料的所有訊號"""
    pl_spec = pl_spec or PlTargetSpec()
    reference = _merged_speech(rng, duration_s, count=3)
    rt60_echo = float(rng.uniform(*RT60_RANGE_S))
    echo = simulate_echo(reference, synth_rir(rt60_echo, rng))

    speech_rev = fftconvolve(_merged_speech(rng, duration_s, count=2),
                             synth_rir(float(rng.uniform(*RT60_RANGE_S)), rng).taps)[:reference.size]
    ser_db = float(rng.choice(np.asarray(ser_grid)))
    mixture, gain = mix_at_ser(speech_rev, echo, ser_db)

    jitter_ms = float(rng.uniform(0.0, MAX_JITTER_MS))
    reference_jittered = jitter_reference(reference, jitter_ms)
    laec_out = laec_signal(reference_jittered, mixture, laec_config)
    residual = laec_residual(echo, reference_jittered, laec_config)
    speech_scaled = gain * speech_rev

    return {
        'reference': reference_jittered,
        'mixture': mixture,
        'laec_out': laec_out,
        'residual_echo': residual,
        'speech': speech_scaled,
        'targets': make_pl_targets(speech_scaled, residual, pl_spec),
        'ser_db': ser_db,
        'rt60_s': rt60_echo,
        'jitter_ms': jitter_ms,
    }


def build_corpus(out_dir: str, n_examples: int, seed: int = 0, duration_s: float = 4.0,
                 ser_grid: Sequence[float] = SER_GRID_DB,
                 pl_spec: Optional[PlTargetSpec] = None,
                 laec_config: Optional[LaecConfig] = None) -> ManifestRepository:
    """產生語料庫 WAV 與 manifest.jsonl；每筆資料使用獨立的 (seed, index) 亂數流"""
    if n_examples < 1:
        raise DatasetError("n_examples must be >= 1")
    os.makedirs(out_dir, exist_ok=True)
    repository = ManifestRepository(os.path.join(out_dir, 'manifest.jsonl'))

    for index in range(n_examples):
        rng = np.random.default_rng([seed, index])
        example = synthesize_example(rng, duration_s, ser_grid, pl_spec, laec_config)

        def path(name):
            return os.path.join(out_dir, f'{index:05d}_{name}.wav')

        for name in ('mixture', 'reference', 'laec_out', 'residual_echo', 'speech'):
            write_wav(path(name), example[name])
        target_paths = []
        for stage, target in enumerate(example['targets']):
            target_paths.append(path(f'target{stage}'))
            write_wav(target_paths[-1], target)

        repository.add(ManifestRecord(
            mixture_path=path('mixture'),
            reference_path=path('reference'),
            laec_out_path=path('laec_out'),
            residual_echo_path=path('residual_echo'),
            target_paths=target_paths,
            ser_db=example['ser_db'],
            seed=seed,
            speech_path=path('speech'),
            rt60_s=example['rt60_s'],
            jitter_ms=example['jitter_ms'],
        ))
        logger.info(f"[DATAGEN] Example {index + 1}/{n_examples}: SER {example['ser_db']:+.0f} dB, "
                    f"RT60 {example['rt60_s']:.2f} s, jitter {example['jitter_ms']:.1f} ms")

    logger.info(f"[DATAGEN] Corpus written to {out_dir} ({n_examples} examples)")
    return repository


# ---------------------------------------------------------------- 玩具語料

def toy_example(rng: np.random.Generator, duration_s: float = 0.5,
                sine_hz: Tuple[float, float] = (400.0, 600.0),
                echo_band_hz: Tuple[float, float] = (2000.0, 5000.0),
                ser_db: Tuple[float, float] = (0.0, 10.0)) -> Dict[str, np.ndarray]:
    """正弦波「語音」+ 帶限回聲；X_laec = speech + residual 直接成立"""
    n = int(duration_s * SAMPLE_RATE_HZ)
    t = np.arange(n) / SAMPLE_RATE_HZ
    speech = np.sin(2 * np.pi * rng.uniform(*sine_hz) * t + rng.uniform(0, 2 * np.pi))

    reference = 0.3 * rng.standard_normal(n)
    band = firwin(129, list(echo_band_hz), pass_zero=False, fs=SAMPLE_RATE_HZ)
    residual = lfilter(band, [1.0], reference)

    laec, gain = mix_at_ser(speech, residual, float(rng.uniform(*ser_db)))
    return {
        'reference': reference,
        'mic': laec + 0.5 * reference,
        'laec': laec,
        'speech': gain * speech,
        'residual': residual,
    }


def toy_corpus(n_examples: int, seed: int = 0, **kwargs) -> List[Dict[str, np.ndarray]]:
    return [toy_example(np.random.default_rng([seed, index]), **kwargs) for index in range(n_examples)]
