#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
串流 STFT 分析 / 合成測試
"""

import numpy as np
import pytest

from src.algorithms.stft import (
    AnalysisState, SynthesisState, analyze_full, flush_padding, istft, istft_push,
    log_magnitude, stft, stft_push
)
from src.models.configs import StftConfig
from src.utils.errors import ConfigError, NonFiniteInputError, ShapeMismatchError


def _sine(freq_hz, n, amplitude=1.0):
    return amplitude * np.sin(2 * np.pi * freq_hz * np.arange(n) / 16000)


def test_config_defaults():
    config = StftConfig()
    assert config.bins() == 321
    assert config.latency_samples == 320
    window = config.analysis_window()
    assert window[0] == 0.0
    assert window[320] == pytest.approx(1.0)
    print("✅ STFT 設定正確")


def test_config_rejects_other_sample_rates():
    with pytest.raises(ConfigError):
        StftConfig(sample_rate_hz=48000)
    with pytest.raises(ConfigError):
        StftConfig(hop=160)


def test_zeros_give_zero_frame():
    frames = stft_push(AnalysisState(), np.zeros(640))
    assert len(frames) == 1
    assert frames[0].shape == (321,)
    assert np.all(frames[0] == 0)


def test_sine_peaks_at_expected_bin():
    frame = stft_push(AnalysisState(), _sine(1000, 640))[0]
    assert int(np.argmax(np.abs(frame))) == 40
    print("✅ 1 kHz 正弦波峰值在 bin 40")


@pytest.mark.parametrize("chunk", [1, 7, 160])
def test_chunking_is_bit_exact(chunk):
    signal = np.random.default_rng(1).standard_normal(16000)
    expected = stft_push(AnalysisState(), signal)

    state = AnalysisState()
    frames = []
    for start in range(0, signal.size, chunk):
        frames.extend(stft_push(state, signal[start:start + chunk]))

    assert len(frames) == len(expected)
    assert all(np.array_equal(a, b) for a, b in zip(frames, expected))


def test_zero_frames_synthesize_to_silence():
    state = SynthesisState()
    out = np.concatenate([istft_push(state, np.zeros(321, dtype=complex)) for _ in range(5)])
    assert out.size == 5 * 320
    assert np.all(out == 0)


def test_round_trip_random_signal():
    signal = np.random.default_rng(2).standard_normal(32000)
    out = istft(stft(signal))
    # 排除第一個與最後一個音框
    ref = signal[320:out.size - 320]
    rec = out[320:out.size - 320]
    error = np.sqrt(np.mean((ref - rec) ** 2)) / np.sqrt(np.mean(ref ** 2))
    assert error <= 1e-6
    print(f"✅ 重建相對誤差 {error:.2e}")


def test_round_trip_sine_amplitude():
    signal = _sine(1000, 16000, amplitude=0.5)
    out = istft(analyze_full(signal), length=signal.size)
    assert out.size == signal.size
    assert np.max(np.abs(out[640:-640] - signal[640:-640])) <= 1e-5
    assert np.max(np.abs(out[640:-640])) == pytest.approx(0.5, abs=1e-5)


def test_analyze_full_covers_every_sample():
    signal = np.random.default_rng(3).standard_normal(1000)
    out = istft(analyze_full(signal), length=signal.size)
    assert np.allclose(out[1:], signal[1:], atol=1e-9)


def test_parseval_per_frame():
    config = StftConfig()
    segment = np.random.default_rng(4).standard_normal(640)
    frame = stft_push(AnalysisState(config), segment)[0]
    windowed = segment * config.analysis_window()
    weights = np.full(321, 2.0)
    weights[0] = weights[-1] = 1.0
    spectral = np.sum(weights * np.abs(frame) ** 2) / config.fft_size
    assert spectral == pytest.approx(np.sum(windowed ** 2), rel=1e-6)


def test_log_magnitude_floor_and_values():
    assert np.allclose(log_magnitude(np.zeros(321)), np.log(1e-10))
    assert log_magnitude(np.array([1.0 + 0j]))[0] == pytest.approx(0.0)
    assert log_magnitude(np.array([np.e]))[0] == pytest.approx(1.0)


def test_non_finite_sample_rejected():
    signal = np.zeros(700)
    signal[123] = np.nan
    with pytest.raises(NonFiniteInputError, match="123"):
        stft_push(AnalysisState(), signal)


def test_wrong_bin_count_rejected():
    with pytest.raises(ShapeMismatchError):
        istft_push(SynthesisState(), np.zeros(320, dtype=complex))


def test_reset_matches_fresh_state():
    signal = np.random.default_rng(5).standard_normal(1000)
    analysis = AnalysisState()
    stft_push(analysis, signal[:500])
    analysis.reset()
    assert np.array_equal(stft_push(analysis, signal)[0], stft_push(AnalysisState(), signal)[0])

    synthesis = SynthesisState()
    istft_push(synthesis, np.ones(321, dtype=complex))
    synthesis.reset()
    assert np.all(synthesis.accumulator == 0) and np.all(synthesis.norm == 0)


def test_flush_padding():
    assert flush_padding(0) == 0
    assert flush_padding(320) == 320
    assert flush_padding(640) == 320
    # 再補 flush_padding 個零後，音框數剛好涵蓋所有樣本
    for n in (1, 319, 321, 999, 16000):
        frames = len(stft(np.zeros(n + flush_padding(n))))
        assert frames * 320 >= n


if __name__ == "__main__":
    test_config_defaults()
    test_sine_peaks_at_expected_bin()
    test_round_trip_random_signal()
    print("🎉 STFT 測試完成")
