#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DFSMN 殘餘回聲抑制推論測試
"""

import numpy as np
import pytest

from src.algorithms.dfsmn import ResEngine, ResState, res_forward, res_forward_sequence
from src.algorithms.dfsmn_backprop import forward_batch, model_params
from src.models.configs import DfsmnConfig
from src.models.dfsmn_model import count_params, init_model, zero_model
from src.utils.errors import ConfigError, ModelShapeError, ShapeMismatchError

SMALL = DfsmnConfig(hidden_dim=16, proj_dim=8, lookback_frames=20)


def _frames(count, seed, bins=321, scale=1.0):
    rng = np.random.default_rng(seed)
    return [scale * (rng.standard_normal(bins) + 1j * rng.standard_normal(bins)) for _ in range(count)]


def _inputs(count, seed):
    return _frames(count, seed), _frames(count, seed + 1), _frames(count, seed + 2)


def _stack(masks):
    return np.array([np.concatenate([*m.stage_masks, m.m_x, m.m_r]) for m in masks])


def test_count_params_degenerate_config():
    config = DfsmnConfig(input_dim=1, hidden_dim=1, proj_dim=1, stages=1, layers_per_stage=1,
                         lookback_frames=0, bins=1)
    # input 1+1，layer 1+1+1+1，head 2+2
    assert count_params(config) == 10


def test_count_params_default_config():
    P, H, D, L, B = 80, 128, 963, 20, 321
    expected = (P * D + P) + 9 * (H * P + H + P * H + P * (L + 1)) + 2 * (B * P + B) + (2 * B * P + 2 * B)
    assert count_params(DfsmnConfig()) == expected
    assert 324_000 <= expected <= 540_000
    print(f"✅ 預設模型參數量 {expected}")


def test_count_params_grows_with_projection():
    assert count_params(DfsmnConfig(proj_dim=160)) > count_params(DfsmnConfig())


def test_lookahead_is_rejected():
    with pytest.raises(ConfigError):
        DfsmnConfig(lookahead_frames=1)


def test_zero_model_outputs_half():
    model = zero_model()
    ref, mic, laec = _inputs(3, 0)
    for masks in res_forward_sequence(model, ResState(model.config), ref, mic, laec):
        assert len(masks.stage_masks) == 2
        assert np.all(masks.m_x == 0.5) and np.all(masks.m_r == 0.5)
        assert all(np.all(stage == 0.5) for stage in masks.stage_masks)


@pytest.mark.parametrize("chunk", [1, 3, 50])
def test_chunked_forward_is_bit_exact(chunk):
    model = init_model(SMALL, np.random.default_rng(0))
    ref, mic, laec = _inputs(60, 1)
    expected = _stack(res_forward_sequence(model, ResState(SMALL), ref, mic, laec))

    state = ResState(SMALL)
    outputs = []
    for start in range(0, 60, chunk):
        end = start + chunk
        outputs += res_forward_sequence(model, state, ref[start:end], mic[start:end], laec[start:end])
    assert np.array_equal(_stack(outputs), expected)


def test_streaming_matches_batch_forward():
    model = init_model(SMALL, np.random.default_rng(2), memory_scale=0.3)
    ref, mic, laec = _inputs(30, 3)
    streamed = res_forward_sequence(model, ResState(SMALL), ref, mic, laec)

    from src.algorithms.dfsmn import res_features
    features = np.array([res_features(r, y, e) for r, y, e in zip(ref, mic, laec)])
    batch = forward_batch(SMALL, model_params(model), features).outputs
    assert np.allclose(batch[-1][:, :321], np.array([m.m_x for m in streamed]), atol=1e-9)
    assert np.allclose(batch[0], np.array([m.stage_masks[0] for m in streamed]), atol=1e-9)


def test_causality():
    model = init_model(SMALL, np.random.default_rng(4), memory_scale=0.3)
    ref, mic, laec = _inputs(40, 5)
    perturbed = [frame.copy() for frame in mic]
    for t in range(25, 40):
        perturbed[t] = perturbed[t] * 10.0 + 3.0

    a = _stack(res_forward_sequence(model, ResState(SMALL), ref, mic, laec))
    b = _stack(res_forward_sequence(model, ResState(SMALL), ref, perturbed, laec))
    assert np.array_equal(a[:25], b[:25])
    assert not np.array_equal(a[25:], b[25:])


def test_finite_memory_horizon():
    model = init_model(SMALL, np.random.default_rng(6), memory_scale=0.3)
    horizon = SMALL.num_layers * SMALL.lookback_frames
    t = horizon + 10
    ref, mic, laec = _inputs(t + 1, 7)
    replaced_ref, replaced_mic, replaced_laec = _inputs(t + 1, 70)
    # 只替換比 t - horizon 更早的音框
    cut = t - horizon
    ref_b = replaced_ref[:cut] + ref[cut:]
    mic_b = replaced_mic[:cut] + mic[cut:]
    laec_b = replaced_laec[:cut] + laec[cut:]

    a = res_forward_sequence(model, ResState(SMALL), ref, mic, laec)[-1]
    b = res_forward_sequence(model, ResState(SMALL), ref_b, mic_b, laec_b)[-1]
    assert np.allclose(a.m_x, b.m_x, atol=1e-6)
    assert np.allclose(a.m_r, b.m_r, atol=1e-6)


def test_masks_in_unit_interval_for_extreme_inputs():
    model = init_model(SMALL, np.random.default_rng(8), memory_scale=0.5)
    ref, mic, laec = _frames(5, 9, scale=1e6), _frames(5, 10, scale=1e-12), _frames(5, 11)
    for masks in res_forward_sequence(model, ResState(SMALL), ref, mic, laec):
        values = _stack([masks])
        assert np.all(values >= 0.0) and np.all(values <= 1.0)


def test_wrong_bin_count_rejected():
    model = zero_model(SMALL)
    ref, mic, laec = _frames(1, 0, bins=320), _frames(1, 1), _frames(1, 2)
    with pytest.raises(ShapeMismatchError):
        res_forward(model, ResState(SMALL), ref[0], mic[0], laec[0])


def test_model_validation():
    model = zero_model(SMALL)
    tensors = dict(model.tensors)
    tensors['norm.std'] = np.zeros(SMALL.input_dim, dtype=np.float32)
    with pytest.raises(ModelShapeError):
        type(model)(SMALL, tensors)


def test_engine_reset_reproduces_outputs():
    engine = ResEngine(init_model(SMALL, np.random.default_rng(12)))
    ref, mic, laec = _inputs(10, 13)
    first = _stack([engine.forward(r, y, e) for r, y, e in zip(ref, mic, laec)])
    engine.reset()
    second = _stack([engine.forward(r, y, e) for r, y, e in zip(ref, mic, laec)])
    assert np.array_equal(first, second)


def test_init_model_is_seeded():
    a = init_model(SMALL, np.random.default_rng(3))
    b = init_model(SMALL, np.random.default_rng(3))
    assert all(np.array_equal(a.tensors[name], b.tensors[name]) for name in a.tensors)
    assert a.tensors['input.weight'].dtype == np.float32


if __name__ == "__main__":
    test_count_params_default_config()
    test_zero_model_outputs_half()
    test_causality()
    print("🎉 DFSMN 測試完成")
