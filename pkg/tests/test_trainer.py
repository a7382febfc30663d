#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DFSMN 訓練測試：loss、梯度、SGD 迴圈與玩具語料收斂
"""

import numpy as np
import pytest

from src.algorithms.dfsmn_backprop import forward_batch, model_params, trainable_names
from src.models.configs import DfsmnConfig, TrainConfig
from src.models.datasets import SpecAugmentParams, TrainingExample
from src.models.dfsmn_model import init_model, zero_model
from src.services.datagen import build_corpus, toy_corpus
from src.services.trainer import (
    TOY_DFSMN_CONFIG, TOY_TRAIN_CONFIG, augment_reference_features, backward, batch_gradients, compute_loss,
    example_from_components, examples_from_manifest, feature_stats, mean_stage_ser_improvement, train,
    write_loss_curve
)
from src.utils.errors import ConfigError, DivergenceError

TINY = DfsmnConfig(input_dim=24, hidden_dim=4, proj_dim=3, stages=2, layers_per_stage=1,
                   lookback_frames=2, bins=8)


def _example(config=TINY, frames=6, seed=0):
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((frames, config.input_dim))
    targets = [rng.uniform(size=(frames, config.bins)) for _ in range(config.stages - 1)]
    targets.append(rng.uniform(size=(frames, 2 * config.bins)))
    return TrainingExample(features=features, stage_targets=targets)


def _ones_example(config, frames=4):
    widths = [config.bins] * (config.stages - 1) + [2 * config.bins]
    return TrainingExample(features=np.zeros((frames, config.input_dim)),
                           stage_targets=[np.ones((frames, width)) for width in widths])


def test_zero_model_loss_against_ones():
    example = _ones_example(TINY)
    assert compute_loss(zero_model(TINY), example) == pytest.approx(0.5)
    assert compute_loss(zero_model(TINY), example, weights=[2.0, 1.0]) == pytest.approx(0.75)


def test_perfect_targets_give_zero_loss_and_gradients():
    model = init_model(TINY, np.random.default_rng(1), memory_scale=0.3)
    features = np.random.default_rng(2).standard_normal((6, TINY.input_dim))
    outputs = forward_batch(TINY, model_params(model), features).outputs
    example = TrainingExample(features=features, stage_targets=[o.copy() for o in outputs])
    assert compute_loss(model, example) == 0.0
    grads = backward(model, example)
    assert all(np.all(grads[name] == 0.0) for name in trainable_names(TINY))


def test_gradients_match_finite_differences():
    model = init_model(TINY, np.random.default_rng(3), memory_scale=0.3)
    params = model_params(model)
    example = _example(seed=4)
    analytic = backward((TINY, params), example)

    h = 1e-5
    worst = 0.0
    for name in trainable_names(TINY):
        flat = params[name].reshape(-1)
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + h
            plus = compute_loss((TINY, params), example)
            flat[index] = original - h
            minus = compute_loss((TINY, params), example)
            flat[index] = original
            numeric = (plus - minus) / (2 * h)
            exact = analytic[name].reshape(-1)[index]
            error = abs(numeric - exact) / max(abs(numeric), abs(exact), 1e-7)
            worst = max(worst, error if abs(numeric - exact) > 1e-9 else 0.0)
    assert worst <= 1e-3
    print(f"✅ 有限差分梯度檢查通過（最大相對誤差 {worst:.1e}）")


def test_memory_coefficients_receive_gradient():
    model = init_model(TINY, np.random.default_rng(5), memory_scale=0.3)
    grads = backward(model, _example(seed=6))
    assert np.any(grads['layer0.memory'][:, 1:] != 0.0)


def test_duplicate_example_doubles_gradient():
    model = init_model(TINY, np.random.default_rng(7))
    example = _example(seed=8)
    single = backward(model, example)
    total, doubled, losses = batch_gradients(model, [example, example])
    assert losses[0] == losses[1]
    assert total == 2 * losses[0]
    assert all(np.array_equal(doubled[name], 2 * single[name]) for name in single)


def test_zero_learning_rate_keeps_model():
    model = init_model(TINY, np.random.default_rng(9), memory_scale=0.3)
    dataset = [_example(seed=s) for s in range(5)]
    result = train(model, dataset, TrainConfig(learning_rate=0.0, epochs=3, batch_size=2))
    assert all(np.array_equal(result.model.tensors[name], model.tensors[name]) for name in model.tensors)
    assert result.losses == [result.initial_loss] * 3


def test_training_is_deterministic():
    model = init_model(TINY, np.random.default_rng(10))
    dataset = [_example(seed=s) for s in range(6)]
    config = TrainConfig(learning_rate=0.5, epochs=4, batch_size=3, rng_seed=2)
    first = train(model, dataset, config)
    second = train(model, dataset, config)
    assert first.losses == second.losses
    assert all(np.array_equal(first.model.tensors[n], second.model.tensors[n]) for n in model.tensors)


def test_gradient_clipping_rescales_update():
    model = init_model(TINY, np.random.default_rng(12), memory_scale=0.3)
    example = _example(seed=13)
    grads = backward(model, example)
    names = trainable_names(TINY)
    norm = float(np.sqrt(sum(np.sum(grads[name] ** 2) for name in names)))
    assert norm > 1e-3

    limit = 1e-3
    config = TrainConfig(learning_rate=1.0, momentum=0.0, epochs=1, batch_size=1, grad_clip=limit)
    result = train(model, [example], config)
    before, after = model_params(model), model_params(result.model)
    for name in names:
        expected = before[name] - (limit / norm) * grads[name]
        assert np.allclose(after[name], expected, atol=1e-6), name


def test_gradient_clip_must_be_positive():
    with pytest.raises(ConfigError):
        TrainConfig(grad_clip=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(grad_clip=-1.0)


def test_spec_augment_touches_only_reference_columns():
    example = _example(frames=40, seed=14)
    params = SpecAugmentParams(max_freq_masks=2, max_freq_width_bins=4, max_time_masks=2, max_time_width_frames=10)
    changed = 0
    for seed in range(20):
        augmented = augment_reference_features(example, params, TINY.bins, np.random.default_rng(seed))
        assert augmented.features.shape == example.features.shape
        assert np.array_equal(augmented.features[:, TINY.bins:], example.features[:, TINY.bins:])
        assert augmented.stage_targets is example.stage_targets
        changed += int(not np.array_equal(augmented.features[:, :TINY.bins], example.features[:, :TINY.bins]))
    assert changed > 0
    # 原始樣本不被改寫
    assert np.array_equal(example.features, _example(frames=40, seed=14).features)


def test_training_with_spec_augment_is_deterministic():
    model = init_model(TINY, np.random.default_rng(15))
    dataset = [_example(frames=12, seed=s) for s in range(4)]
    config = TrainConfig(learning_rate=0.5, epochs=3, batch_size=2, rng_seed=3)
    first = train(model, dataset, config, augment=SpecAugmentParams())
    second = train(model, dataset, config, augment=SpecAugmentParams())
    plain = train(model, dataset, config)
    assert first.losses == second.losses
    assert all(np.isfinite(first.losses))
    assert all(np.array_equal(first.model.tensors[n], second.model.tensors[n]) for n in model.tensors)
    assert first.initial_loss == plain.initial_loss


def test_non_finite_loss_raises_divergence():
    example = _example(seed=11)
    example.features[2, 3] = np.nan
    with pytest.raises(DivergenceError):
        train(init_model(TINY), [example], TrainConfig(learning_rate=0.1, epochs=1))


def test_loss_curve_csv(tmp_path):
    path = write_loss_curve(str(tmp_path / 'curve.csv'), [0.5, 0.25])
    with open(path, encoding='utf-8') as handle:
        lines = handle.read().splitlines()
    assert lines == ['epoch,loss', '1,0.5', '2,0.25']


def test_examples_from_manifest(tmp_path):
    repository = build_corpus(str(tmp_path / 'corpus'), n_examples=1, seed=0, duration_s=1.0)
    examples = examples_from_manifest(repository)
    assert len(examples) == 1
    example = examples[0]
    assert example.features.shape[1] == 963
    assert len(example.stage_targets) == 3
    assert example.stage_targets[-1].shape == (example.frames, 642)


@pytest.fixture(scope="module")
def toy_training():
    train_set = [example_from_components(c) for c in toy_corpus(200, seed=0)]
    held_out = toy_corpus(20, seed=1)
    mean, std = feature_stats(train_set)
    model = init_model(TOY_DFSMN_CONFIG, np.random.default_rng(0), norm_mean=mean, norm_std=std)
    return train(model, train_set, TOY_TRAIN_CONFIG), held_out


def test_toy_training_halves_loss(toy_training):
    result, _ = toy_training
    assert len(result.losses) == TOY_TRAIN_CONFIG.epochs
    assert result.losses[-1] <= 0.5 * result.initial_loss
    print(f"✅ 玩具訓練 loss {result.initial_loss:.4f} → {result.losses[-1]:.4f}")


def test_toy_stage_ser_improvements(toy_training):
    result, held_out = toy_training
    improvements = mean_stage_ser_improvement(result.model, held_out)
    assert improvements[-1] >= 10.0
    assert all(b >= a for a, b in zip(improvements, improvements[1:]))
    print(f"✅ 各 stage SER 提升 {['%.1f' % v for v in improvements]} dB")


if __name__ == "__main__":
    test_zero_model_loss_against_ones()
    test_gradients_match_finite_differences()
    print("🎉 訓練測試完成")
