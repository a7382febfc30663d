#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
桌面規模 DFSMN 訓練服務

以理想比例遮罩的加權 MSE 監督每個 stage（漸進式學習），SGD + momentum 更新。
梯度累加順序固定，相同 seed 的訓練結果完全一致。
"""

import csv
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.algorithms.dfsmn_backprop import (
    backward_batch, forward_batch, model_params, params_to_model, stage_losses, trainable_names
)
from src.algorithms.metrics import ser
from src.algorithms.stft import analyze_full, istft, log_magnitude, LOG_FLOOR
from src.database.manifest import ManifestRepository
from src.database.wav_io import read_wav
from src.models.configs import DfsmnConfig, StftConfig, TrainConfig
from src.models.datasets import PlTargetSpec, SpecAugmentParams, TrainingExample
from src.models.dfsmn_model import DfsmnModel
from src.services.datagen import make_pl_targets, spec_augment
from src.utils.errors import DatasetError, DivergenceError

logger = logging.getLogger(__name__)

# 玩具語料使用的縮小架構與學習率
# 963 維輸入投影的曲率最大，lr 超過約 2 時會發散並讓 sigmoid 輸出飽和
TOY_DFSMN_CONFIG = DfsmnConfig(hidden_dim=64, proj_dim=32, lookback_frames=10)
TOY_TRAIN_CONFIG = TrainConfig(learning_rate=0.5, momentum=0.9, epochs=50, batch_size=8, rng_seed=0,
                               grad_clip=1.0)
STD_FLOOR = 1e-6


@dataclass
class TrainResult:
    model: DfsmnModel
    losses: List[float]
    initial_loss: float
    history: List[Dict[str, float]] = field(default_factory=list)


# ---------------------------------------------------------------- 樣本建構

def _ratio_mask(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    return np.clip(np.abs(numerator) / np.maximum(np.abs(denominator), LOG_FLOOR), 0.0, 1.0)


def example_from_components(components: Dict[str, np.ndarray], pl_spec: Optional[PlTargetSpec] = None,
                            stft_config: Optional[StftConfig] = None) -> TrainingExample:
    """由已知成分（reference, mic, laec, speech, residual）建立特徵與各 stage 理想遮罩

    可另外傳入 'targets'（時域 PL 目標）取代由 speech/residual 計算。
    """
    cfg = stft_config or StftConfig()
    ref_spec = analyze_full(components['reference'], cfg)
    mic_spec = analyze_full(components['mic'], cfg)
    laec_spec = analyze_full(components['laec'], cfg)
    residual_spec = analyze_full(components['residual'], cfg)

    targets = components.get('targets')
    if targets is None:
        targets = make_pl_targets(components['speech'], components['residual'], pl_spec)

    features = np.hstack([log_magnitude(ref_spec), log_magnitude(mic_spec), log_magnitude(laec_spec)])
    stage_targets = [_ratio_mask(analyze_full(target, cfg), laec_spec) for target in targets[:-1]]
    stage_targets.append(np.hstack([_ratio_mask(analyze_full(targets[-1], cfg), laec_spec),
                                    _ratio_mask(residual_spec, laec_spec)]))
    return TrainingExample(features=features, stage_targets=stage_targets, components=dict(components))


def examples_from_manifest(repository: ManifestRepository, limit: Optional[int] = None,
                           stft_config: Optional[StftConfig] = None) -> List[TrainingExample]:
    """讀取 manifest 中的 WAV 並轉成訓練樣本（目標直接使用已寫出的 PL 目標）"""
    records = repository.get_all(limit)
    if not records:
        raise DatasetError(f"manifest {repository.path} is empty")
    examples = []
    for record in records:
        components = {
            'reference': read_wav(record.reference_path),
            'mic': read_wav(record.mixture_path),
            'laec': read_wav(record.laec_out_path),
            'residual': read_wav(record.residual_echo_path),
            'targets': [read_wav(path) for path in record.target_paths],
        }
        if record.speech_path:
            components['speech'] = read_wav(record.speech_path)
        examples.append(example_from_components(components, stft_config=stft_config))
    logger.info(f"[TRAIN] Loaded {len(examples)} examples from {repository.path}")
    return examples


def feature_stats(examples: Sequence[TrainingExample]):
    """全域特徵平均與標準差（供模型正規化向量使用）"""
    stacked = np.vstack([example.features for example in examples])
    return stacked.mean(axis=0), np.maximum(stacked.std(axis=0), STD_FLOOR)


# ---------------------------------------------------------------- loss 與梯度

def _params_of(model_or_params):
    if isinstance(model_or_params, DfsmnModel):
        return model_or_params.config, model_params(model_or_params)
    return model_or_params


def compute_loss(model_or_params, example: TrainingExample, weights=None) -> float:
    """Σ_k w_k · MSE_k；model_or_params 可為 DfsmnModel 或 (config, params)"""
    config, params = _params_of(model_or_params)
    weights = np.ones(config.stages) if weights is None else np.asarray(weights, dtype=np.float64)
    cache = forward_batch(config, params, example.features)
    return float(np.dot(weights, stage_losses(cache.outputs, example.stage_targets)))


def loss_and_gradients(config: DfsmnConfig, params: Dict[str, np.ndarray],
                       example: TrainingExample, weights):
    cache = forward_batch(config, params, example.features)
    loss = float(np.dot(weights, stage_losses(cache.outputs, example.stage_targets)))
    return loss, backward_batch(config, params, cache, example.stage_targets, weights)


def backward(model_or_params, example: TrainingExample, weights=None) -> Dict[str, np.ndarray]:
    """所有可訓練張量的梯度"""
    config, params = _params_of(model_or_params)
    weights = np.ones(config.stages) if weights is None else np.asarray(weights, dtype=np.float64)
    return loss_and_gradients(config, params, example, weights)[1]


def batch_gradients(model_or_params, examples: Sequence[TrainingExample], weights=None):
    """依樣本順序加總 loss 與梯度，回傳 (總 loss, 梯度和, 各樣本 loss)"""
    config, params = _params_of(model_or_params)
    weights = np.ones(config.stages) if weights is None else np.asarray(weights, dtype=np.float64)
    total = {name: np.zeros_like(params[name]) for name in trainable_names(config)}
    losses = []
    for example in examples:
        loss, grads = loss_and_gradients(config, params, example, weights)
        losses.append(loss)
        for name, grad in grads.items():
            total[name] += grad
    return float(sum(losses)), total, losses


# ---------------------------------------------------------------- 訓練

def augment_reference_features(example: TrainingExample, augment: SpecAugmentParams, bins: int,
                               rng: np.random.Generator) -> TrainingExample:
    """只遮蔽參考訊號的特徵欄位，麥克風與 LAEC 特徵不變"""
    features = example.features.copy()
    features[:, :bins] = spec_augment(features[:, :bins], augment, rng)
    return TrainingExample(features=features, stage_targets=example.stage_targets, components=example.components)


def _global_norm(grads: Dict[str, np.ndarray], names) -> float:
    return float(np.sqrt(sum(float(np.sum(grads[name] ** 2)) for name in names)))


def _mean_loss(config, params, dataset, weights) -> float:
    return float(np.mean([float(np.dot(weights, stage_losses(forward_batch(config, params, ex.features).outputs,
                                                             ex.stage_targets)))
                          for ex in dataset]))


def train(model: DfsmnModel, dataset: Sequence[TrainingExample], config: Optional[TrainConfig] = None,
          augment: Optional[SpecAugmentParams] = None,
          on_epoch: Optional[Callable[[int, float], None]] = None) -> TrainResult:
    """SGD + momentum；每個 epoch 的 loss 為各樣本 loss 依索引順序的平均"""
    config = config or TrainConfig()
    if not dataset:
        raise DatasetError("training dataset is empty")
    net = model.config
    weights = config.weights(net.stages)
    rng = np.random.default_rng(config.rng_seed)
    params = model_params(model)
    names = trainable_names(net)
    velocity = {name: np.zeros_like(params[name]) for name in names}

    initial_loss = _mean_loss(net, params, dataset, weights)
    logger.info(f"[TRAIN] Start: {len(dataset)} examples, {config.epochs} epochs, "
                f"lr={config.learning_rate}, initial loss {initial_loss:.6f}")

    losses = []
    history = []
    clipped = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(dataset))
        per_example = np.zeros(len(dataset))
        for start in range(0, len(order), config.batch_size):
            indices = order[start:start + config.batch_size]
            batch = [dataset[i] if augment is None
                     else augment_reference_features(dataset[i], augment, net.bins, rng)
                     for i in indices]
            _, grads, batch_losses = batch_gradients((net, params), batch, weights)
            if not np.all(np.isfinite(batch_losses)):
                raise DivergenceError(f"loss became non-finite at epoch {epoch + 1}, batch {start // config.batch_size + 1}")
            per_example[indices] = batch_losses

            scale = config.learning_rate / len(indices)
            if config.grad_clip is not None:
                norm = _global_norm(grads, names) / len(indices)
                if norm > config.grad_clip:
                    scale *= config.grad_clip / norm
                    clipped += 1
            for name in names:
                velocity[name] = config.momentum * velocity[name] - scale * grads[name]
                params[name] += velocity[name]

        epoch_loss = float(np.mean(per_example))
        losses.append(epoch_loss)
        history.append({'epoch': epoch + 1, 'loss': epoch_loss})
        logger.info(f"[TRAIN] Epoch {epoch + 1}/{config.epochs}: loss {epoch_loss:.6f}")
        if on_epoch is not None:
            on_epoch(epoch + 1, epoch_loss)

    if clipped:
        logger.info(f"[TRAIN] Gradient norm clipped on {clipped} updates")
    return TrainResult(model=params_to_model(net, params), losses=losses,
                       initial_loss=initial_loss, history=history)


def write_loss_curve(path: str, losses: Sequence[float]) -> str:
    """輸出 CSV：epoch,loss"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(['epoch', 'loss'])
        for epoch, loss in enumerate(losses, start=1):
            writer.writerow([epoch, repr(float(loss))])
    return path


# ---------------------------------------------------------------- PL 評估

def stage_ser_improvement(model: DfsmnModel, components: Dict[str, np.ndarray],
                          stft_config: Optional[StftConfig] = None) -> List[float]:
    """每個 stage 的語音遮罩（最後一個 stage 為 M_x）套用到已知成分後的 SER 提升（dB）"""
    cfg = stft_config or StftConfig()
    example = example_from_components(components, stft_config=cfg)
    outputs = forward_batch(model.config, model_params(model), example.features).outputs

    speech = np.asarray(components['speech'], dtype=np.float64)
    residual = np.asarray(components['residual'], dtype=np.float64)
    speech_spec = analyze_full(speech, cfg)
    residual_spec = analyze_full(residual, cfg)
    baseline = ser(speech, residual)

    improvements = []
    for output in outputs:
        mask = output[:, :model.config.bins]
        masked_speech = istft(mask * speech_spec, cfg, speech.size)
        masked_residual = istft(mask * residual_spec, cfg, residual.size)
        improvements.append(ser(masked_speech, masked_residual) - baseline)
    return improvements


def mean_stage_ser_improvement(model: DfsmnModel, held_out: Sequence[Dict[str, np.ndarray]]) -> List[float]:
    per_example = np.array([stage_ser_improvement(model, components) for components in held_out])
    return [float(value) for value in per_example.mean(axis=0)]
