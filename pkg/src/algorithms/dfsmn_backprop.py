#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DFSMN 整段前向（保留中間值）與反向傳播

參數以 float64 字典表示，名稱與 tensor_specs() 相同。
前向結果與逐框的 res_forward 相同（同樣的零初始歷史）。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy.special import expit

from src.models.configs import DfsmnConfig
from src.models.dfsmn_model import DfsmnModel, tensor_specs
from src.utils.errors import ShapeMismatchError


@dataclass
class ForwardCache:
    """反向傳播需要的中間值；outputs[k] 為第 k 個 stage 的 sigmoid 輸出 (T, width)"""

    inputs: np.ndarray
    memories: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    hiddens: List[np.ndarray] = field(default_factory=list)
    projections: List[np.ndarray] = field(default_factory=list)
    outputs: List[np.ndarray] = field(default_factory=list)


def model_params(model: DfsmnModel) -> Dict[str, np.ndarray]:
    """可寫入的 float64 參數副本（含正規化向量）"""
    return {name: np.array(tensor, dtype=np.float64) for name, tensor in model.compute.items()}


def params_to_model(config: DfsmnConfig, params: Dict[str, np.ndarray]) -> DfsmnModel:
    return DfsmnModel(config, {name: np.asarray(params[name], dtype=np.float32)
                               for name, _ in tensor_specs(config)})


def trainable_names(config: DfsmnConfig) -> List[str]:
    return [name for name, _ in tensor_specs(config, include_norm=False)]


def _memory_block(coeffs: np.ndarray, proj: np.ndarray) -> np.ndarray:
    """mem[t] = Σ_i a_i ⊙ p[t-i]，t-i < 0 的歷史為零"""
    out = coeffs[:, 0] * proj
    for lag in range(1, coeffs.shape[1]):
        if lag >= proj.shape[0]:
            break
        out[lag:] += coeffs[:, lag] * proj[:-lag]
    return out


def forward_batch(config: DfsmnConfig, params: Dict[str, np.ndarray], features) -> ForwardCache:
    """features: 未正規化的特徵矩陣 (T, input_dim)"""
    data = np.asarray(features, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != config.input_dim:
        raise ShapeMismatchError(f"features have shape {data.shape}, expected (T, {config.input_dim})")

    inputs = (data - params['norm.mean']) / params['norm.std']
    cache = ForwardCache(inputs=inputs)
    memory = inputs @ params['input.weight'].T + params['input.bias']
    cache.memories.append(memory)

    stage_ends = config.stage_end_layers()
    for layer in range(config.num_layers):
        prefix = f'layer{layer}'
        pre = memory @ params[f'{prefix}.hidden.weight'].T + params[f'{prefix}.hidden.bias']
        hidden = np.maximum(pre, 0.0)
        proj = hidden @ params[f'{prefix}.project.weight'].T
        memory = memory + proj + _memory_block(params[f'{prefix}.memory'], proj)

        cache.pre_activations.append(pre)
        cache.hiddens.append(hidden)
        cache.projections.append(proj)
        cache.memories.append(memory)

        if layer in stage_ends:
            stage = stage_ends.index(layer)
            cache.outputs.append(expit(memory @ params[f'head{stage}.weight'].T + params[f'head{stage}.bias']))
    return cache


def stage_losses(outputs: Sequence[np.ndarray], targets: Sequence[np.ndarray]) -> np.ndarray:
    """每個 stage 的 MSE"""
    if len(outputs) != len(targets):
        raise ShapeMismatchError(f"model has {len(outputs)} stages, example has {len(targets)} targets")
    losses = []
    for stage, (predicted, target) in enumerate(zip(outputs, targets)):
        if predicted.shape != np.shape(target):
            raise ShapeMismatchError(
                f"stage {stage} target has shape {np.shape(target)}, expected {predicted.shape}")
        losses.append(np.mean((predicted - target) ** 2))
    return np.asarray(losses)


def backward_batch(config: DfsmnConfig, params: Dict[str, np.ndarray], cache: ForwardCache,
                   targets: Sequence[np.ndarray], weights) -> Dict[str, np.ndarray]:
    """Σ_k w_k·MSE_k 對所有可訓練張量的梯度（包含 memory 係數）"""
    stage_losses(cache.outputs, targets)
    grads = {name: np.zeros_like(params[name]) for name in trainable_names(config)}
    stage_ends = config.stage_end_layers()

    head_grads = []
    for stage, (predicted, target) in enumerate(zip(cache.outputs, targets)):
        d_out = weights[stage] * 2.0 * (predicted - target) / predicted.size
        head_grads.append(d_out * predicted * (1.0 - predicted))

    d_memory = np.zeros_like(cache.memories[-1])
    for layer in reversed(range(config.num_layers)):
        prefix = f'layer{layer}'
        if layer in stage_ends:
            stage = stage_ends.index(layer)
            d_logits = head_grads[stage]
            grads[f'head{stage}.weight'] += d_logits.T @ cache.memories[layer + 1]
            grads[f'head{stage}.bias'] += d_logits.sum(axis=0)
            d_memory = d_memory + d_logits @ params[f'head{stage}.weight']

        proj = cache.projections[layer]
        coeffs = params[f'{prefix}.memory']
        # m = m_prev + p + mem(p)
        d_proj = d_memory * (1.0 + coeffs[:, 0])
        grads[f'{prefix}.memory'][:, 0] += np.sum(d_memory * proj, axis=0)
        for lag in range(1, coeffs.shape[1]):
            if lag >= proj.shape[0]:
                break
            d_proj[:-lag] += coeffs[:, lag] * d_memory[lag:]
            grads[f'{prefix}.memory'][:, lag] += np.sum(d_memory[lag:] * proj[:-lag], axis=0)

        grads[f'{prefix}.project.weight'] += d_proj.T @ cache.hiddens[layer]
        d_pre = (d_proj @ params[f'{prefix}.project.weight']) * (cache.pre_activations[layer] > 0.0)
        grads[f'{prefix}.hidden.weight'] += d_pre.T @ cache.memories[layer]
        grads[f'{prefix}.hidden.bias'] += d_pre.sum(axis=0)
        d_memory = d_memory + d_pre @ params[f'{prefix}.hidden.weight']

    grads['input.weight'] += d_memory.T @ cache.inputs
    grads['input.bias'] += d_memory.sum(axis=0)
    return grads
