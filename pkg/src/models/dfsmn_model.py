#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DFSMN 模型資料結構

權重以 float32 保存（與模型檔一致），推論與訓練時轉成 float64。
張量命名與順序由 tensor_specs() 固定，模型檔依同一順序寫入。
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.models.configs import DfsmnConfig
from src.utils.errors import ModelShapeError, NonFiniteWeightError

NORM_TENSORS = ('norm.mean', 'norm.std')


def head_width(config: DfsmnConfig, stage: int) -> int:
    """中間 stage 輸出一個語音遮罩；最後一個 stage 輸出 (M_x, M_r)"""
    return 2 * config.bins if stage == config.stages - 1 else config.bins


def tensor_specs(config: DfsmnConfig, include_norm: bool = True) -> List[Tuple[str, Tuple[int, ...]]]:
    """依固定順序列出所有張量名稱與形狀"""
    P, H = config.proj_dim, config.hidden_dim
    specs = [('input.weight', (P, config.input_dim)), ('input.bias', (P,))]
    for layer in range(config.num_layers):
        specs += [
            (f'layer{layer}.hidden.weight', (H, P)),
            (f'layer{layer}.hidden.bias', (H,)),
            (f'layer{layer}.project.weight', (P, H)),
            (f'layer{layer}.memory', (P, config.lookback_frames + 1)),
        ]
    for stage in range(config.stages):
        width = head_width(config, stage)
        specs += [(f'head{stage}.weight', (width, P)), (f'head{stage}.bias', (width,))]
    if include_norm:
        specs += [(name, (config.input_dim,)) for name in NORM_TENSORS]
    return specs


def count_params(config: DfsmnConfig) -> int:
    """可訓練參數總數（不含特徵正規化向量）"""
    return int(sum(int(np.prod(shape)) for _, shape in tensor_specs(config, include_norm=False)))


@dataclass(frozen=True)
class MaskSet:
    """單一音框的遮罩輸出，數值皆在 [0, 1]"""

    stage_masks: Tuple[np.ndarray, ...]
    m_x: np.ndarray
    m_r: np.ndarray


@dataclass(frozen=True)
class DfsmnModel:
    """不可變的權重容器 + 架構設定 + 特徵正規化統計"""

    config: DfsmnConfig
    tensors: Dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        expected = tensor_specs(self.config)
        missing = [name for name, _ in expected if name not in self.tensors]
        if missing:
            raise ModelShapeError(f"missing tensors: {missing}")
        for name, shape in expected:
            tensor = self.tensors[name]
            if tuple(tensor.shape) != shape:
                raise ModelShapeError(f"tensor '{name}' has shape {tuple(tensor.shape)}, expected {shape}")
            if not np.all(np.isfinite(tensor)):
                raise NonFiniteWeightError(f"tensor '{name}' contains NaN or Inf")
        if np.any(self.tensors['norm.std'] <= 0):
            raise ModelShapeError("tensor 'norm.std' must be strictly positive")
        for tensor in self.tensors.values():
            tensor.setflags(write=False)

    @cached_property
    def compute(self) -> Dict[str, np.ndarray]:
        """float64 版本的張量，推論時使用"""
        return {name: tensor.astype(np.float64) for name, tensor in self.tensors.items()}

    def num_params(self) -> int:
        return count_params(self.config)

    def with_tensors(self, updates: Dict[str, np.ndarray]) -> 'DfsmnModel':
        merged = dict(self.tensors)
        merged.update({name: np.asarray(value, dtype=np.float32) for name, value in updates.items()})
        return DfsmnModel(self.config, merged)


def zero_model(config: Optional[DfsmnConfig] = None) -> DfsmnModel:
    """所有權重為零（遮罩恆為 0.5），正規化為恆等"""
    cfg = config or DfsmnConfig()
    tensors = {name: np.zeros(shape, dtype=np.float32) for name, shape in tensor_specs(cfg)}
    tensors['norm.std'] = np.ones(cfg.input_dim, dtype=np.float32)
    return DfsmnModel(cfg, tensors)


def init_model(config: Optional[DfsmnConfig] = None, rng: Optional[np.random.Generator] = None,
               norm_mean: Optional[np.ndarray] = None, norm_std: Optional[np.ndarray] = None,
               memory_scale: float = 0.05) -> DfsmnModel:
    """隨機初始化（He / Xavier 縮放），偏差為零

    投影層再除以層數，讓 9 層殘差累加後的 memory 幅度維持在同一量級。
    """
    cfg = config or DfsmnConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    tensors = {}
    for name, shape in tensor_specs(cfg):
        if name.endswith('.bias') or name in NORM_TENSORS:
            tensors[name] = np.zeros(shape)
        elif name.endswith('.memory'):
            tensors[name] = rng.normal(0.0, memory_scale, size=shape)
        elif name.endswith('hidden.weight'):
            tensors[name] = rng.normal(0.0, np.sqrt(2.0 / shape[1]), size=shape)
        elif name.endswith('project.weight'):
            tensors[name] = rng.normal(0.0, np.sqrt(1.0 / (shape[1] * cfg.num_layers)), size=shape)
        else:
            tensors[name] = rng.normal(0.0, np.sqrt(1.0 / shape[1]), size=shape)
    tensors['norm.mean'] = np.zeros(cfg.input_dim) if norm_mean is None else np.asarray(norm_mean)
    tensors['norm.std'] = np.ones(cfg.input_dim) if norm_std is None else np.asarray(norm_std)
    return DfsmnModel(cfg, {k: np.asarray(v, dtype=np.float32) for k, v in tensors.items()})
