#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DFSMN 模型檔讀寫

格式（全部 little-endian）：
    b"DFSM" | u32 version=1 | 8 × u32 config
    每個張量依 tensor_specs() 順序：u32 名稱長度 | 名稱 (utf-8) | u32 維度數 | u32 × 維度 | float32 資料
"""

import logging
import os
import struct
from typing import Tuple

import numpy as np

from src.models.configs import DfsmnConfig
from src.models.dfsmn_model import DfsmnModel, tensor_specs
from src.utils.errors import (
    BadMagicError, ConfigError, ModelShapeError, NonFiniteWeightError, TruncatedModelError,
    VersionMismatchError
)

logger = logging.getLogger(__name__)

MAGIC = b'DFSM'
FORMAT_VERSION = 1
CONFIG_FIELDS = ('input_dim', 'hidden_dim', 'proj_dim', 'stages', 'layers_per_stage',
                 'lookback_frames', 'lookahead_frames', 'bins')
_U32 = struct.Struct('<I')


class _Reader:
    """位移式讀取，資料不足時以目前讀取的項目名稱回報截斷"""

    def __init__(self, payload: bytes, path: str):
        self.payload = payload
        self.offset = 0
        self.path = path

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise TruncatedModelError(f"{self.path}: file truncated while reading {what}")
        chunk = self.payload[self.offset:end]
        self.offset = end
        return chunk

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(4, what))[0]

    @property
    def remaining(self) -> int:
        return len(self.payload) - self.offset


def save_model(model: DfsmnModel, path: str) -> str:
    """依固定順序寫出模型"""
    config = model.config
    parts = [MAGIC, _U32.pack(FORMAT_VERSION)]
    parts += [_U32.pack(getattr(config, name)) for name in CONFIG_FIELDS]

    for name, shape in tensor_specs(config):
        encoded = name.encode('utf-8')
        parts += [_U32.pack(len(encoded)), encoded, _U32.pack(len(shape))]
        parts += [_U32.pack(dim) for dim in shape]
        parts.append(np.ascontiguousarray(model.tensors[name], dtype='<f4').tobytes())

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as handle:
        handle.write(b''.join(parts))
    logger.info(f"[MODEL] Saved model to {path} ({model.num_params()} parameters)")
    return path


def _read_config(reader: _Reader) -> DfsmnConfig:
    values = {name: reader.u32(f"config field '{name}'") for name in CONFIG_FIELDS}
    try:
        return DfsmnConfig(**values)
    except ConfigError as e:
        raise ModelShapeError(f"{reader.path}: invalid model config ({e})") from e


def _read_tensor(reader: _Reader, expected_name: str, expected_shape: Tuple[int, ...]) -> np.ndarray:
    what = f"tensor '{expected_name}'"
    name = reader.take(reader.u32(what), what).decode('utf-8', errors='replace')
    if name != expected_name:
        raise ModelShapeError(f"{reader.path}: expected tensor '{expected_name}', found '{name}'")
    shape = tuple(reader.u32(what) for _ in range(reader.u32(what)))
    if shape != expected_shape:
        raise ModelShapeError(f"{reader.path}: tensor '{name}' has shape {shape}, expected {expected_shape}")

    count = int(np.prod(shape)) if shape else 1
    data = np.frombuffer(reader.take(4 * count, what), dtype='<f4').astype(np.float32).reshape(shape)
    if not np.all(np.isfinite(data)):
        raise NonFiniteWeightError(f"{reader.path}: tensor '{name}' contains NaN or Inf")
    return data


def load_model(path: str) -> DfsmnModel:
    """讀取並驗證模型檔"""
    with open(path, 'rb') as handle:
        reader = _Reader(handle.read(), path)

    if reader.remaining < len(MAGIC) or reader.take(len(MAGIC), 'magic') != MAGIC:
        raise BadMagicError(f"{path}: bad magic, not a DFSM model file")
    version = reader.u32('version')
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: model format version {version}, expected {FORMAT_VERSION}")

    config = _read_config(reader)
    tensors = {name: _read_tensor(reader, name, shape) for name, shape in tensor_specs(config)}
    if reader.remaining:
        raise ModelShapeError(f"{path}: {reader.remaining} unexpected trailing bytes")

    model = DfsmnModel(config, tensors)
    logger.info(f"[MODEL] Loaded model from {path} ({model.num_params()} parameters)")
    return model
