#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
模型檔讀寫與驗證測試
"""

import struct

import numpy as np
import pytest

from src.database.model_store import load_model, save_model
from src.models.configs import DfsmnConfig
from src.models.dfsmn_model import init_model, tensor_specs
from src.utils.errors import (
    BadMagicError, ModelShapeError, NonFiniteWeightError, TruncatedModelError, VersionMismatchError
)

TINY = DfsmnConfig(input_dim=12, hidden_dim=6, proj_dim=5, stages=2, layers_per_stage=1,
                   lookback_frames=3, bins=4)
# 標頭 40 bytes，加上 'input.weight' 的名稱與形狀欄位
FIRST_TENSOR_DATA = 40 + 4 + len('input.weight') + 4 + 2 * 4


def _saved(tmp_path, config=TINY, seed=0):
    rng = np.random.default_rng(seed)
    model = init_model(config, rng, norm_mean=rng.standard_normal(config.input_dim),
                       norm_std=rng.uniform(0.5, 2.0, config.input_dim))
    path = str(tmp_path / 'model.dfsm')
    save_model(model, path)
    return model, path


def _rewrite(path, mutate):
    with open(path, 'rb') as handle:
        payload = bytearray(handle.read())
    mutate(payload)
    with open(path, 'wb') as handle:
        handle.write(bytes(payload))


def test_round_trip_is_bit_exact(tmp_path):
    model, path = _saved(tmp_path)
    loaded = load_model(path)
    assert loaded.config == model.config
    for name, _ in tensor_specs(TINY):
        assert loaded.tensors[name].dtype == np.float32
        assert np.array_equal(loaded.tensors[name], model.tensors[name])
    print("✅ 模型檔往返一致")


def test_header_layout(tmp_path):
    _, path = _saved(tmp_path)
    with open(path, 'rb') as handle:
        payload = handle.read()
    assert payload[:4] == b'DFSM'
    assert struct.unpack('<I', payload[4:8])[0] == 1
    fields = struct.unpack('<8I', payload[8:40])
    assert fields == (12, 6, 5, 2, 1, 3, 0, 4)


def test_bad_magic(tmp_path):
    _, path = _saved(tmp_path)
    _rewrite(path, lambda payload: payload.__setitem__(slice(0, 4), b'XXXX'))
    with pytest.raises(BadMagicError, match="bad magic"):
        load_model(path)


def test_empty_file_is_bad_magic(tmp_path):
    path = tmp_path / 'empty.dfsm'
    path.write_bytes(b'')
    with pytest.raises(BadMagicError):
        load_model(str(path))


def test_version_mismatch(tmp_path):
    _, path = _saved(tmp_path)
    _rewrite(path, lambda payload: payload.__setitem__(slice(4, 8), struct.pack('<I', 2)))
    with pytest.raises(VersionMismatchError):
        load_model(path)


def test_truncation_names_the_tensor(tmp_path):
    _, path = _saved(tmp_path)
    _rewrite(path, lambda payload: payload.__delitem__(slice(FIRST_TENSOR_DATA + 8, None)))
    with pytest.raises(TruncatedModelError, match="input.weight"):
        load_model(path)


def test_non_finite_weight_rejected(tmp_path):
    _, path = _saved(tmp_path)
    nan = struct.pack('<f', float('nan'))
    _rewrite(path, lambda payload: payload.__setitem__(slice(FIRST_TENSOR_DATA, FIRST_TENSOR_DATA + 4), nan))
    with pytest.raises(NonFiniteWeightError, match="input.weight"):
        load_model(path)


def test_trailing_bytes_rejected(tmp_path):
    _, path = _saved(tmp_path)
    _rewrite(path, lambda payload: payload.extend(b'\x00' * 4))
    with pytest.raises(ModelShapeError):
        load_model(path)


def test_invalid_config_rejected(tmp_path):
    _, path = _saved(tmp_path)
    # lookahead_frames 欄位改成 1
    _rewrite(path, lambda payload: payload.__setitem__(slice(32, 36), struct.pack('<I', 1)))
    with pytest.raises(ModelShapeError):
        load_model(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model(str(tmp_path / 'nope.dfsm'))


if __name__ == "__main__":
    import pathlib
    import tempfile
    with tempfile.TemporaryDirectory() as directory:
        test_round_trip_is_bit_exact(pathlib.Path(directory))
    print("🎉 模型檔測試完成")
