#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
VAD 標記檔：純文字，每個 20 ms 音框一個 0/1（以空白或換行分隔）
"""

import os

import numpy as np

from src.utils.errors import AecError


def read_labels(path: str) -> np.ndarray:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, 'r', encoding='utf-8') as handle:
        tokens = handle.read().split()
    invalid = [token for token in tokens if token not in ('0', '1')]
    if invalid:
        raise AecError(f"{path}: labels must be 0 or 1, found '{invalid[0]}'")
    return np.array([token == '1' for token in tokens], dtype=bool)


def write_labels(path: str, labels) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write('\n'.join('1' if value else '0' for value in np.asarray(labels).reshape(-1)))
        handle.write('\n')
    return path
