#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
WAV 讀寫（soundfile）

只接受 16 kHz 單聲道的 16-bit PCM 或 32-bit float，不做任何重取樣。
"""

import io
import logging
import os

import numpy as np
import soundfile as sf

from src.algorithms.stft import as_samples
from src.models.configs import SAMPLE_RATE_HZ
from src.utils.errors import AudioFormatError

logger = logging.getLogger(__name__)

ACCEPTED_SUBTYPES = ('PCM_16', 'FLOAT')


def _check_format(name: str, samplerate: int, channels: int, subtype: str):
    if samplerate != SAMPLE_RATE_HZ:
        raise AudioFormatError(f"{name}: sample rate {samplerate} Hz, expected {SAMPLE_RATE_HZ}")
    if channels != 1:
        raise AudioFormatError(f"{name}: {channels} channels, expected mono")
    if subtype not in ACCEPTED_SUBTYPES:
        raise AudioFormatError(f"{name}: unsupported encoding {subtype}, expected one of {ACCEPTED_SUBTYPES}")


def read_wav(path: str) -> np.ndarray:
    """讀取 WAV 並回傳 float64 一維陣列"""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such file: {path}")
    try:
        info = sf.info(path)
    except RuntimeError as e:
        raise AudioFormatError(f"{path}: not a readable WAV file ({e})") from e

    _check_format(path, info.samplerate, info.channels, info.subtype)
    data, _ = sf.read(path, dtype='float64', always_2d=False)
    logger.debug(f"[WAV] Read {path}: {data.size} samples ({info.subtype})")
    return as_samples(data)


def read_wav_bytes(payload: bytes, name: str = 'upload') -> np.ndarray:
    """從記憶體中的 WAV 位元組讀取，格式檢查與 read_wav 相同"""
    try:
        with sf.SoundFile(io.BytesIO(payload)) as source:
            _check_format(name, source.samplerate, source.channels, source.subtype)
            data = source.read(dtype='float64', always_2d=False)
    except RuntimeError as e:
        raise AudioFormatError(f"{name}: not a readable WAV file ({e})") from e
    logger.debug(f"[WAV] Read {name}: {data.size} samples")
    return as_samples(data)


def write_wav(path: str, samples, subtype: str = 'FLOAT') -> str:
    """寫出 16 kHz 單聲道 WAV；預設 32-bit float 以保留超過 ±1 的樣本"""
    if subtype not in ACCEPTED_SUBTYPES:
        raise AudioFormatError(f"unsupported output encoding {subtype}")
    data = as_samples(samples)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    sf.write(path, data, SAMPLE_RATE_HZ, subtype=subtype, format='WAV')
    logger.debug(f"[WAV] Wrote {path}: {data.size} samples ({subtype})")
    return path


def wav_bytes(samples, subtype: str = 'FLOAT') -> bytes:
    """把樣本編碼成記憶體中的 16 kHz 單聲道 WAV"""
    if subtype not in ACCEPTED_SUBTYPES:
        raise AudioFormatError(f"unsupported output encoding {subtype}")
    buffer = io.BytesIO()
    sf.write(buffer, as_samples(samples), SAMPLE_RATE_HZ, subtype=subtype, format='WAV')
    return buffer.getvalue()
