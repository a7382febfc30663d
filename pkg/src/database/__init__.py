#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from .model_store import load_model, save_model
from .manifest import ManifestRepository
from .wav_io import read_wav, read_wav_bytes, wav_bytes, write_wav

__all__ = ['load_model', 'save_model', 'ManifestRepository', 'read_wav', 'read_wav_bytes', 'wav_bytes', 'write_wav']
