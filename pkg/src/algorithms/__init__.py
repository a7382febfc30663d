# -*- coding: utf-8 -*-
"""
Algorithms Package
"""
from .stft import stft_push, istft_push, log_magnitude
from .tde import DelayEstimate, estimate_delay, align
from .laec import LaecState, laec_process, laec_residual
from .dfsmn import ResState, ResEngine, res_forward
from .pwf import wiener_mask, apply_pwf
from .metrics import erle, ser, energy_vad, dcf

__all__ = [
    'stft_push', 'istft_push', 'log_magnitude',
    'DelayEstimate', 'estimate_delay', 'align',
    'LaecState', 'laec_process', 'laec_residual',
    'ResState', 'ResEngine', 'res_forward',
    'wiener_mask', 'apply_pwf',
    'erle', 'ser', 'energy_vad', 'dcf'
]
