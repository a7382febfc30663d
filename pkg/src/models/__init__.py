# -*- coding: utf-8 -*-
"""
Data Models Package
"""
from .configs import (
    StftConfig,
    LaecConfig,
    PwfConfig,
    DfsmnConfig,
    TrainConfig,
    PipelineConfig
)
from .dfsmn_model import DfsmnModel, MaskSet, count_params

__all__ = [
    'StftConfig',
    'LaecConfig',
    'PwfConfig',
    'DfsmnConfig',
    'TrainConfig',
    'PipelineConfig',
    'DfsmnModel',
    'MaskSet',
    'count_params'
]
