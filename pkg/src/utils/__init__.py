# -*- coding: utf-8 -*-
"""
Utility Functions Package
"""
from .errors import AecError, ConfigError
from .log import configure_logging

__all__ = ['AecError', 'ConfigError', 'configure_logging']
