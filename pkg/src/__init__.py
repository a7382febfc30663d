# -*- coding: utf-8 -*-
"""
Streaming two-stage AEC toolkit - Main Package
"""
__version__ = '1.0.0'
