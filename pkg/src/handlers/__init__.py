# -*- coding: utf-8 -*-
"""
Command Handlers Package
"""
from .command_handler import CommandHandler

__all__ = ['CommandHandler']
