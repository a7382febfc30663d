# -*- coding: utf-8 -*-
"""
Tests Package
"""
