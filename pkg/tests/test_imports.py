#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
快速驗證套件與相依套件導入是否正常
"""

import importlib

import pytest

MODULES = [
    'src.algorithms.stft',
    'src.algorithms.tde',
    'src.algorithms.laec',
    'src.algorithms.dfsmn',
    'src.algorithms.dfsmn_backprop',
    'src.algorithms.pwf',
    'src.algorithms.metrics',
    'src.models.configs',
    'src.models.datasets',
    'src.models.dfsmn_model',
    'src.database.model_store',
    'src.database.manifest',
    'src.database.wav_io',
    'src.database.labels',
    'src.services.pipeline',
    'src.services.datagen',
    'src.services.trainer',
    'src.services.evaluation',
    'src.handlers.command_handler',
    'src.config',
    'src.cli',
    'src.app',
]


@pytest.mark.parametrize('name', MODULES)
def test_module_imports(name):
    assert importlib.import_module(name) is not None


def test_package_exports():
    import src.algorithms as algorithms
    import src.database as database
    import src.models as models

    for package in (algorithms, database, models):
        for name in package.__all__:
            assert hasattr(package, name), f"{package.__name__} missing {name}"


def test_version_info():
    import flask
    import numpy
    import scipy
    import soundfile

    from src import __version__

    print("\n📦 版本資訊:")
    print(f"aec toolkit: {__version__}")
    print(f"numpy: {numpy.__version__}")
    print(f"scipy: {scipy.__version__}")
    print(f"soundfile: {soundfile.__version__}")
    print(f"flask: {getattr(flask, '__version__', 'unknown')}")
    assert __version__


if __name__ == "__main__":
    for module_name in MODULES:
        test_module_imports(module_name)
        print(f"✅ {module_name} 導入成功")
    test_package_exports()
    test_version_info()
    print("🎉 導入測試完成")
