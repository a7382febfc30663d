#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
錯誤類別定義

所有資料相關錯誤都繼承自 AecError（同時也是 ValueError），
CLI 依此決定結束碼：ConfigError 為 1，其他 AecError 為 2。
"""


class AecError(ValueError):
    """AEC 工具組的基礎錯誤"""


class ConfigError(AecError):
    """設定檔或參數錯誤"""


class AudioFormatError(AecError):
    """WAV 格式不支援（取樣率、聲道、編碼）"""


class NonFiniteInputError(AecError):
    """輸入含有 NaN 或 Inf"""


class ShapeMismatchError(AecError):
    """陣列長度或維度不符"""


class DelayEstimationError(AecError):
    """時間延遲估計失敗"""


class DatasetError(AecError):
    """資料合成參數錯誤"""


class DivergenceError(AecError):
    """訓練發散（loss 變成 NaN）"""


class ModelFileError(AecError):
    """模型檔讀寫錯誤"""


class BadMagicError(ModelFileError):
    pass


class VersionMismatchError(ModelFileError):
    pass


class TruncatedModelError(ModelFileError):
    pass


class NonFiniteWeightError(ModelFileError):
    pass


class ModelShapeError(ModelFileError):
    pass
