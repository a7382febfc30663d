#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
串流回音消除服務的開發用入口（生產環境使用 gunicorn src.app:app）
"""
import os
import sys

# 將專案根目錄加入 Python 路徑
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.app import app
from src.config import get_config
from src.utils.log import configure_logging

if __name__ == "__main__":
    settings = get_config()
    configure_logging(settings.LOG_LEVEL)
    port = int(os.environ.get('PORT', 5000))
    app.logger.info(f"[SERVICE] Listening on port {port} (model: {settings.MODEL_PATH or 'none, LAEC only'})")
    app.run(host='0.0.0.0', port=port, debug=settings.DEBUG)
