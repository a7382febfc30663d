#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import json
import logging
import os
from typing import List, Optional

from src.models.datasets import ManifestRecord
from src.utils.errors import DatasetError

logger = logging.getLogger(__name__)


class ManifestRepository:
    """資料集 manifest（JSON-lines）操作類"""

    def __init__(self, path: str):
        self.path = path

    def add(self, record: ManifestRecord) -> ManifestRecord:
        """附加一筆紀錄到檔尾"""
        directory = os.path.dirname(self.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.path, 'a', encoding='utf-8') as handle:
            handle.write(json.dumps(record.to_dict(), ensure_ascii=False) + '\n')
        return record

    def get_all(self, limit: Optional[int] = None) -> List[ManifestRecord]:
        """依寫入順序讀出所有紀錄"""
        if not os.path.exists(self.path):
            return []
        records = []
        with open(self.path, 'r', encoding='utf-8') as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(ManifestRecord.from_dict(json.loads(line)))
                except (json.JSONDecodeError, TypeError) as e:
                    raise DatasetError(f"{self.path}:{line_no}: malformed manifest record ({e})") from e
                if limit is not None and len(records) >= limit:
                    break
        return records

    def count(self) -> int:
        return len(self.get_all())

    def clear(self):
        if os.path.exists(self.path):
            os.remove(self.path)
            logger.info(f"[DATAGEN] Removed manifest {self.path}")
