#!/usr/bin/env python3
"""
💾 FILE REPOSITORY
=================
Infrastructure repository for file-based report persistence.

Domain-Driven Design: Infrastructure layer repository for data persistence.
Writes JSON reports, CSV tables, JSON-lines logs and plain text into one run
directory.
"""

import logging
from dataclasses import asdict, is_dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import orjson
import pandas as pd

from domain.exceptions import InvariantViolation

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS | orjson.OPT_NON_STR_KEYS


def _default(obj: Any) -> Any:
    """Fallback for objects orjson does not know"""
    if isinstance(obj, datetime):
        return obj.isoformat()
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if is_dataclass(obj):
        return asdict(obj)
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(data: Any) -> bytes:
    return orjson.dumps(data, default=_default, option=JSON_OPTIONS)


class FileRepository:
    """
    💾 File-based repository for experiment outputs

    Handles:
    - JSON reports (orjson, sorted keys)
    - CSV tables (pandas)
    - append-only JSON-lines logs
    - refusing to clobber existing outputs unless forced
    """

    def __init__(self, base_path: Union[str, Path] = "results/runs", force: bool = False):
        self.base_path = Path(base_path)
        self.force = force
        self.logger = logging.getLogger(__name__)
        self.base_path.mkdir(parents=True, exist_ok=True)

    def path_for(self, filename: str, subfolder: Optional[str] = None) -> Path:
        directory = self.base_path / subfolder if subfolder else self.base_path
        directory.mkdir(parents=True, exist_ok=True)
        return directory / filename

    def guard(self, path: Path) -> None:
        if path.exists() and not self.force:
            raise InvariantViolation(f"refusing to overwrite {path} (use --force)")

    async def save_json(self, data: Any, filename: str, subfolder: Optional[str] = None) -> str:
        try:
            file_path = self.path_for(filename, subfolder)
            self.guard(file_path)
            file_path.write_bytes(dumps(data))
            self.logger.info(f"💾 Saved JSON report: {file_path}")
            return str(file_path)
        except Exception as e:
            self.logger.error(f"❌ Failed to save JSON {filename}: {str(e)}")
            raise

    async def load_json(self, filename: str, subfolder: Optional[str] = None) -> Dict[str, Any]:
        file_path = (self.base_path / subfolder if subfolder else self.base_path) / filename
        return orjson.loads(file_path.read_bytes())

    async def save_csv(self, rows: Union[pd.DataFrame, Iterable[Dict[str, Any]]], filename: str,
                       columns: Optional[List[str]] = None, subfolder: Optional[str] = None) -> str:
        try:
            frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
            file_path = self.path_for(filename, subfolder)
            self.guard(file_path)
            frame.to_csv(file_path, index=False)
            self.logger.info(f"💾 Saved CSV table ({len(frame)} rows): {file_path}")
            return str(file_path)
        except Exception as e:
            self.logger.error(f"❌ Failed to save CSV {filename}: {str(e)}")
            raise

    async def append_jsonl(self, record: Dict[str, Any], filename: str, subfolder: Optional[str] = None) -> str:
        file_path = self.path_for(filename, subfolder)
        with open(file_path, "ab") as f:
            f.write(orjson.dumps(record, default=_default, option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS))
            f.write(b"\n")
        self.logger.info(f"💾 Appended record to {file_path}")
        return str(file_path)

    async def save_text_file(self, content: str, filename: str, subfolder: Optional[str] = None) -> str:
        try:
            file_path = self.path_for(filename, subfolder)
            self.guard(file_path)
            file_path.write_text(content, encoding="utf-8")
            self.logger.info(f"💾 Saved text file: {file_path}")
            return str(file_path)
        except Exception as e:
            self.logger.error(f"❌ Failed to save text file {filename}: {str(e)}")
            raise
