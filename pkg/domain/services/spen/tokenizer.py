#!/usr/bin/env python3
"""
🔤 CHARACTER TOKENIZER
=====================
Fixed 96-symbol table: newline followed by printable ASCII 32..126.
"""

import logging
from typing import List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CHAR_TABLE = "\n" + "".join(chr(c) for c in range(32, 127))


class CharTokenizer:
    """
    Encodes text to ids in [0, 96). Unknown characters raise in strict mode and
    map to the space symbol otherwise.
    """

    def __init__(self, strict: bool = True):
        self.strict = strict
        self.table = CHAR_TABLE
        self.index = {ch: i for i, ch in enumerate(self.table)}

    @property
    def vocab_size(self) -> int:
        return len(self.table)

    def encode(self, text: str) -> np.ndarray:
        ids: List[int] = []
        unknown = 0
        for ch in text.replace("\r\n", "\n"):
            idx = self.index.get(ch)
            if idx is None:
                if self.strict:
                    raise ValueError(f"character {ch!r} is not in the tokenizer table")
                unknown += 1
                idx = self.index[" "]
            ids.append(idx)
        if unknown:
            logger.warning(f"⚠️ Replaced {unknown} unknown characters with spaces")
        return np.asarray(ids, dtype=np.int64)

    def decode(self, ids: Sequence[int]) -> str:
        return "".join(self.table[int(i)] for i in ids)
