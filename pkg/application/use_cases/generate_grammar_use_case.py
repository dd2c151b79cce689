#!/usr/bin/env python3
"""
📝 GENERATE GRAMMAR USE CASE
===========================
Writes the grammar-A training corpus and the held-out and transfer splits.

Domain-Driven Design: Application layer use case wrapping grammar generation.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

from domain.entities.grammar import GrammarVariant
from domain.exceptions import InvariantViolation
from domain.services.grammar.grammar_generator import make_splits, write_corpus

SPLIT_FILES = {"train": "train.txt", "test_within": "test_within.txt", "test_transfer": "test_transfer.txt"}
TOKEN_BAND = (30_000, 40_000)


@dataclass
class GrammarConfig:
    """Configuration for corpus generation"""
    out_dir: Path
    seed: int = 0
    n_train: int = 5000
    n_test: int = 3000
    force: bool = False


class GenerateGrammarUseCase:
    """
    📝 Generate and persist the three corpus splits
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    async def execute(self, config: GrammarConfig) -> Dict[str, Any]:
        out_dir = Path(config.out_dir)
        targets = {name: out_dir / filename for name, filename in SPLIT_FILES.items()}
        existing = [str(p) for p in targets.values() if p.exists()]
        if existing and not config.force:
            raise InvariantViolation(f"refusing to overwrite {existing} (use --force)")

        self.logger.info(f"🚀 Generating corpora with seed {config.seed}")
        split = make_splits(config.seed, config.n_train, config.n_test)
        variants = {"train": GrammarVariant.A, "test_within": GrammarVariant.A, "test_transfer": GrammarVariant.B}
        for name, sentences in (("train", split.train), ("test_within", split.test_within),
                                ("test_transfer", split.test_transfer)):
            write_corpus(sentences, targets[name], {"variant": variants[name].value, "seed": config.seed,
                                                    "split": name})

        tokens = split.token_counts()
        low, high = TOKEN_BAND
        if not low <= tokens["train"] <= high:
            self.logger.warning(f"⚠️ Training corpus has {tokens['train']} tokens, outside [{low}, {high}]")
        self.logger.info(f"📊 Token counts: {tokens}")
        return {"files": {k: str(v) for k, v in targets.items()}, "sizes": split.sizes, "tokens": tokens}
