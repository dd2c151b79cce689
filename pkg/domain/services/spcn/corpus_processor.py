#!/usr/bin/env python3
"""
📚 CORPUS PROCESSOR
==================
Runs a forward and a backward hierarchy over a sentence corpus and collects
per-token representation blocks.

Each sentence starts from reset activations, traces and SPA buffer; precision,
error variance and feedback weights carry over. Training is strictly
sequential. Evaluation may fan out over cloned hierarchies since sentences are
then independent.

Domain-Driven Design: Domain service coordinating hierarchy dynamics.
"""

import copy
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from domain.entities.grammar import DEEP_ROLES, LabeledSentence
from domain.entities.hierarchy import Hierarchy, Representations
from domain.services.grammar.grammar_generator import full_vocabulary
from domain.services.spcn.hierarchy_dynamics import step_token

BlockLists = Dict[str, List[np.ndarray]]


class CorpusProcessor:
    """
    📚 Bidirectional corpus pass

    Blocks produced per token: `{fwd,bwd}_x_0` and `{fwd,bwd}_{tf,ts}_<level>`.
    """

    def __init__(self, word_index: Optional[Dict[str, int]] = None, log_every: int = 1000):
        self.word_index = word_index or {w: i for i, w in enumerate(full_vocabulary())}
        self.log_every = max(1, int(log_every))
        self.logger = logging.getLogger(__name__)

    def encode(self, sentence: LabeledSentence) -> List[int]:
        try:
            return [self.word_index[token] for token in sentence.tokens]
        except KeyError as e:
            raise ValueError(f"token {e.args[0]!r} is not in the vocabulary")

    def _run_direction(self, hierarchy: Hierarchy, ids: Sequence[int], train: bool) -> Dict[str, np.ndarray]:
        hierarchy.reset_sentence()
        n_levels = len(hierarchy.levels)
        rows: Dict[str, List[np.ndarray]] = {"x_0": []}
        for lvl in range(n_levels):
            rows[f"tf_{lvl}"] = []
            rows[f"ts_{lvl}"] = []

        u = np.zeros(hierarchy.input_dim)
        for token_id in ids:
            u[:] = 0.0
            u[token_id] = 1.0
            step_token(hierarchy, u, train)
            rows["x_0"].append(hierarchy.levels[0].state.x.astype(np.float32))
            for lvl, level in enumerate(hierarchy.levels):
                rows[f"tf_{lvl}"].append(level.state.trace_fast.astype(np.float32))
                rows[f"ts_{lvl}"].append(level.state.trace_slow.astype(np.float32))
        return {name: np.stack(r) for name, r in rows.items()}

    def _process_sentences(self,
                           fwd: Hierarchy,
                           bwd: Hierarchy,
                           sentences: Sequence[LabeledSentence],
                           train: bool) -> BlockLists:
        blocks: BlockLists = {}
        for i, sentence in enumerate(sentences, 1):
            if len(sentence) == 0:
                raise ValueError("cannot process an empty sentence")
            ids = self.encode(sentence)
            forward = self._run_direction(fwd, ids, train)
            # backward hierarchy reads right-to-left; rows go back to token order
            backward = {k: v[::-1] for k, v in self._run_direction(bwd, ids[::-1], train).items()}
            for prefix, part in (("fwd", forward), ("bwd", backward)):
                for name, value in part.items():
                    blocks.setdefault(f"{prefix}_{name}", []).append(value)
            if train and i % self.log_every == 0:
                self.logger.info(f"📊 Trained on {i}/{len(sentences)} sentences")
        return blocks

    def process_corpus(self,
                       fwd: Hierarchy,
                       bwd: Hierarchy,
                       sentences: Sequence[LabeledSentence],
                       train: bool = False,
                       workers: int = 1) -> Representations:
        """Per-token representations for `sentences` (PGHU on when `train`)"""
        if fwd.config_dict()["levels"] != bwd.config_dict()["levels"]:
            raise ValueError("forward and backward hierarchies must share their level configuration")
        mode = "train" if train else "eval"
        self.logger.info(f"🚀 {mode} pass over {len(sentences)} sentences")

        try:
            if train or workers <= 1 or len(sentences) < 2 * workers:
                parts = [self._process_sentences(fwd, bwd, sentences, train)]
            else:
                bounds = np.linspace(0, len(sentences), workers + 1).astype(int)
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    parts = list(pool.map(
                        lambda ij: self._process_sentences(
                            copy.deepcopy(fwd), copy.deepcopy(bwd), sentences[ij[0]:ij[1]], False),
                        list(zip(bounds[:-1], bounds[1:])),
                    ))
        except Exception as e:
            self.logger.error(f"❌ {mode} pass failed: {str(e)}")
            raise

        names = parts[0].keys() if parts else []
        blocks = {
            name: np.concatenate([chunk for part in parts for chunk in part[name]], axis=0)
            for name in names
        }
        representations = Representations(blocks=blocks, n_levels=len(fwd.levels))
        self.logger.info(f"✅ {mode} pass done: {representations.n_tokens} tokens")
        return representations


def process_corpus(fwd: Hierarchy,
                   bwd: Hierarchy,
                   sentences: Sequence[LabeledSentence],
                   train: bool = False,
                   workers: int = 1) -> Representations:
    return CorpusProcessor().process_corpus(fwd, bwd, sentences, train=train, workers=workers)


def token_labels(sentences: Sequence[LabeledSentence]) -> np.ndarray:
    """Role ids for every token, in corpus order"""
    return np.array([rid for s in sentences for rid in s.role_ids], dtype=np.int64)


def deep_mask(sentences: Sequence[LabeledSentence]) -> np.ndarray:
    """True for tokens carrying a relative-clause role"""
    return np.array([role in DEEP_ROLES for s in sentences for role in s.roles], dtype=bool)
