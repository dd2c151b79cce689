#!/usr/bin/env python3
"""
📝 SYNTHETIC CORPORA
===================
Text streams for the micro SPEN experiments:

- in-distribution: sentences of both grammar variants rendered as plain text
- shifted: bracketed arithmetic expressions with their values, a structurally
  different genre standing in for code
"""

import logging
import math
from collections import Counter
from typing import Sequence, Tuple

import numpy as np

from domain.entities.grammar import GrammarVariant
from domain.services.grammar.grammar_generator import build_grammar, generate_dataset, render_text

logger = logging.getLogger(__name__)

OPERATORS = ("+", "-", "*")


def grammar_text(seed: int, n_sentences: int) -> str:
    """Sentences of grammars A and B, interleaved in a seeded order"""
    half = n_sentences // 2
    sentences = generate_dataset(build_grammar(GrammarVariant.A, seed), n_sentences - half, seed)
    sentences += generate_dataset(build_grammar(GrammarVariant.B, seed), half, seed + 1)
    order = np.random.default_rng(seed).permutation(len(sentences))
    return render_text(sentences[i] for i in order)


def _expression(rng: np.random.Generator, depth: int) -> Tuple[str, int]:
    if depth == 0 or rng.random() < 0.3:
        value = int(rng.integers(0, 10))
        return str(value), value
    left, lv = _expression(rng, depth - 1)
    right, rv = _expression(rng, depth - 1)
    op = OPERATORS[int(rng.integers(0, len(OPERATORS)))]
    value = lv + rv if op == "+" else lv - rv if op == "-" else lv * rv
    return f"({left}{op}{right})", value


def arithmetic_text(seed: int, n_chars: int, max_depth: int = 3) -> str:
    """Lines like '((3+4)*2)=14' until at least `n_chars` characters"""
    rng = np.random.default_rng(seed)
    lines = []
    total = 0
    while total < n_chars:
        expr, value = _expression(rng, max_depth)
        line = f"{expr}={value}\n"
        lines.append(line)
        total += len(line)
    return "".join(lines)


def unigram_entropy(tokens: Sequence[int]) -> float:
    """Entropy (nats) of the empirical token distribution"""
    counts = Counter(int(t) for t in tokens)
    n = sum(counts.values())
    if n == 0:
        raise ValueError("unigram entropy of an empty stream")
    return float(-sum((c / n) * math.log(c / n) for c in counts.values()))
