#!/usr/bin/env python3
"""
📖 GRAMMAR GENERATOR
===================
Deterministic generator for the two-grammar, 20-role, 147-word role-labelling
benchmark. Grammar A talks about animals, grammar B about vehicles; both share
the six sentence templates and all function words.

Domain-Driven Design: Domain service. Pure functions, safe to call from
several threads; every result is a function of (arguments, seed).
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np

from domain.entities.grammar import (
    Category,
    DatasetSplit,
    Grammar,
    GrammarVariant,
    LabeledSentence,
    ROLE_SET,
    SentenceTemplate,
    Slot,
    Structure,
)

logger = logging.getLogger(__name__)

VOCABULARY_SIZE = 147
ADJECTIVE_PROBABILITY = 0.5
TRAILING_ADVERB_PROBABILITY = 0.5
MAX_REDRAWS = 10_000

SHARED_LEXICON: Dict[Category, List[str]] = {
    Category.DETERMINER: ["the", "a"],
    Category.AUXILIARY: ["is", "was"],
    Category.RELATIVIZER: ["that", "which"],
    Category.PREP_BY: ["by"],
    Category.PREP_TO: ["to"],
}

CONTENT_LEXICON: Dict[GrammarVariant, Dict[Category, List[str]]] = {
    GrammarVariant.A: {
        Category.NOUN: [
            "cat", "dog", "bird", "mouse", "fox", "horse", "rabbit", "wolf",
            "bear", "deer", "goat", "sheep", "owl", "frog", "duck", "lion",
        ],
        Category.VERB: [
            "chases", "sees", "bites", "follows", "watches",
            "hunts", "feeds", "finds", "catches", "scares",
        ],
        Category.VERB_PARTICIPLE: [
            "chased", "seen", "bitten", "followed", "watched",
            "hunted", "fed", "found", "caught", "scared",
        ],
        Category.VERB_INTRANSITIVE: [
            "sleeps", "runs", "barks", "sings", "jumps", "hides", "eats", "swims",
        ],
        Category.ADJECTIVE: [
            "big", "small", "old", "young", "happy", "hungry", "lazy",
            "clever", "brave", "shy", "furry", "wild", "sleepy", "tiny",
        ],
        Category.ADVERB: [
            "quickly", "slowly", "quietly", "loudly", "happily", "gently",
            "eagerly", "calmly", "rarely", "often", "softly", "boldly",
        ],
    },
    GrammarVariant.B: {
        Category.NOUN: [
            "car", "bus", "bike", "truck", "train", "van", "boat", "tram",
            "taxi", "plane", "ship", "tractor", "scooter", "jeep", "wagon", "ferry",
        ],
        Category.VERB: [
            "tows", "passes", "blocks", "hits", "pushes",
            "pulls", "overtakes", "carries", "bumps", "signals",
        ],
        Category.VERB_PARTICIPLE: [
            "towed", "passed", "blocked", "hit", "pushed",
            "pulled", "overtaken", "carried", "bumped", "signaled",
        ],
        Category.VERB_INTRANSITIVE: [
            "stops", "starts", "stalls", "honks", "turns", "parks", "brakes", "idles",
        ],
        Category.ADJECTIVE: [
            "red", "blue", "green", "new", "rusty", "shiny", "heavy",
            "electric", "fast", "cheap", "dusty", "broken", "modern", "yellow",
        ],
        Category.ADVERB: [
            "smoothly", "noisily", "safely", "suddenly", "steadily", "carefully",
            "briskly", "roughly", "sharply", "smartly", "swiftly",
        ],
    },
}


def _noun_phrase(det_role: str, noun_role: str, adj_role: Optional[str]) -> List[Slot]:
    slots = [Slot(Category.DETERMINER, det_role)]
    if adj_role is not None:
        slots.append(Slot(Category.ADJECTIVE, adj_role, optional=True))
    slots.append(Slot(Category.NOUN, noun_role))
    return slots


def _build_templates() -> List[SentenceTemplate]:
    agent = _noun_phrase("det_agent", "noun_agent", "adj_agent")
    patient = _noun_phrase("det_patient", "noun_patient", "adj_patient")
    recipient = _noun_phrase("det_recipient", "noun_recipient", None)
    embedded = _noun_phrase("det_rel", "noun_rel", "adj_rel")
    verb = Slot(Category.VERB, "verb")

    return [
        SentenceTemplate(Structure.TRANSITIVE, tuple(agent + [verb] + patient)),
        SentenceTemplate(Structure.PASSIVE, tuple(
            patient
            + [Slot(Category.AUXILIARY, "aux_passive"),
               Slot(Category.VERB_PARTICIPLE, "verb"),
               Slot(Category.PREP_BY, "prep_by")]
            + agent
        )),
        SentenceTemplate(Structure.DITRANSITIVE, tuple(
            agent + [verb] + patient + [Slot(Category.PREP_TO, "prep_to")] + recipient
        )),
        # "the cat that chases the dog sees the bird"
        SentenceTemplate(Structure.RELATIVE_CLAUSE, tuple(
            agent
            + [Slot(Category.RELATIVIZER, "rel_pronoun"), Slot(Category.VERB, "verb_rel")]
            + embedded
            + [verb]
            + patient
        )),
        SentenceTemplate(Structure.INTRANSITIVE, (
            Slot(Category.DETERMINER, "det_subject"),
            Slot(Category.NOUN, "noun_subject"),
            Slot(Category.VERB_INTRANSITIVE, "verb"),
            Slot(Category.ADVERB, "adverb", optional=True),
        )),
        SentenceTemplate(Structure.ADVERBIAL, tuple(
            agent + [verb] + patient + [Slot(Category.ADVERB, "adverb")]
        )),
    ]


def full_vocabulary() -> List[str]:
    """Function words, then A content words, then B content words"""
    words: List[str] = []
    for category_words in SHARED_LEXICON.values():
        words.extend(category_words)
    for variant in (GrammarVariant.A, GrammarVariant.B):
        for category_words in CONTENT_LEXICON[variant].values():
            words.extend(category_words)
    return words


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    # any signed 64-bit seed maps onto a valid entropy word
    return np.random.default_rng([stream, int(seed) & 0xFFFFFFFFFFFFFFFF])


def build_grammar(variant: GrammarVariant, seed: int = 0) -> Grammar:
    """
    Build one grammar variant.

    The lexicon and templates are fixed; the seed is recorded so that datasets
    drawn from the grammar can be traced back to it.
    """
    variant = GrammarVariant(variant)
    lexicon: Dict[Category, List[str]] = {c: list(w) for c, w in SHARED_LEXICON.items()}
    for category, words in CONTENT_LEXICON[variant].items():
        lexicon[category] = list(words)

    vocabulary = full_vocabulary()
    if len(set(vocabulary)) != VOCABULARY_SIZE or len(vocabulary) != VOCABULARY_SIZE:
        raise AssertionError(f"lexicon must hold {VOCABULARY_SIZE} distinct words")

    return Grammar(
        variant=variant,
        lexicon=lexicon,
        templates=_build_templates(),
        role_set=ROLE_SET,
        full_vocabulary=vocabulary,
        seed=int(seed),
    )


def sample_sentence(grammar: Grammar, structure: Structure, rng: np.random.Generator) -> LabeledSentence:
    """Draw one sentence of the given structure"""
    template = grammar.template_for(structure)
    tokens: List[str] = []
    roles: List[str] = []
    for slot in template.slots:
        if slot.optional:
            p = ADJECTIVE_PROBABILITY if slot.category == Category.ADJECTIVE else TRAILING_ADVERB_PROBABILITY
            if rng.random() >= p:
                continue
        words = grammar.lexicon[slot.category]
        tokens.append(words[int(rng.integers(len(words)))])
        roles.append(slot.role)
    return LabeledSentence(tuple(tokens), tuple(roles), structure, grammar.variant)


def _structure_schedule(n_sentences: int, rng: np.random.Generator) -> List[Structure]:
    structures = list(Structure)
    base, remainder = divmod(n_sentences, len(structures))
    schedule: List[Structure] = []
    for i, structure in enumerate(structures):
        schedule.extend([structure] * (base + (1 if i < remainder else 0)))
    order = rng.permutation(len(schedule))
    return [schedule[i] for i in order]


def generate_dataset(grammar: Grammar,
                     n_sentences: int,
                     seed: int,
                     exclude: Optional[Set[Tuple[str, ...]]] = None) -> List[LabeledSentence]:
    """
    Generate `n_sentences` labelled sentences.

    Structures are balanced (n // 6 each, the remainder going to the first
    structures in declaration order) and shuffled. Sentences whose identity is
    in `exclude` are redrawn within the same structure.
    """
    if n_sentences < 0:
        raise ValueError(f"n_sentences must be >= 0, got {n_sentences}")
    rng = _rng(seed, stream=1 if grammar.variant == GrammarVariant.A else 2)
    sentences: List[LabeledSentence] = []
    for structure in _structure_schedule(n_sentences, rng):
        sentence = sample_sentence(grammar, structure, rng)
        if exclude:
            attempts = 0
            while sentence.identity in exclude:
                attempts += 1
                if attempts > MAX_REDRAWS:
                    raise RuntimeError(f"could not draw a fresh {structure.value} sentence")
                sentence = sample_sentence(grammar, structure, rng)
        sentences.append(sentence)
    return sentences


def make_splits(seed: int, n_train: int = 5000, n_test: int = 3000) -> DatasetSplit:
    """Train and held-out splits from grammar A, transfer split from grammar B"""
    grammar_a = build_grammar(GrammarVariant.A, seed)
    grammar_b = build_grammar(GrammarVariant.B, seed)

    train = generate_dataset(grammar_a, n_train, seed)
    seen = {s.identity for s in train}
    test_within = generate_dataset(grammar_a, n_test, _derive(seed, 1), exclude=seen)
    test_transfer = generate_dataset(grammar_b, n_test, _derive(seed, 2))

    split = DatasetSplit(train=train, test_within=test_within, test_transfer=test_transfer, seed=seed)
    logger.info(f"📊 Splits for seed {seed}: {split.sizes}, tokens {split.token_counts()}")
    return split


def _derive(seed: int, offset: int) -> int:
    return int(np.random.SeedSequence([offset, int(seed) & 0xFFFFFFFFFFFFFFFF]).generate_state(1, np.uint64)[0])


def infer_structure(roles: Iterable[str]) -> Structure:
    """Recover the template a role sequence was drawn from"""
    roles = list(roles)
    if "prep_by" in roles:
        return Structure.PASSIVE
    if "prep_to" in roles:
        return Structure.DITRANSITIVE
    if "rel_pronoun" in roles:
        return Structure.RELATIVE_CLAUSE
    if "det_subject" in roles:
        return Structure.INTRANSITIVE
    if "adverb" in roles:
        return Structure.ADVERBIAL
    return Structure.TRANSITIVE


def render_text(sentences: Iterable[LabeledSentence]) -> str:
    """Plain text, one sentence per line, terminated by ' .'"""
    return "".join(f"{s.text()} .\n" for s in sentences)


def write_corpus(sentences: List[LabeledSentence], path: Path, metadata: Dict[str, object]) -> Path:
    """Write `token/ROLE` lines plus a key=value sidecar next to `path`"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for sentence in sentences:
            f.write(sentence.to_line() + "\n")

    meta = dict(metadata)
    meta["n_sentences"] = len(sentences)
    meta["n_tokens"] = sum(len(s) for s in sentences)
    with open(path.with_suffix(".meta"), "w", encoding="utf-8", newline="\n") as f:
        for key in sorted(meta):
            f.write(f"{key}={meta[key]}\n")

    logger.info(f"💾 Wrote {meta['n_sentences']} sentences ({meta['n_tokens']} tokens) to {path}")
    return path


def read_metadata(path: Path) -> Dict[str, str]:
    meta: Dict[str, str] = {}
    meta_path = Path(path).with_suffix(".meta")
    if not meta_path.exists():
        return meta
    for line in meta_path.read_text(encoding="utf-8").splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def read_corpus(path: Path) -> List[LabeledSentence]:
    """Read a corpus written by `write_corpus`"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    meta = read_metadata(path)
    variant = GrammarVariant(meta.get("variant", "A"))

    sentences: List[LabeledSentence] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        tokens: List[str] = []
        roles: List[str] = []
        for pair in line.split():
            if "/" not in pair:
                raise ValueError(f"{path}:{lineno}: malformed pair {pair!r}")
            token, role = pair.rsplit("/", 1)
            tokens.append(token)
            roles.append(role.lower())
        sentences.append(LabeledSentence(tuple(tokens), tuple(roles), infer_structure(roles), variant))
    return sentences
