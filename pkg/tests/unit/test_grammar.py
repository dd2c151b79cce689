#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR THE GRAMMAR GENERATOR
=======================================
Lexicon size, determinism, split disjointness and corpus file round trips.
"""

from collections import Counter

import pytest

from domain.entities.grammar import (
    ROLE_SET,
    Category,
    GrammarVariant,
    LabeledSentence,
    SentenceTemplate,
    Slot,
    Structure,
)
from domain.services.grammar.grammar_generator import (
    VOCABULARY_SIZE,
    build_grammar,
    full_vocabulary,
    generate_dataset,
    infer_structure,
    make_splits,
    read_corpus,
    read_metadata,
    render_text,
    write_corpus,
)


def test_vocabulary_has_147_distinct_words():
    """Test both variants index the same 147-word one-hot space"""
    vocab = full_vocabulary()
    assert len(vocab) == VOCABULARY_SIZE == 147
    assert len(set(vocab)) == 147
    a = build_grammar(GrammarVariant.A)
    b = build_grammar(GrammarVariant.B)
    assert a.vocabulary() == b.vocabulary()
    assert a.function_words() == b.function_words()
    assert not set(a.content_words()) & set(b.content_words())


def test_role_set_has_twenty_roles():
    """Test the fixed role inventory"""
    assert len(ROLE_SET) == 20
    assert len(set(ROLE_SET)) == 20


def test_every_structure_has_a_template():
    """Test the six structures are shared by both variants"""
    for variant in GrammarVariant:
        grammar = build_grammar(variant)
        for structure in Structure:
            assert grammar.template_for(structure).structure == structure


def test_dataset_is_deterministic():
    """Test the same seed gives the same sentences"""
    grammar = build_grammar(GrammarVariant.A, seed=3)
    first = generate_dataset(grammar, 60, seed=3)
    second = generate_dataset(grammar, 60, seed=3)
    assert first == second
    assert generate_dataset(grammar, 60, seed=4) != first


def test_structures_are_balanced():
    """Test n // 6 sentences per structure, remainder to the first structures"""
    sentences = generate_dataset(build_grammar(GrammarVariant.A), 62, seed=0)
    counts = Counter(s.structure for s in sentences)
    structures = list(Structure)
    assert counts[structures[0]] == 11
    assert counts[structures[1]] == 11
    assert all(counts[s] == 10 for s in structures[2:])


def test_sentences_follow_their_template():
    """Test tokens come from the variant lexicon and roles from the template"""
    grammar = build_grammar(GrammarVariant.B, seed=1)
    words = set(grammar.content_words()) | set(grammar.function_words())
    for sentence in generate_dataset(grammar, 120, seed=1):
        assert set(sentence.tokens) <= words
        template_roles = grammar.template_for(sentence.structure).roles
        it = iter(template_roles)
        assert all(role in it for role in sentence.roles)
        assert infer_structure(sentence.roles) == sentence.structure


def test_splits_are_disjoint_and_sized():
    """Test held-out sentences never repeat a training sentence"""
    split = make_splits(seed=7, n_train=300, n_test=120)
    assert split.sizes == {"train": 300, "test_within": 120, "test_transfer": 120}
    seen = {s.identity for s in split.train}
    assert not any(s.identity in seen for s in split.test_within)
    assert all(s.grammar == GrammarVariant.B for s in split.test_transfer)
    assert all(s.grammar == GrammarVariant.A for s in split.train + split.test_within)


def test_default_splits_land_near_35k_tokens():
    """Test 5000 training sentences give roughly 35K tokens"""
    split = make_splits(seed=0)
    assert 30_000 <= split.token_counts()["train"] <= 40_000


def test_negative_size_rejected():
    """Test a negative sentence count is refused"""
    with pytest.raises(ValueError):
        generate_dataset(build_grammar(GrammarVariant.A), -1, seed=0)


def test_corpus_file_round_trip(tmp_path):
    """Test token/ROLE lines and the metadata sidecar read back"""
    sentences = make_splits(seed=2, n_train=12, n_test=6).train
    path = write_corpus(sentences, tmp_path / "train.txt", {"variant": "A", "seed": 2})
    assert read_corpus(path) == sentences
    meta = read_metadata(path)
    assert meta["variant"] == "A"
    assert meta["n_sentences"] == "12"


def test_malformed_corpus_line(tmp_path):
    """Test a pair without a slash is reported"""
    path = tmp_path / "bad.txt"
    path.write_text("the/DET_AGENT cat\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_corpus(path)
    with pytest.raises(FileNotFoundError):
        read_corpus(tmp_path / "missing.txt")


def test_render_text_one_sentence_per_line():
    """Test plain rendering terminates each sentence with ' .'"""
    sentence = LabeledSentence(("the", "cat", "sleeps"), ("det_subject", "noun_subject", "verb"),
                               Structure.INTRANSITIVE, GrammarVariant.A)
    assert render_text([sentence, sentence]) == "the cat sleeps .\nthe cat sleeps .\n"
    assert sentence.to_line() == "the/DET_SUBJECT cat/NOUN_SUBJECT sleeps/VERB"


def test_labeled_sentence_validation():
    """Test mismatched lengths and unknown roles are refused"""
    with pytest.raises(ValueError):
        LabeledSentence(("the",), (), Structure.TRANSITIVE, GrammarVariant.A)
    with pytest.raises(ValueError):
        LabeledSentence(("the",), ("subject",), Structure.TRANSITIVE, GrammarVariant.A)


def test_template_rejects_orphan_determiner():
    """Test a determiner must be followed by its noun"""
    with pytest.raises(ValueError):
        SentenceTemplate(Structure.TRANSITIVE, (
            Slot(Category.DETERMINER, "det_agent"),
            Slot(Category.VERB, "verb"),
        ))
