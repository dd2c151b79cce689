"""
📖 GRAMMAR SERVICES
==================
Two-grammar role-labelling benchmark: lexicon, templates, splits, corpus files.
"""

from .grammar_generator import (
    build_grammar,
    full_vocabulary,
    generate_dataset,
    infer_structure,
    make_splits,
    read_corpus,
    read_metadata,
    render_text,
    sample_sentence,
    write_corpus,
)

__all__ = [
    "build_grammar",
    "full_vocabulary",
    "generate_dataset",
    "infer_structure",
    "make_splits",
    "read_corpus",
    "read_metadata",
    "render_text",
    "sample_sentence",
    "write_corpus",
]
