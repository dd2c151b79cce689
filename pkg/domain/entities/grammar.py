#!/usr/bin/env python3
"""
📖 GRAMMAR ENTITIES
==================
Core domain entities for the two-grammar role-labelling benchmark.

Domain-Driven Design: Core domain entities with no behaviour beyond
validation and (de)serialization.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Tuple


class GrammarVariant(Enum):
    """Grammar variant: A (animals) or B (vehicles)"""
    A = "A"
    B = "B"


class Structure(Enum):
    """Sentence structures shared by both variants"""
    TRANSITIVE = "transitive"
    PASSIVE = "passive"
    DITRANSITIVE = "ditransitive"
    RELATIVE_CLAUSE = "relative_clause"
    INTRANSITIVE = "intransitive"
    ADVERBIAL = "adverbial"


class Category(Enum):
    """Lexical categories"""
    DETERMINER = "determiner"
    AUXILIARY = "auxiliary"
    RELATIVIZER = "relativizer"
    PREP_BY = "prep_by"
    PREP_TO = "prep_to"
    NOUN = "noun"
    VERB = "verb"
    VERB_PARTICIPLE = "verb_participle"
    VERB_INTRANSITIVE = "verb_intransitive"
    ADJECTIVE = "adjective"
    ADVERB = "adverb"


FUNCTION_CATEGORIES = (
    Category.DETERMINER, Category.AUXILIARY, Category.RELATIVIZER,
    Category.PREP_BY, Category.PREP_TO,
)

CONTENT_CATEGORIES = (
    Category.NOUN, Category.VERB, Category.VERB_PARTICIPLE,
    Category.VERB_INTRANSITIVE, Category.ADJECTIVE, Category.ADVERB,
)

# Fixed role inventory; the index of a role is its class id for probing.
ROLE_SET: Tuple[str, ...] = (
    "det_agent", "adj_agent", "noun_agent", "verb",
    "det_patient", "adj_patient", "noun_patient",
    "aux_passive", "prep_by",
    "det_recipient", "noun_recipient", "prep_to",
    "rel_pronoun", "det_rel", "noun_rel", "verb_rel", "adj_rel",
    "adverb", "det_subject", "noun_subject",
)

ROLE_INDEX: Dict[str, int] = {role: i for i, role in enumerate(ROLE_SET)}

# Roles that only occur inside a relative clause.
DEEP_ROLES: Tuple[str, ...] = ("rel_pronoun", "det_rel", "adj_rel", "noun_rel", "verb_rel")

DETERMINER_ROLES = {
    "det_agent": "noun_agent",
    "det_patient": "noun_patient",
    "det_recipient": "noun_recipient",
    "det_rel": "noun_rel",
    "det_subject": "noun_subject",
}


@dataclass(frozen=True)
class Slot:
    """One template position"""
    category: Category
    role: str
    optional: bool = False


@dataclass(frozen=True)
class SentenceTemplate:
    """Ordered slot list for one structure"""
    structure: Structure
    slots: Tuple[Slot, ...]

    def __post_init__(self):
        if len(self.slots) < 2:
            raise ValueError(f"template {self.structure.value} needs at least 2 slots")
        for slot in self.slots:
            if slot.role not in ROLE_INDEX:
                raise ValueError(f"unknown role {slot.role!r}")
        if not self.is_legal_labeling():
            raise ValueError(f"template {self.structure.value} has a determiner not followed by its noun")

    @property
    def optional_slots(self) -> Tuple[Slot, ...]:
        return tuple(slot for slot in self.slots if slot.optional)

    @property
    def roles(self) -> Tuple[str, ...]:
        return tuple(slot.role for slot in self.slots)

    def is_legal_labeling(self) -> bool:
        """Each determiner precedes its noun, with at most one optional adjective between"""
        roles = self.roles
        for i, role in enumerate(roles):
            if role not in DETERMINER_ROLES:
                continue
            noun = DETERMINER_ROLES[role]
            following = [r for r, s in zip(roles[i + 1:], self.slots[i + 1:]) if not s.optional]
            if not following or following[0] != noun:
                return False
        return True


@dataclass
class Grammar:
    """
    📖 One grammar variant

    The lexicon of a single variant holds the shared function words plus this
    variant's content words. `full_vocabulary` always lists all 147 words so
    both variants index the same one-hot space.
    """
    variant: GrammarVariant
    lexicon: Dict[Category, List[str]]
    templates: List[SentenceTemplate]
    role_set: Tuple[str, ...]
    full_vocabulary: List[str] = field(default_factory=list)
    seed: int = 0

    def vocabulary(self) -> List[str]:
        """All 147 words in one-hot order"""
        return list(self.full_vocabulary)

    def word_index(self) -> Dict[str, int]:
        return {word: i for i, word in enumerate(self.full_vocabulary)}

    def content_words(self) -> List[str]:
        words: List[str] = []
        for category in CONTENT_CATEGORIES:
            words.extend(self.lexicon.get(category, []))
        return words

    def function_words(self) -> List[str]:
        words: List[str] = []
        for category in FUNCTION_CATEGORIES:
            words.extend(self.lexicon.get(category, []))
        return words

    def template_for(self, structure: Structure) -> SentenceTemplate:
        for template in self.templates:
            if template.structure == structure:
                return template
        raise KeyError(structure)


@dataclass(frozen=True)
class LabeledSentence:
    """A token sequence with one role per token"""
    tokens: Tuple[str, ...]
    roles: Tuple[str, ...]
    structure: Structure
    grammar: GrammarVariant

    def __post_init__(self):
        if len(self.tokens) != len(self.roles):
            raise ValueError("tokens and roles must have equal length")
        for role in self.roles:
            if role not in ROLE_INDEX:
                raise ValueError(f"unknown role {role!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def identity(self) -> Tuple[str, ...]:
        """Sentence identity used for split disjointness"""
        return self.tokens

    @property
    def role_ids(self) -> List[int]:
        return [ROLE_INDEX[role] for role in self.roles]

    def to_line(self) -> str:
        return " ".join(f"{tok}/{role.upper()}" for tok, role in zip(self.tokens, self.roles))

    def text(self) -> str:
        return " ".join(self.tokens)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tokens": list(self.tokens),
            "roles": list(self.roles),
            "structure": self.structure.value,
            "grammar": self.grammar.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'LabeledSentence':
        return cls(
            tokens=tuple(data["tokens"]),
            roles=tuple(data["roles"]),
            structure=Structure(data["structure"]),
            grammar=GrammarVariant(data["grammar"]),
        )


@dataclass
class DatasetSplit:
    """Train / held-out / transfer split"""
    train: List[LabeledSentence]
    test_within: List[LabeledSentence]
    test_transfer: List[LabeledSentence]
    seed: int

    @property
    def sizes(self) -> Dict[str, int]:
        return {
            "train": len(self.train),
            "test_within": len(self.test_within),
            "test_transfer": len(self.test_transfer),
        }

    def token_counts(self) -> Dict[str, int]:
        return {
            "train": sum(len(s) for s in self.train),
            "test_within": sum(len(s) for s in self.test_within),
            "test_transfer": sum(len(s) for s in self.test_transfer),
        }
