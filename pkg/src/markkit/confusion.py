"""Confusion-word generation: embedding-cosine synonyms and same-pinyin
homophones, plus the sampling policy used by the pretraining schedule.

All replacements preserve character length, so correction labels stay
position-aligned with the replaced word.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from .errors import ConfigError
from .resources import PinyinTable, WordEmbeddings


class ConfusionKind(enum.Enum):
    PINYIN = "PINYIN"
    SYNONYM = "SYNONYM"


@dataclass(frozen=True)
class ConfusionChoice:
    original: str
    replacement: str
    kind: ConfusionKind
    score: float


@dataclass(frozen=True)
class ConfusionPolicy:
    """How to pick between the two confusion kinds.

    ``p_pinyin`` is the probability of attempting the pinyin kind first;
    when the attempted kind has no candidates, the other kind is tried.
    """

    p_pinyin: float = 0.5
    k_syn: int = 5

    def __post_init__(self):
        if not 0.0 <= self.p_pinyin <= 1.0:
            raise ConfigError(f"p_pinyin must be in [0, 1], got {self.p_pinyin}")
        if self.k_syn < 1:
            raise ConfigError(f"k_syn must be >= 1, got {self.k_syn}")


def synonym_candidates(word: str, emb: WordEmbeddings, k: int) -> list[ConfusionChoice]:
    """Top-k words by cosine similarity, restricted to the same character
    length, excluding the word itself. Ties break lexicographically.
    A word absent from the embeddings yields an empty list."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if word not in emb:
        return []
    row = emb.row_index(word)
    unit = emb.unit_rows()
    bucket = emb.same_length_rows(len(word))
    sims = unit[bucket] @ unit[row]
    scored = [(float(min(max(sims[j], -1.0), 1.0)), emb.words[i])
              for j, i in enumerate(bucket) if i != row]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [ConfusionChoice(original=word, replacement=w, kind=ConfusionKind.SYNONYM, score=s)
            for s, w in scored[:k]]


def pinyin_candidates(word: str, table: PinyinTable) -> list[ConfusionChoice]:
    """All other table words sharing this word's full pinyin sequence
    (same character length by table invariant), sorted lexicographically."""
    pinyin = table.pinyin_of(word)
    if pinyin is None:
        return []
    return [ConfusionChoice(original=word, replacement=w, kind=ConfusionKind.PINYIN, score=1.0)
            for w in sorted(table.by_pinyin[pinyin]) if w != word]


def sample_confusion(word: str, emb: WordEmbeddings, table: PinyinTable,
                     rng: random.Random,
                     policy: ConfusionPolicy = ConfusionPolicy()) -> ConfusionChoice | None:
    """Draw one confusion for ``word`` or None when neither kind has
    candidates.

    RNG protocol (exactly this order, for reproducibility):
    1. one uniform decides the attempted kind (< p_pinyin means pinyin);
    2. if the attempted kind is empty, fall back to the other kind;
    3. one uniform choice among the selected kind's candidates.
    """
    attempt_pinyin = rng.random() < policy.p_pinyin
    if attempt_pinyin:
        candidates = pinyin_candidates(word, table)
        if not candidates:
            candidates = synonym_candidates(word, emb, policy.k_syn)
    else:
        candidates = synonym_candidates(word, emb, policy.k_syn)
        if not candidates:
            candidates = pinyin_candidates(word, table)
    if not candidates:
        return None
    return rng.choice(candidates)
