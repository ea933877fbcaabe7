"""Loaders for the three external knowledge sources.

All three resources are plain UTF-8 text files:

* lexicon: TSV ``word<TAB>[pos]<TAB>[freq]``, one entry per line
* embeddings: word2vec text format, header ``<count> <dim>`` then
  ``word v1 ... v_dim`` per line
* pinyin table: TSV ``word<TAB>syllable1 syllable2 ...`` with one
  syllable per character

Loaded resources are immutable and safe to share across threads and
worker processes.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ResourceError

_TONE_DIGITS = "012345"


def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ResourceError(f"cannot read {path}: {exc}") from exc


@dataclass(frozen=True)
class LexiconEntry:
    pos: str | None = None
    freq: int | None = None


@dataclass(frozen=True)
class Lexicon:
    """Word inventory with optional POS tags and frequencies."""

    entries: dict[str, LexiconEntry]
    max_word_len: int
    duplicates_skipped: int = 0

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def pos_of(self, word: str) -> str | None:
        entry = self.entries.get(word)
        return entry.pos if entry is not None else None

    def pos_tags(self) -> list[str]:
        """Sorted set of POS tags observed across all entries."""
        return sorted({e.pos for e in self.entries.values() if e.pos is not None})


def load_lexicon(path: str | Path) -> Lexicon:
    """Parse a lexicon TSV. Duplicate words keep the first occurrence;
    the number of skipped duplicates is recorded on the result.
    Blank lines are ignored."""
    entries: dict[str, LexiconEntry] = {}
    duplicates = 0
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) > 3:
            raise ParseError(f"expected at most 3 tab-separated fields, got {len(fields)}", lineno)
        word = fields[0]
        if not word:
            raise ParseError("empty word", lineno)
        pos = fields[1] if len(fields) > 1 and fields[1] else None
        freq: int | None = None
        if len(fields) > 2 and fields[2]:
            try:
                freq = int(fields[2])
            except ValueError:
                raise ParseError(f"frequency is not an integer: {fields[2]!r}", lineno) from None
            if freq < 0:
                raise ParseError(f"negative frequency: {freq}", lineno)
        if word in entries:
            duplicates += 1
            continue
        entries[word] = LexiconEntry(pos=pos, freq=freq)
    max_len = max((len(w) for w in entries), default=0)
    return Lexicon(entries=entries, max_word_len=max_len, duplicates_skipped=duplicates)


class WordEmbeddings:
    """Word vectors with a precomputed unit-norm matrix for cosine lookups.

    Vectors are float64 and guaranteed non-zero; entries with a wrong
    dimensionality or zero norm are rejected at load time.
    """

    def __init__(self, dim: int, vectors: dict[str, np.ndarray],
                 rejected: int = 0, duplicates_skipped: int = 0):
        self.dim = dim
        self.vectors = {w: np.asarray(v, dtype=np.float64) for w, v in vectors.items()}
        self.rejected = rejected
        self.duplicates_skipped = duplicates_skipped
        for w, v in self.vectors.items():
            if v.shape != (dim,):
                raise ValueError(f"vector for {w!r} has shape {v.shape}, expected ({dim},)")
            if not np.linalg.norm(v) > 0.0:
                raise ValueError(f"vector for {w!r} has zero norm")
        self.words: tuple[str, ...] = tuple(self.vectors)
        self._index = {w: i for i, w in enumerate(self.words)}
        if self.words:
            matrix = np.stack([self.vectors[w] for w in self.words])
            self._unit = matrix / np.linalg.norm(matrix, axis=1, keepdims=True)
        else:
            self._unit = np.zeros((0, dim))
        # row indices bucketed by word length, for same-length cosine scans
        self._by_length: dict[int, np.ndarray] = {}
        lengths: dict[int, list[int]] = {}
        for i, w in enumerate(self.words):
            lengths.setdefault(len(w), []).append(i)
        for n, idx in lengths.items():
            self._by_length[n] = np.asarray(idx, dtype=np.intp)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __len__(self) -> int:
        return len(self.words)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WordEmbeddings):
            return NotImplemented
        return (self.dim == other.dim and self.words == other.words
                and all(np.array_equal(self.vectors[w], other.vectors[w]) for w in self.words))

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[word]

    def unit_rows(self) -> np.ndarray:
        return self._unit

    def row_index(self, word: str) -> int:
        return self._index[word]

    def same_length_rows(self, length: int) -> np.ndarray:
        return self._by_length.get(length, np.empty(0, dtype=np.intp))


def load_embeddings(path: str | Path) -> WordEmbeddings:
    """Parse word2vec-style text embeddings.

    The header count must match the number of data lines. Rows whose
    vector length differs from the header dim, or whose norm is zero,
    are rejected (counted, not fatal). Duplicate words keep the first
    occurrence.
    """
    lines = _read_text(path).splitlines()
    if not lines:
        raise ParseError("missing header line", 1)
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError(f"header must be '<count> <dim>', got {lines[0]!r}", 1)
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError(f"header must be two integers, got {lines[0]!r}", 1) from None
    if count < 0 or dim <= 0:
        raise ParseError(f"invalid header values: count={count} dim={dim}", 1)
    rows = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(rows) != count:
        raise ParseError(f"header declares {count} entries but file has {len(rows)} rows")
    vectors: dict[str, np.ndarray] = {}
    rejected = 0
    duplicates = 0
    for lineno, line in rows:
        parts = line.split()
        word = parts[0]
        try:
            values = [float(x) for x in parts[1:]]
        except ValueError:
            raise ParseError(f"non-numeric vector component in {line!r}", lineno) from None
        if len(values) != dim:
            rejected += 1
            continue
        vec = np.asarray(values, dtype=np.float64)
        if not np.linalg.norm(vec) > 0.0:
            rejected += 1
            continue
        if word in vectors:
            duplicates += 1
            continue
        vectors[word] = vec
    return WordEmbeddings(dim=dim, vectors=vectors, rejected=rejected,
                          duplicates_skipped=duplicates)


@dataclass(frozen=True)
class PinyinTable:
    """Tone-stripped pinyin for words, plus the exact inverse index."""

    by_word: dict[str, str]
    by_pinyin: dict[str, frozenset[str]]
    rejected: int = 0
    duplicates_skipped: int = 0

    def pinyin_of(self, word: str) -> str | None:
        return self.by_word.get(word)

    def homophones(self, word: str) -> frozenset[str]:
        """All table words sharing this word's pinyin, including itself."""
        p = self.by_word.get(word)
        if p is None:
            return frozenset()
        return self.by_pinyin[p]


def strip_tone(syllable: str) -> str:
    """Normalize a pinyin syllable: lowercase, remove diacritics, drop a
    trailing tone digit."""
    s = unicodedata.normalize("NFD", syllable.lower())
    s = "".join(ch for ch in s if not unicodedata.combining(ch))
    if s and s[-1] in _TONE_DIGITS:
        s = s[:-1]
    return s


def load_pinyin_table(path: str | Path) -> PinyinTable:
    """Parse a pinyin TSV. Entries whose syllable count differs from the
    character count are rejected (counted, not fatal). Duplicate words
    keep the first occurrence. Blank lines are ignored."""
    by_word: dict[str, str] = {}
    rejected = 0
    duplicates = 0
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise ParseError("expected 'word<TAB>syllables'", lineno)
        word, _, syllable_part = line.partition("\t")
        if not word:
            raise ParseError("empty word", lineno)
        syllables = [strip_tone(s) for s in syllable_part.split()]
        if not syllables or any(not s for s in syllables):
            raise ParseError(f"empty syllable in {line!r}", lineno)
        if len(syllables) != len(word):
            rejected += 1
            continue
        if word in by_word:
            duplicates += 1
            continue
        by_word[word] = " ".join(syllables)
    inverse: dict[str, set[str]] = {}
    for word, pinyin in by_word.items():
        inverse.setdefault(pinyin, set()).add(word)
    by_pinyin = {p: frozenset(words) for p, words in inverse.items()}
    return PinyinTable(by_word=by_word, by_pinyin=by_pinyin,
                       rejected=rejected, duplicates_skipped=duplicates)


@dataclass
class Resources:
    """Bundle of the loaded knowledge sources threaded through the
    pretraining pipeline."""

    lexicon: Lexicon | None = None
    embeddings: WordEmbeddings | None = None
    pinyin: PinyinTable | None = None
