"""Character-level encoding with boundary markers.

A marker token follows every word of a segmentation (including the last,
so each word has a trailing marker for replaced-word detection). Markers
occupy real positions: they attend, are attended, and can be masked like
any other token. Encoding keeps a bidirectional alignment between
non-marker token positions and source characters, so markers can always
be stripped to recover the plain character encoding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ResourceError
from .segmenter import Segmentation, WordSpan

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
MARKER = "[S]"
REQUIRED_TOKENS = (PAD, UNK, CLS, SEP, MASK, MARKER)
_POS_MARKER_PREFIX = "[S:"


def pos_marker_token(pos: str) -> str:
    return f"[S:{pos}]"


@dataclass(frozen=True)
class Vocab:
    """Dense token inventory. Token id = position in ``tokens``.

    Special tokens and markers are disjoint from character tokens;
    ``char_ids`` lists everything else (the pool used for random
    substitution during masking).
    """

    tokens: tuple[str, ...]
    token_to_id: dict[str, int] = field(repr=False, compare=False, default_factory=dict)
    pos_marker_ids: dict[str, int] = field(repr=False, compare=False, default_factory=dict)
    marker_ids: frozenset[int] = field(repr=False, compare=False, default_factory=frozenset)
    char_ids: tuple[int, ...] = field(repr=False, compare=False, default=())

    def __post_init__(self):
        mapping: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            if not tok:
                raise ConfigError(f"empty token at id {i}")
            if tok in mapping:
                raise ConfigError(f"duplicate token {tok!r} (ids {mapping[tok]} and {i})")
            mapping[tok] = i
        missing = [t for t in REQUIRED_TOKENS if t not in mapping]
        if missing:
            raise ConfigError("vocabulary is missing required tokens: " + ", ".join(missing))
        pos_markers = {}
        for tok, i in mapping.items():
            if tok.startswith(_POS_MARKER_PREFIX) and tok.endswith("]") and len(tok) > 4:
                pos_markers[tok[len(_POS_MARKER_PREFIX):-1]] = i
        markers = frozenset({mapping[MARKER], *pos_markers.values()})
        reserved = markers | {mapping[t] for t in REQUIRED_TOKENS}
        chars = tuple(i for i in range(len(self.tokens)) if i not in reserved)
        object.__setattr__(self, "token_to_id", mapping)
        object.__setattr__(self, "pos_marker_ids", pos_markers)
        object.__setattr__(self, "marker_ids", markers)
        object.__setattr__(self, "char_ids", chars)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return self.token_to_id[PAD]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[UNK]

    @property
    def cls_id(self) -> int:
        return self.token_to_id[CLS]

    @property
    def sep_id(self) -> int:
        return self.token_to_id[SEP]

    @property
    def mask_id(self) -> int:
        return self.token_to_id[MASK]

    @property
    def marker_id(self) -> int:
        return self.token_to_id[MARKER]

    def id_of(self, token: str) -> int:
        """Token id, falling back to UNK."""
        return self.token_to_id.get(token, self.unk_id)

    def marker_id_for(self, pos: str | None, use_pos_markers: bool) -> int:
        if use_pos_markers and pos is not None:
            found = self.pos_marker_ids.get(pos)
            if found is not None:
                return found
        return self.marker_id


def build_vocab(chars, pos_tags=()) -> Vocab:
    """Assemble a vocabulary: specials, generic marker, one marker per POS
    tag, then the character inventory in sorted order."""
    char_tokens = sorted(set(chars))
    tokens = list(REQUIRED_TOKENS) + [pos_marker_token(p) for p in sorted(set(pos_tags))]
    reserved = set(tokens)
    tokens += [c for c in char_tokens if c not in reserved]
    return Vocab(tokens=tuple(tokens))


def load_vocab(path: str | Path) -> Vocab:
    """One token per line; id = zero-based line number (bit-exact
    interchange contract). Duplicates and missing required tokens raise
    ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ResourceError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    for i, tok in enumerate(lines):
        if not tok:
            raise ConfigError(f"empty token line {i + 1} in {path}")
    return Vocab(tokens=tuple(lines))


def save_vocab(vocab: Vocab, path: str | Path) -> None:
    Path(path).write_text("\n".join(vocab.tokens) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class MarkedSequence:
    """Token ids plus marker bookkeeping.

    ``char_alignment`` maps every character-token position to its source
    character index; markers and CLS/SEP have no alignment entry.
    """

    ids: tuple[int, ...]
    marker_positions: tuple[int, ...]
    word_of_marker: dict[int, WordSpan]
    char_alignment: dict[int, int]
    truncated: bool
    has_cls_sep: bool

    @property
    def char_count(self) -> int:
        return len(self.char_alignment)

    def special_positions(self) -> tuple[int, ...]:
        """Positions holding CLS/SEP framing tokens."""
        markers = set(self.marker_positions)
        return tuple(i for i in range(len(self.ids))
                     if i not in markers and i not in self.char_alignment)

    def char_token_positions(self) -> list[int]:
        """Character-token positions in sequence order."""
        return sorted(self.char_alignment)


def encode_marked(seg: Segmentation, vocab: Vocab, *,
                  insert_markers: bool = True,
                  pos_markers: bool = False,
                  max_len: int = 512,
                  add_cls_sep: bool = True,
                  marker_after_last: bool = True) -> MarkedSequence:
    """Encode a segmentation as character token ids with markers.

    When ``insert_markers`` is set, a marker follows every word; with
    ``marker_after_last`` off, the final included word gets none (markers
    only *between* words). ``pos_markers`` swaps in the per-POS marker
    where one exists, falling back to the generic marker. Truncation
    always happens at a word boundary; a word that cannot fit the
    remaining budget ends the sequence (never split mid-word).
    """
    if add_cls_sep and max_len < 3:
        raise ConfigError(f"max_len={max_len} cannot hold CLS and SEP plus content")
    if max_len < 1:
        raise ConfigError(f"max_len must be positive, got {max_len}")
    budget = max_len - (2 if add_cls_sep else 0)

    included: list[WordSpan] = []
    used = 0
    for span in seg.spans:
        cost = len(span) + (1 if insert_markers else 0)
        if used + cost > budget:
            break
        included.append(span)
        used += cost
    truncated = len(included) < len(seg.spans)

    ids: list[int] = []
    marker_positions: list[int] = []
    word_of_marker: dict[int, WordSpan] = {}
    char_alignment: dict[int, int] = {}
    if add_cls_sep:
        ids.append(vocab.cls_id)
    for w, span in enumerate(included):
        for char_index in range(span.start, span.end):
            char_alignment[len(ids)] = char_index
            ids.append(vocab.id_of(seg.text[char_index]))
        is_last = w == len(included) - 1
        if insert_markers and (marker_after_last or not is_last):
            marker_positions.append(len(ids))
            word_of_marker[len(ids)] = span
            ids.append(vocab.marker_id_for(span.pos, pos_markers))
    if add_cls_sep:
        ids.append(vocab.sep_id)

    return MarkedSequence(ids=tuple(ids), marker_positions=tuple(marker_positions),
                          word_of_marker=word_of_marker, char_alignment=char_alignment,
                          truncated=truncated, has_cls_sep=add_cls_sep)


def strip_markers(marked: MarkedSequence) -> list[int]:
    """Token ids with every marker position removed, order preserved."""
    markers = set(marked.marker_positions)
    return [tid for i, tid in enumerate(marked.ids) if i not in markers]
