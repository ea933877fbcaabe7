"""Pretraining example construction: document packing plus the full
masking / replacement schedule.

Schedule defaults (all configurable via :class:`MaskingConfig`):

* 15% of the characters are selected for masked-LM prediction;
* 30% of examples are encoded without markers (vanilla downgrade);
* 50% of examples use whole-word masking, the rest per-character;
* each word is independently replaced by a confusion word 30% of the
  time (marked examples only), with MacBERT-style correction labels;
* markers over unreplaced words contribute to the detection loss only
  15% of the time, to balance the label distribution.

RNG protocol per example (one ``random.Random`` seeded from
:func:`derive_seed`; the order below is a stability contract relied on
by the replay tests):

1. one uniform: skip markers? (< p_no_marker)
2. one uniform: whole-word masking? (< p_wwm) — drawn even for
   no-marker examples, the two decisions are independent
3. markers present only: per word, in order, one uniform (< p_replace_word);
   on a hit, :func:`markkit.confusion.sample_confusion` draws from the
   same stream
4. one uniform for the stochastic rounding of the mask budget
   (``floor + [u < frac]`` of ``mask_ratio * n_chars``)
5. wwm: ``rng.shuffle`` of the non-replaced word slots, then greedy
   whole-word selection that skips words larger than the remaining
   budget; if budget remains and an unselected candidate word exists,
   one uniform masks the first such word (shuffle order) with
   probability ``budget / len(word)``, keeping the expected masked
   count unbiased; per-character: ``rng.sample`` of the non-replaced
   character positions, then per marker position (ascending) one
   uniform (< mask_ratio) — markers are mask targets in per-character
   mode but never consume the character budget
6. per selected position, ascending: one uniform for the 80/10/10
   mask/keep/random split; a random substitution draws one more uniform
   choice from the vocabulary's character pool
7. per NORMAL marker, ascending: one uniform (< p_normal_marker_loss);
   confusion markers always carry loss
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .confusion import ConfusionKind, ConfusionPolicy, sample_confusion
from .errors import ConfigError, ParseError
from .marker_encoder import MarkedSequence, Vocab, encode_marked
from .resources import Resources
from .segmenter import Segmentation, WordSpan


class RwdLabel(enum.IntEnum):
    """Per-marker detection label. Integer values double as class ids."""

    NORMAL = 0
    PINYIN_CONFUSION = 1
    SYNONYM_CONFUSION = 2


_KIND_TO_LABEL = {
    ConfusionKind.PINYIN: RwdLabel.PINYIN_CONFUSION,
    ConfusionKind.SYNONYM: RwdLabel.SYNONYM_CONFUSION,
}


@dataclass(frozen=True)
class MaskingConfig:
    mask_ratio: float = 0.15
    p_no_marker: float = 0.30
    p_wwm: float = 0.50
    p_replace_word: float = 0.30
    p_normal_marker_loss: float = 0.15
    max_len: int = 512

    def __post_init__(self):
        for name in ("mask_ratio", "p_no_marker", "p_wwm", "p_replace_word",
                     "p_normal_marker_loss"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.max_len < 3:
            raise ConfigError(f"max_len must be >= 3, got {self.max_len}")


@dataclass(frozen=True)
class ExampleMeta:
    doc_id: int = 0
    seq_index: int = 0
    seed: int = 0
    no_marker: bool = False
    wwm: bool = False
    n_chars: int = 0
    framed: bool = True
    truncated: bool = False


@dataclass(frozen=True)
class PretrainingExample:
    """Model-ready example.

    ``mlm_labels`` maps a position to the token id to predict there
    (present only at mask-selected and replacement-corrected positions);
    ``rwd_labels`` and ``rwd_loss_mask`` are keyed by marker position.
    """

    input_ids: tuple[int, ...]
    mlm_labels: dict[int, int]
    rwd_labels: dict[int, RwdLabel]
    rwd_loss_mask: dict[int, bool]
    meta: ExampleMeta = field(default_factory=ExampleMeta)

    @property
    def attention_len(self) -> int:
        return len(self.input_ids)

    @property
    def marker_positions(self) -> list[int]:
        return sorted(self.rwd_labels)

    def char_positions(self) -> list[int]:
        """Character-token positions: everything except markers and the
        CLS/SEP frame."""
        skip = set(self.rwd_labels)
        if self.meta.framed and self.input_ids:
            skip.add(0)
            skip.add(len(self.input_ids) - 1)
        return [i for i in range(len(self.input_ids)) if i not in skip]

    def replaced_positions(self) -> set[int]:
        """Positions belonging to confusion-replaced words. Each word's
        characters sit between the previous marker (or the frame start)
        and its own marker."""
        out: set[int] = set()
        start = 1 if self.meta.framed else 0
        for pos in self.marker_positions:
            if self.rwd_labels[pos] != RwdLabel.NORMAL:
                out.update(range(start, pos))
            start = pos + 1
        return out


@dataclass(frozen=True)
class PackedSegment:
    """A packed (possibly truncated) sequence plus its provenance, which
    seeds the per-example RNG."""

    seg: Segmentation
    doc_id: int
    seq_index: int
    truncated: bool = False


def _seq_cost(n_chars: int, n_words: int) -> int:
    # worst case: CLS + chars + one marker per word + SEP
    return n_chars + n_words + 2


def _concat(segs: Sequence[Segmentation]) -> Segmentation:
    text = "".join(s.text for s in segs)
    spans: list[WordSpan] = []
    offset = 0
    for s in segs:
        spans.extend(WordSpan(sp.start + offset, sp.end + offset, pos=sp.pos) for sp in s.spans)
        offset += len(s.text)
    return Segmentation(text=text, spans=tuple(spans))


def _truncate_to_budget(seg: Segmentation, max_len: int) -> Segmentation:
    kept: list[WordSpan] = []
    chars = 0
    for span in seg.spans:
        if _seq_cost(chars + len(span), len(kept) + 1) > max_len:
            break
        kept.append(span)
        chars += len(span)
    return Segmentation(text=seg.text[:chars], spans=tuple(kept))


def pack_documents(sentences: Iterable[Segmentation], cfg: MaskingConfig,
                   doc_id: int = 0, start_index: int = 0) -> Iterator[PackedSegment]:
    """Greedily pack consecutive sentences of one document into sequences
    whose worst-case encoded length (characters + one marker per word +
    CLS/SEP) fits ``cfg.max_len``.

    A sentence is never split across outputs unless it alone exceeds the
    budget, in which case it is truncated at a word boundary and its tail
    dropped. Empty sentences are skipped.
    """
    current: list[Segmentation] = []
    chars = words = 0
    seq_index = start_index

    def flush() -> Iterator[PackedSegment]:
        nonlocal current, chars, words, seq_index
        if current:
            yield PackedSegment(seg=_concat(current), doc_id=doc_id,
                                seq_index=seq_index, truncated=False)
            seq_index += 1
            current, chars, words = [], 0, 0

    for seg in sentences:
        if not seg.spans:
            continue
        n_c, n_w = len(seg.text), len(seg.spans)
        if _seq_cost(n_c, n_w) > cfg.max_len:
            yield from flush()
            clipped = _truncate_to_budget(seg, cfg.max_len)
            if clipped.spans:
                yield PackedSegment(seg=clipped, doc_id=doc_id,
                                    seq_index=seq_index, truncated=True)
                seq_index += 1
            continue
        if current and _seq_cost(chars + n_c, words + n_w) > cfg.max_len:
            yield from flush()
        current.append(seg)
        chars += n_c
        words += n_w
    yield from flush()


def derive_seed(corpus_seed: int, doc_id: int, seq_index: int) -> int:
    """Stable 63-bit per-example seed (splitmix64 over the three inputs)."""
    x = corpus_seed & 0xFFFFFFFFFFFFFFFF
    for value in (doc_id, seq_index):
        x = (x + 0x9E3779B97F4A7C15 + value) & 0xFFFFFFFFFFFFFFFF
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        x = x ^ (x >> 31)
    return x >> 1


def stochastic_round(rng: random.Random, value: float) -> int:
    """floor(value), plus one with probability frac(value). Always draws
    exactly one uniform so the RNG stream stays aligned."""
    base = int(value)
    frac = value - base
    return base + (1 if rng.random() < frac else 0)


def build_example(seg: Segmentation, vocab: Vocab, resources: Resources,
                  cfg: MaskingConfig, rng: random.Random, *,
                  policy: ConfusionPolicy = ConfusionPolicy(),
                  pos_markers: bool = False,
                  meta: ExampleMeta | None = None) -> PretrainingExample:
    """Apply the full schedule to one packed segmentation.

    See the module docstring for the exact RNG draw order. ``meta``
    carries provenance (doc id, seq index, seed); the drawn strategy
    flags and character count are filled in here.
    """
    no_marker = rng.random() < cfg.p_no_marker
    wwm = rng.random() < cfg.p_wwm

    marked = encode_marked(seg, vocab, insert_markers=not no_marker,
                           pos_markers=pos_markers, max_len=cfg.max_len,
                           add_cls_sep=True, marker_after_last=True)
    ids = list(marked.ids)
    mlm_labels: dict[int, int] = {}
    rwd_labels: dict[int, RwdLabel] = {}
    rwd_loss_mask: dict[int, bool] = {}

    # token positions per included word, in word order
    word_positions: list[list[int]] = []
    if no_marker:
        # reconstruct word groups from the segmentation spans; truncation
        # is word-aligned, so groups are either complete or absent
        pos_iter = iter(marked.char_token_positions())
        for span in seg.spans:
            group = [p for _, p in zip(range(len(span)), pos_iter)]
            if len(group) < len(span):
                break
            word_positions.append(group)
    else:
        markers_sorted = sorted(marked.word_of_marker)
        cursor = 1 if marked.has_cls_sep else 0
        for marker_pos in markers_sorted:
            word_positions.append(list(range(cursor, marker_pos)))
            cursor = marker_pos + 1

    replaced_words: set[int] = set()
    if not no_marker:
        markers_sorted = sorted(marked.word_of_marker)
        for w, marker_pos in enumerate(markers_sorted):
            span = marked.word_of_marker[marker_pos]
            rwd_labels[marker_pos] = RwdLabel.NORMAL
            if rng.random() >= cfg.p_replace_word:
                continue
            word = seg.text[span.start:span.end]
            choice = sample_confusion(word, resources.embeddings, resources.pinyin,
                                      rng, policy)
            if choice is None:
                continue
            positions = word_positions[w]
            for offset, pos in enumerate(positions):
                mlm_labels[pos] = ids[pos]  # correction target: original character
                ids[pos] = vocab.id_of(choice.replacement[offset])
            rwd_labels[marker_pos] = _KIND_TO_LABEL[choice.kind]
            replaced_words.add(w)

    # mask selection: budget counts characters only
    n_chars = marked.char_count
    target = min(stochastic_round(rng, cfg.mask_ratio * n_chars), n_chars)
    selectable_words = [w for w in range(len(word_positions)) if w not in replaced_words]
    selected: list[int] = []
    if wwm:
        order = list(selectable_words)
        rng.shuffle(order)
        budget = target
        chosen: set[int] = set()
        for w in order:
            if budget == 0:
                break
            if len(word_positions[w]) <= budget:
                chosen.add(w)
                budget -= len(word_positions[w])
        if budget > 0:
            # every remaining candidate is larger than the leftover budget;
            # masking the first one with probability budget/len keeps the
            # expected masked-character count equal to the target
            leftover = next((w for w in order if w not in chosen), None)
            if leftover is not None and \
                    rng.random() < budget / len(word_positions[leftover]):
                chosen.add(leftover)
        for w in order:
            if w in chosen:
                selected.extend(word_positions[w])
    else:
        pool = sorted(p for w in selectable_words for p in word_positions[w])
        selected.extend(rng.sample(pool, min(target, len(pool))))
        for marker_pos in sorted(rwd_labels):
            if rng.random() < cfg.mask_ratio:
                selected.append(marker_pos)

    char_pool = vocab.char_ids
    for pos in sorted(selected):
        mlm_labels[pos] = ids[pos]
        u = rng.random()
        if u < 0.8:
            ids[pos] = vocab.mask_id
        elif u < 0.9:
            pass  # keep the original token
        else:
            ids[pos] = char_pool[rng.randrange(len(char_pool))]

    for marker_pos in sorted(rwd_labels):
        if rwd_labels[marker_pos] == RwdLabel.NORMAL:
            rwd_loss_mask[marker_pos] = rng.random() < cfg.p_normal_marker_loss
        else:
            rwd_loss_mask[marker_pos] = True

    base = meta or ExampleMeta()
    full_meta = ExampleMeta(doc_id=base.doc_id, seq_index=base.seq_index, seed=base.seed,
                            no_marker=no_marker, wwm=wwm, n_chars=n_chars,
                            framed=marked.has_cls_sep,
                            truncated=base.truncated or marked.truncated)
    return PretrainingExample(input_ids=tuple(ids), mlm_labels=mlm_labels,
                              rwd_labels=rwd_labels, rwd_loss_mask=rwd_loss_mask,
                              meta=full_meta)


def build_packed_example(packed: PackedSegment, vocab: Vocab, resources: Resources,
                         cfg: MaskingConfig, corpus_seed: int, *,
                         policy: ConfusionPolicy = ConfusionPolicy(),
                         pos_markers: bool = False) -> PretrainingExample:
    """Build one example with its RNG seeded from (corpus seed, doc id,
    sequence index), so generation parallelizes deterministically."""
    seed = derive_seed(corpus_seed, packed.doc_id, packed.seq_index)
    meta = ExampleMeta(doc_id=packed.doc_id, seq_index=packed.seq_index,
                       seed=seed, truncated=packed.truncated)
    return build_example(packed.seg, vocab, resources, cfg, random.Random(seed),
                         policy=policy, pos_markers=pos_markers, meta=meta)


def plain_example(marked: MarkedSequence, doc_id: int = 0) -> PretrainingExample:
    """Wrap an encoding with no masking or replacement (inference input,
    e.g. for attention export)."""
    meta = ExampleMeta(doc_id=doc_id, no_marker=not marked.marker_positions,
                       n_chars=marked.char_count, framed=marked.has_cls_sep,
                       truncated=marked.truncated)
    return PretrainingExample(
        input_ids=tuple(marked.ids),
        mlm_labels={},
        rwd_labels={p: RwdLabel.NORMAL for p in marked.marker_positions},
        rwd_loss_mask={p: False for p in marked.marker_positions},
        meta=meta)


# --- JSON Lines interchange -------------------------------------------------

def example_to_json(ex: PretrainingExample) -> str:
    """One example per line; key order and separators are fixed so equal
    examples serialize to identical bytes."""
    record = {
        "input_ids": list(ex.input_ids),
        "mlm_labels": [[p, ex.mlm_labels[p]] for p in sorted(ex.mlm_labels)],
        "rwd_labels": [[p, ex.rwd_labels[p].name] for p in sorted(ex.rwd_labels)],
        "rwd_loss_mask": [p for p in sorted(ex.rwd_loss_mask) if ex.rwd_loss_mask[p]],
        "meta": {
            "doc_id": ex.meta.doc_id,
            "seq_index": ex.meta.seq_index,
            "seed": ex.meta.seed,
            "no_marker": ex.meta.no_marker,
            "wwm": ex.meta.wwm,
            "n_chars": ex.meta.n_chars,
            "framed": ex.meta.framed,
            "truncated": ex.meta.truncated,
        },
    }
    return json.dumps(record, ensure_ascii=True, separators=(",", ":"))


def example_from_json(line: str, lineno: int | None = None) -> PretrainingExample:
    try:
        record = json.loads(line)
        meta = record["meta"]
        return PretrainingExample(
            input_ids=tuple(record["input_ids"]),
            mlm_labels={int(p): int(t) for p, t in record["mlm_labels"]},
            rwd_labels={int(p): RwdLabel[name] for p, name in record["rwd_labels"]},
            rwd_loss_mask={int(p): (p in set(record["rwd_loss_mask"]))
                           for p, _ in record["rwd_labels"]},
            meta=ExampleMeta(doc_id=meta["doc_id"], seq_index=meta["seq_index"],
                             seed=meta["seed"], no_marker=meta["no_marker"],
                             wwm=meta["wwm"], n_chars=meta["n_chars"],
                             framed=meta["framed"], truncated=meta["truncated"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad example record: {exc}", lineno) from exc


# --- Corpus statistics -------------------------------------------------------

@dataclass
class MaskingStats:
    """Streaming counts over generated examples, with empirical rates."""

    n_examples: int = 0
    n_no_marker: int = 0
    n_wwm_marked: int = 0
    n_chars: int = 0
    n_masked_chars: int = 0
    n_masked_markers: int = 0
    n_markers: int = 0
    n_normal_markers: int = 0
    n_pinyin_markers: int = 0
    n_synonym_markers: int = 0
    n_normal_loss_on: int = 0
    n_confusion_loss_on: int = 0

    def add(self, ex: PretrainingExample) -> None:
        self.n_examples += 1
        if ex.meta.no_marker:
            self.n_no_marker += 1
        elif ex.meta.wwm:
            self.n_wwm_marked += 1
        self.n_chars += ex.meta.n_chars
        replaced = ex.replaced_positions()
        markers = set(ex.rwd_labels)
        for pos in ex.mlm_labels:
            if pos in markers:
                self.n_masked_markers += 1
            elif pos not in replaced:
                self.n_masked_chars += 1
        for pos, label in ex.rwd_labels.items():
            self.n_markers += 1
            loss_on = ex.rwd_loss_mask.get(pos, False)
            if label == RwdLabel.NORMAL:
                self.n_normal_markers += 1
                self.n_normal_loss_on += int(loss_on)
            else:
                self.n_confusion_loss_on += int(loss_on)
                if label == RwdLabel.PINYIN_CONFUSION:
                    self.n_pinyin_markers += 1
                else:
                    self.n_synonym_markers += 1

    @staticmethod
    def _rate(num: int, den: int) -> float | None:
        return num / den if den else None

    @property
    def n_marked(self) -> int:
        return self.n_examples - self.n_no_marker

    @property
    def n_confusion_markers(self) -> int:
        return self.n_pinyin_markers + self.n_synonym_markers

    def masked_char_fraction(self) -> float | None:
        return self._rate(self.n_masked_chars, self.n_chars)

    def no_marker_fraction(self) -> float | None:
        return self._rate(self.n_no_marker, self.n_examples)

    def wwm_fraction(self) -> float | None:
        return self._rate(self.n_wwm_marked, self.n_marked)

    def replaced_word_rate(self) -> float | None:
        return self._rate(self.n_confusion_markers, self.n_markers)

    def pinyin_share(self) -> float | None:
        return self._rate(self.n_pinyin_markers, self.n_confusion_markers)

    def synonym_share(self) -> float | None:
        return self._rate(self.n_synonym_markers, self.n_confusion_markers)

    def normal_marker_loss_rate(self) -> float | None:
        return self._rate(self.n_normal_loss_on, self.n_normal_markers)

    def confusion_marker_loss_rate(self) -> float | None:
        return self._rate(self.n_confusion_loss_on, self.n_confusion_markers)

    def to_dict(self) -> dict:
        return {
            "counts": {
                "examples": self.n_examples,
                "no_marker_examples": self.n_no_marker,
                "marked_examples": self.n_marked,
                "wwm_marked_examples": self.n_wwm_marked,
                "chars": self.n_chars,
                "masked_chars": self.n_masked_chars,
                "masked_markers": self.n_masked_markers,
                "markers": self.n_markers,
                "normal_markers": self.n_normal_markers,
                "pinyin_markers": self.n_pinyin_markers,
                "synonym_markers": self.n_synonym_markers,
                "normal_loss_on": self.n_normal_loss_on,
                "confusion_loss_on": self.n_confusion_loss_on,
            },
            "rates": {
                "masked_char_fraction": self.masked_char_fraction(),
                "no_marker_fraction": self.no_marker_fraction(),
                "wwm_fraction": self.wwm_fraction(),
                "replaced_word_rate": self.replaced_word_rate(),
                "pinyin_share": self.pinyin_share(),
                "synonym_share": self.synonym_share(),
                "normal_marker_loss_rate": self.normal_marker_loss_rate(),
                "confusion_marker_loss_rate": self.confusion_marker_loss_rate(),
            },
        }


def corpus_stats(examples: Iterable[PretrainingExample]) -> MaskingStats:
    stats = MaskingStats()
    for ex in examples:
        stats.add(ex)
    return stats


# --- corpus pipeline ----------------------------------------------------------

def read_documents(lines: Iterable[str],
                   segmenter) -> Iterator[list[Segmentation]]:
    """Group corpus lines into documents (blank line = document boundary)
    and segment each sentence with the given ``str -> Segmentation``
    callable."""
    doc: list[Segmentation] = []
    for line in lines:
        stripped = line.rstrip("\r\n")
        if not stripped.strip():
            if doc:
                yield doc
                doc = []
            continue
        doc.append(segmenter(stripped))
    if doc:
        yield doc


def pack_corpus(documents: Iterable[Sequence[Segmentation]],
                cfg: MaskingConfig) -> list[PackedSegment]:
    packed: list[PackedSegment] = []
    for doc_id, doc in enumerate(documents):
        packed.extend(pack_documents(doc, cfg, doc_id=doc_id))
    return packed


def generate_examples(packed: Sequence[PackedSegment], vocab: Vocab,
                      resources: Resources, cfg: MaskingConfig, corpus_seed: int,
                      *, workers: int = 1,
                      policy: ConfusionPolicy = ConfusionPolicy(),
                      pos_markers: bool = False) -> list[PretrainingExample]:
    """Build all examples, optionally across worker processes.

    Each example depends only on (corpus seed, doc id, seq index), and
    results are merged in packing order, so the output is identical for
    any worker count.
    """
    import functools

    build = functools.partial(build_packed_example, vocab=vocab, resources=resources,
                              cfg=cfg, corpus_seed=corpus_seed, policy=policy,
                              pos_markers=pos_markers)
    if workers <= 1 or len(packed) < 2:
        return [build(p) for p in packed]
    from multiprocessing import Pool

    chunk = max(1, len(packed) // (workers * 8))
    with Pool(workers) as pool:
        return pool.map(build, packed, chunksize=chunk)
