"""Shared generators and oracles for the NER tests and the acceptance suite."""

import random

from markkit.ner import EntitySpan
from markkit.segmenter import Segmentation, WordSpan

ENTITY_TYPES = ("LOC", "ORG", "PER")


def random_bmeso_tags(rng: random.Random, length: int) -> list[str]:
    """Well-formed BMESO tag sequence of the given length."""
    tags: list[str] = []
    while len(tags) < length:
        if rng.random() < 0.5:
            tags.append("O")
            continue
        entity = rng.choice(ENTITY_TYPES)
        span_len = rng.randint(1, min(4, length - len(tags)))
        if span_len == 1:
            tags.append(f"S-{entity}")
        else:
            tags.append(f"B-{entity}")
            tags.extend(f"M-{entity}" for _ in range(span_len - 2))
            tags.append(f"E-{entity}")
    return tags


def random_segmentation(rng: random.Random, text: str) -> Segmentation:
    """Random tiling of ``text`` into 1-3 character words."""
    spans = []
    i = 0
    while i < len(text):
        length = rng.randint(1, min(3, len(text) - i))
        spans.append(WordSpan(i, i + length))
        i += length
    return Segmentation(text=text, spans=tuple(spans))


def brute_force_span_f1(pred, gold):
    """Oracle matcher: explicit pairwise comparison, no set operations."""
    pred_list, gold_list = list(pred), list(gold)
    tp = 0
    for p in pred_list:
        for g in gold_list:
            if (p.start, p.end, p.entity_type) == (g.start, g.end, g.entity_type):
                tp += 1
                break
    if pred_list:
        precision = tp / len(pred_list)
    else:
        precision = 1.0 if not gold_list else 0.0
    if gold_list:
        recall = tp / len(gold_list)
    else:
        recall = 1.0 if not pred_list else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def random_span_set(rng: random.Random, length: int, count: int) -> set[EntitySpan]:
    spans = set()
    for _ in range(count):
        start = rng.randrange(max(1, length))
        end = min(length, start + rng.randint(1, 3))
        if end > start:
            spans.add(EntitySpan(start, end, rng.choice(ENTITY_TYPES)))
    return spans
