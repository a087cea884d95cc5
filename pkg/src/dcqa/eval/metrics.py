"""Answer normalization and EM / token-F1 scoring for list-valued answers."""

from __future__ import annotations

import re
import string
from collections import Counter
from typing import Iterable, List, Sequence, Union

from ..errors import InvalidInput

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


def normalize_answer(s: str) -> str:
    """Lowercase, strip punctuation and articles, collapse whitespace."""
    s = s.lower()
    s = "".join(ch for ch in s if ch not in _PUNCT)
    s = _ARTICLES.sub(" ", s)
    return " ".join(s.split())


def _item_f1(pred: str, gold: str) -> float:
    p = normalize_answer(pred).split()
    g = normalize_answer(gold).split()
    if not p and not g:
        return 1.0
    common = Counter(p) & Counter(g)
    same = sum(common.values())
    if same == 0:
        return 0.0
    precision = same / len(p)
    recall = same / len(g)
    return 2 * precision * recall / (precision + recall)


def _as_variants(gold) -> List[List[str]]:
    if isinstance(gold, str):
        return [[gold]]
    gold = list(gold)
    if gold and all(isinstance(g, str) for g in gold):
        return [gold]
    return [list(v) for v in gold]


def _list_em(pred: Sequence[str], gold: Sequence[str]) -> int:
    return int(Counter(map(normalize_answer, pred)) == Counter(map(normalize_answer, gold)))


def _list_f1(pred: Sequence[str], gold: Sequence[str]) -> float:
    if not pred or not gold:
        return 0.0
    pairs = sorted(
        ((_item_f1(p, g), i, j) for i, p in enumerate(pred) for j, g in enumerate(gold)),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    used_p, used_g, total = set(), set(), 0.0
    for score, i, j in pairs:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        total += score
    return total / max(len(pred), len(gold))


def exact_match(pred: Sequence[str], gold_variants) -> int:
    """1 iff the normalized prediction list equals some gold variant as a multiset.

    ``gold_variants`` is a list of variants (each a list of strings); a flat
    list of strings is read as a single variant.
    """
    pred = list(pred)
    if not pred:
        return 0
    return max(_list_em(pred, g) for g in _as_variants(gold_variants))


def token_f1(pred: Sequence[str], gold_variants) -> float:
    """Max over gold variants of greedily aligned per-item token F1.

    Items are paired one-to-one, best-scoring pairs first; the summed scores
    are divided by ``max(len(pred), len(gold))``.
    """
    pred = list(pred)
    if not pred:
        return 0.0
    return max(_list_f1(pred, g) for g in _as_variants(gold_variants))


def average_tool_calls(episodes: Iterable[Union[int, object]]) -> float:
    counts = [e if isinstance(e, int) else e.tool_calls for e in episodes]
    if not counts:
        raise InvalidInput("average_tool_calls needs at least one episode")
    return sum(counts) / len(counts)
