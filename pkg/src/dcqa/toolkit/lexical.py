"""Lexical stand-ins for the text and image QA tools.

Passages are ranked with BM25 plus a small bonus for query bigrams that occur
as adjacent content words in the passage. The answer is the longest run of
passage words the question does not already mention, taken from the best
sentence of the best passage.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import List, Optional, Sequence, Set, Tuple

from .base import ToolRequest, ToolResponse
from .stores import CaptionStore, TextStore

_WORD = re.compile(r"\w+")
_SENT = re.compile(r"(?<=[.!?;])\s+")

STOPWORDS = frozenset(
    """a an the of in on at to for from by with and or as is are was were be been being
    what which who whom whose when where why how did do does done have has had having
    that this these those it its into than then there their them they he she his her
    i me my we our you your not no can could would should will shall may might must
    about also any all many much some such very s""".split()
)


def stem(token: str) -> str:
    if len(token) > 3 and token.endswith("s") and not token.endswith("ss"):
        return token[:-1]
    return token


def content_terms(text: str) -> List[str]:
    return [stem(t) for t in (w.lower() for w in _WORD.findall(text)) if t not in STOPWORDS]


def _bigrams(terms: Sequence[str]) -> Set[Tuple[str, str]]:
    return set(zip(terms, terms[1:]))


class Bm25Index:
    """BM25 over content terms; ``bigram_weight`` rewards in-order adjacency."""

    def __init__(self, docs: Sequence[Tuple[str, str]], k1: float = 1.5, b: float = 0.75,
                 bigram_weight: float = 1.0):
        self.k1, self.b, self.bigram_weight = k1, b, bigram_weight
        self.ids = [doc_id for doc_id, _ in docs]
        self.texts = {doc_id: text for doc_id, text in docs}
        self.terms = {doc_id: content_terms(text) for doc_id, text in docs}
        self.tf = {doc_id: Counter(t) for doc_id, t in self.terms.items()}
        self.pairs = {doc_id: _bigrams(t) for doc_id, t in self.terms.items()}
        n = len(docs)
        df: Counter = Counter()
        for t in self.terms.values():
            df.update(set(t))
        self.idf = {t: math.log(1 + (n - c + 0.5) / (c + 0.5)) for t, c in df.items()}
        self.avgdl = (sum(len(t) for t in self.terms.values()) / n) if n else 0.0

    def score(self, query: str, doc_id: str) -> float:
        return self._score(content_terms(query), doc_id)

    def _score(self, q: List[str], doc_id: str) -> float:
        terms, tf = self.terms[doc_id], self.tf[doc_id]
        dl = len(terms)
        s = 0.0
        for t in dict.fromkeys(q):
            f = tf.get(t, 0)
            if not f:
                continue
            norm = f + self.k1 * (1 - self.b + self.b * dl / self.avgdl)
            s += self.idf[t] * f * (self.k1 + 1) / norm
        s += self.bigram_weight * len(_bigrams(q) & self.pairs[doc_id])
        return s

    def rank(self, query: str, allowed: Optional[Sequence[str]] = None) -> List[Tuple[str, float]]:
        if allowed is None:
            pool = self.ids
        else:
            keep = set(allowed)
            pool = [i for i in self.ids if i in keep]
        q = content_terms(query)
        scored = [(doc_id, self._score(q, doc_id)) for doc_id in pool]
        # stable: equal scores keep store order
        return sorted(scored, key=lambda t: -t[1])


def extract_span(question: str, sentence: str) -> str:
    """Longest run of words in ``sentence`` that the question does not mention.

    Stopwords may sit inside a run but are trimmed from its edges; a question
    word ends the run.
    """
    qset = set(content_terms(question))
    best: Tuple[int, int, int] = (0, -1, -1)  # (novel count, start, end)
    run_start = run_end = -1
    novel = 0
    for m in _WORD.finditer(sentence):
        tok = m.group().lower()
        if tok in STOPWORDS:
            continue
        if stem(tok) in qset:
            run_start, novel = -1, 0
            continue
        if run_start < 0:
            run_start = m.start()
        run_end = m.end()
        novel += 1
        if novel > best[0]:
            best = (novel, run_start, run_end)
    if best[0] == 0:
        return ""
    return sentence[best[1]: best[2]]


@dataclass
class _LexicalAnswerer:
    index: Bm25Index
    min_score: float = 1e-9
    max_chars: int = 300
    extract: bool = True

    def answer_text(self, question: str, allowed: Sequence[str]) -> ToolResponse:
        ranked = self.index.rank(question, allowed)
        if not ranked or ranked[0][1] < self.min_score:
            return ToolResponse.failure()
        doc_id, top = ranked[0]
        text = self.index.texts[doc_id]
        sentences = [s for s in _SENT.split(text) if s.strip()] or [text]
        q = content_terms(question)
        qb = _bigrams(q)

        def overlap(s: str) -> Tuple[int, int]:
            terms = content_terms(s)
            return len(set(q) & set(terms)), len(qb & _bigrams(terms))

        sentence = max(sentences, key=overlap)  # first max wins
        answer = extract_span(question, sentence) if self.extract else ""
        if not answer:
            answer = sentence.strip()[: self.max_chars]
        confidence = top / (top + 1.0)
        return ToolResponse(answer, confidence, False)


class LexicalTextTool:
    """TextQA stand-in over a :class:`TextStore`."""

    def __init__(self, store: TextStore, min_score: float = 1e-9, max_chars: int = 300,
                 extract: bool = True, bigram_weight: float = 1.0):
        self.store = store
        self._answerer = _LexicalAnswerer(Bm25Index(store.items(), bigram_weight=bigram_weight),
                                          min_score, max_chars, extract)

    def answer(self, request: ToolRequest) -> ToolResponse:
        return self._answerer.answer_text(request.question, self.store.select(request.context_refs))


class CaptionImageTool:
    """ImageQA stand-in: answers from stored image captions by lexical match."""

    def __init__(self, store: CaptionStore, min_score: float = 1e-9, max_chars: int = 300):
        self.store = store
        self._answerer = _LexicalAnswerer(Bm25Index(store.items()), min_score, max_chars)

    def answer(self, request: ToolRequest) -> ToolResponse:
        return self._answerer.answer_text(request.question, self.store.select(request.context_refs))


def lexical_text_tool(corpus: TextStore, question: str) -> ToolResponse:
    return LexicalTextTool(corpus).answer(ToolRequest("Text", question))
