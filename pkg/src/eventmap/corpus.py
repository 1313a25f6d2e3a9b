"""Tokenization, vocabulary indexing, and corpus construction from events."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from datetime import date
from importlib import resources

import numpy as np

from .errors import EmptyVocabularyError
from .ingest import GeoEvent

_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()
_SPLIT_RE = re.compile(r"[^0-9a-z]+")


def days_since_epoch(d: date) -> float:
    """Calendar date as real-valued days since 1970-01-01 (midnight)."""
    return float(d.toordinal() - _EPOCH_ORDINAL)


def load_stopwords(path: str | None = None) -> frozenset[str]:
    """Stopword set, one word per line; default is the bundled 127-word English list."""
    if path is None:
        text = resources.files("eventmap").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def tokenize(text: str, stopwords: frozenset[str] | set[str] = frozenset()) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop length<2 tokens and stopwords."""
    tokens = []
    for tok in _SPLIT_RE.split(text.lower()):
        if len(tok) < 2 or tok in stopwords:
            continue
        tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Vocabulary:
    words: tuple[str, ...]  # index -> word
    index: dict[str, int]  # word -> index

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @classmethod
    def from_words(cls, words: list[str]) -> "Vocabulary":
        return cls(words=tuple(words), index={w: i for i, w in enumerate(words)})


@dataclass(frozen=True)
class Document:
    tokens: np.ndarray  # int32 indexes into the vocabulary
    timestamp: float  # days since epoch
    event_id: str
    fips: str
    year: int

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Corpus:
    vocabulary: Vocabulary
    documents: list[Document]

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def n_words(self) -> int:
        return len(self.vocabulary)

    @property
    def total_tokens(self) -> int:
        return sum(len(d) for d in self.documents)


def build_vocabulary(token_lists: list[list[str]], min_count: int = 1) -> Vocabulary:
    """Index words with corpus frequency >= min_count, ordered by descending
    frequency then lexicographically."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for toks in token_lists:
        counts.update(toks)
    kept = [w for w, c in counts.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(f"no word reaches min_count={min_count}")
    kept.sort(key=lambda w: (-counts[w], w))
    return Vocabulary.from_words(kept)


def corpus_from_events(
    events: list[GeoEvent],
    stopwords: frozenset[str] | None = None,
    min_count: int = 1,
) -> Corpus:
    """One Document per event, in event order. Events whose text reduces to
    out-of-vocabulary words keep an empty document so alignment with the event
    list is positional."""
    if not events:
        raise ValueError("cannot build a corpus from zero events")
    if stopwords is None:
        stopwords = load_stopwords()
    token_lists = [tokenize(ev.report_text, stopwords) for ev in events]
    vocab = build_vocabulary(token_lists, min_count)
    docs = []
    for ev, toks in zip(events, token_lists):
        idx = np.array([vocab.index[t] for t in toks if t in vocab.index], dtype=np.int32)
        docs.append(
            Document(
                tokens=idx,
                timestamp=days_since_epoch(ev.date),
                event_id=ev.id,
                fips=ev.fips,
                year=ev.date.year,
            )
        )
    return Corpus(vocabulary=vocab, documents=docs)
