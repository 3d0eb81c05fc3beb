"""Corpus ingestion: tokenization, filtering, vocabulary build, index encoding.

The preprocessing pipeline runs, in order: whitespace tokenization,
lowercasing, stopword removal, irregular-token removal, Porter stemming,
then a corpus-wide frequency cutoff computed on the surviving (stemmed)
tokens. Documents emptied along the way are dropped and recorded. The
resulting Corpus is immutable and safe to share across threads.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .stem import porter_stem
from .stopwords import ENGLISH_STOPWORDS, load_stopwords

logger = logging.getLogger(__name__)

_ASCII_LOWER = frozenset("abcdefghijklmnopqrstuvwxyz")

# Pipeline stages that can empty a document, in execution order.
_STAGES = ("tokenize", "stopwords", "irregular", "frequency")


@dataclass(frozen=True)
class RawDocument:
    """One input document; ids are dense 0..N-1 in input order."""

    id: int
    text: str


@dataclass(frozen=True)
class PreprocessOptions:
    """Switches for the preprocessing pipeline; each step toggles independently."""

    lowercase: bool = True
    remove_stopwords: bool = True
    stopwords: Optional[frozenset] = None  # None -> bundled English list
    remove_irregular: bool = True
    stem: bool = True
    min_freq: int = 5

    def resolved_stopwords(self) -> frozenset:
        return ENGLISH_STOPWORDS if self.stopwords is None else frozenset(self.stopwords)


@dataclass(frozen=True)
class Vocabulary:
    """Dense token ids assigned in first-appearance order after filtering."""

    tokens: tuple[str, ...]
    index: dict[str, int]
    frequencies: dict[str, int]

    def __len__(self) -> int:
        return len(self.tokens)

    def lookup(self, token_id: int) -> str:
        return self.tokens[token_id]

    def index_of(self, token: str) -> int:
        return self.index[token]


@dataclass(frozen=True)
class EncodedDocument:
    id: int
    token_ids: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.token_ids)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[EncodedDocument, ...]
    vocabulary: Vocabulary
    labels: Optional[tuple[int, ...]] = None  # aligned to retained documents
    dropped_ids: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.documents)


def raw_documents_from_lines(lines: Sequence[str]) -> list[RawDocument]:
    return [RawDocument(i, text) for i, text in enumerate(lines)]


def load_corpus_file(path) -> list[RawDocument]:
    """Read a corpus file: UTF-8, one document per line."""
    text = Path(path).read_text(encoding="utf-8")
    return raw_documents_from_lines(text.splitlines())


def _is_irregular(token: str) -> bool:
    # irregular = contains anything outside a-z after lowercasing (URLs,
    # mentions, numerals, punctuation-bearing tokens)
    return not _ASCII_LOWER.issuperset(token.lower())


def preprocess(raw: Sequence[RawDocument], options: PreprocessOptions = PreprocessOptions()) -> Corpus:
    """Run the full pipeline over raw documents and build an encoded Corpus.

    Raises ValueError if no document survives, naming the pipeline step
    that emptied the last surviving one.
    """
    if options.min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {options.min_freq}")
    ids = [doc.id for doc in raw]
    if ids != list(range(len(raw))):
        raise ValueError("document ids must be dense 0..N-1 in input order")

    stops = options.resolved_stopwords() if options.remove_stopwords else frozenset()

    token_lists: list[list[str]] = []
    emptied_at: dict[int, str] = {}  # doc id -> stage that emptied it
    for doc in raw:
        tokens = doc.text.split()
        if options.lowercase:
            tokens = [t.lower() for t in tokens]
        if not tokens:
            emptied_at[doc.id] = "tokenize"
            token_lists.append([])
            continue
        if options.remove_stopwords:
            tokens = [t for t in tokens if t not in stops]
            if not tokens:
                emptied_at[doc.id] = "stopwords"
                token_lists.append([])
                continue
        if options.remove_irregular:
            tokens = [t for t in tokens if not _is_irregular(t)]
            if not tokens:
                emptied_at[doc.id] = "irregular"
                token_lists.append([])
                continue
        if options.stem:
            tokens = [porter_stem(t) for t in tokens]
        token_lists.append(tokens)

    frequencies = Counter()
    for tokens in token_lists:
        frequencies.update(tokens)
    kept = {t for t, n in frequencies.items() if n >= options.min_freq}

    documents: list[EncodedDocument] = []
    index: dict[str, int] = {}
    ordered_tokens: list[str] = []
    for doc, tokens in zip(raw, token_lists):
        if doc.id in emptied_at:
            continue
        surviving = [t for t in tokens if t in kept]
        if not surviving:
            emptied_at[doc.id] = "frequency"
            continue
        token_ids = []
        for t in surviving:
            if t not in index:
                index[t] = len(ordered_tokens)
                ordered_tokens.append(t)
            token_ids.append(index[t])
        documents.append(EncodedDocument(doc.id, tuple(token_ids)))

    if not documents:
        if not raw:
            raise ValueError("empty corpus: no input documents")
        last = max(_STAGES.index(stage) for stage in emptied_at.values())
        raise ValueError(
            f"no documents survived preprocessing; the last document was "
            f"emptied by the {_STAGES[last]} step"
        )

    dropped = tuple(sorted(emptied_at))
    if dropped:
        logger.warning("dropped %d empty document(s): ids %s", len(dropped), list(dropped))

    vocabulary = Vocabulary(
        tokens=tuple(ordered_tokens),
        index=index,
        frequencies={t: frequencies[t] for t in ordered_tokens},
    )
    return Corpus(documents=tuple(documents), vocabulary=vocabulary, dropped_ids=dropped)


def with_labels(corpus: Corpus, labels: Sequence[int]) -> Corpus:
    """Attach gold labels given in ORIGINAL document order.

    Labels of dropped documents are discarded; the remainder are remapped to
    dense 0..T-1 in first-appearance order.
    """
    original = len(corpus.documents) + len(corpus.dropped_ids)
    if len(labels) != original:
        raise ValueError(
            f"label count {len(labels)} does not match original document count {original}"
        )
    retained = [labels[doc.id] for doc in corpus.documents]
    remap: dict[int, int] = {}
    dense = tuple(remap.setdefault(v, len(remap)) for v in retained)
    return replace(corpus, labels=dense)


def load_labels(path, corpus: Corpus) -> Corpus:
    """Read one integer label per line, aligned to the original corpus lines."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    try:
        values = [int(line.strip()) for line in lines if line.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"label file {path}: {exc}") from None
    return with_labels(corpus, values)
