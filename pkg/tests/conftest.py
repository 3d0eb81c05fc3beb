"""Shared test helpers: planted-partition corpora with known topic labels."""
import numpy as np
import pytest

from arlclust.corpus import PreprocessOptions, preprocess, raw_documents_from_lines, with_labels


def _code(j: int) -> str:
    return chr(ord("a") + j // 26) + chr(ord("a") + j % 26)


def planted_corpus(n_topics=5, stems_per_topic=60, n_docs=500, mean_len=8,
                   len_spread=2, noise=0.10, seed=0, min_freq=1):
    """Synthetic corpus with disjoint-dominant topic vocabularies.

    Each document draws tokens from its topic's stem list, except a `noise`
    fraction drawn from the other topics' lists. Tokens are lowercase
    alphabetic so the full preprocessing pipeline keeps them; stemming is
    off because the tokens are already stem-like.
    """
    rng = np.random.default_rng(seed)
    prefixes = "bcdfghjklm"
    topic_words = [[f"{prefixes[t]}q{_code(j)}" for j in range(stems_per_topic)]
                   for t in range(n_topics)]
    texts, labels = [], []
    for i in range(n_docs):
        topic = i % n_topics
        length = int(rng.integers(mean_len - len_spread, mean_len + len_spread + 1))
        words = []
        for _ in range(length):
            if rng.random() < noise:
                other = int(rng.integers(0, n_topics - 1))
                other += other >= topic
                words.append(topic_words[other][int(rng.integers(0, stems_per_topic))])
            else:
                words.append(topic_words[topic][int(rng.integers(0, stems_per_topic))])
        texts.append(" ".join(words))
        labels.append(topic)
    corpus = preprocess(raw_documents_from_lines(texts),
                        PreprocessOptions(min_freq=min_freq, stem=False))
    return with_labels(corpus, labels)


@pytest.fixture(scope="session")
def separable_corpus():
    """The acceptance-scale corpus: 5 topics, 60 stems each, 10% noise."""
    return planted_corpus()


@pytest.fixture(scope="session")
def noisy_corpus():
    """Harder variant with 20% injected noise tokens."""
    return planted_corpus(noise=0.20, seed=1)


@pytest.fixture(scope="session")
def tiny_corpus():
    """Small, fast corpus for loop-mechanics tests."""
    return planted_corpus(n_topics=3, stems_per_topic=12, n_docs=60, seed=2)
