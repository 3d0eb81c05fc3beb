"""End-to-end training: initialization (k-means on document embeddings),
the minibatch minimax loop with Adam, ablation switches, assignment
extraction, and the k-means-on-TF-IDF baseline.

The loop is sequential over batches (parameter state mutates); everything
downstream of a trained ModelParams is a pure function.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from .corpus import Corpus
from . import model
from .model import (
    Gradients,
    LossSwitches,
    ModelParams,
    Perturbation,
    random_perturbation,
)
from .embeddings import load_word2vec_text

logger = logging.getLogger(__name__)

MODES = ("arl", "arl-adv", "arl-random", "arl-adv-word")


@dataclass
class TrainConfig:
    """Hyperparameters and ablation switches for the training loop."""

    n_clusters: int = 2                 # M
    embedding_dim: int = 300            # K
    batch_size: int = 64
    alpha: float = 1.0                  # adversarial strength
    epsilon: float = 50.0               # perturbation column norm bound
    gamma: float = 1.0                  # ranking margin
    neg_count: int = 5                  # negatives per document (clipped to batch-1)
    epochs: int = 600
    learning_rate: float = 0.03
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 1
    mode: str = "arl-adv"
    train_w: bool = True
    train_c: bool = True
    use_l1: bool = True
    use_l2: bool = True
    embeddings_path: Optional[str] = None  # None -> random init
    # half-width of the uniform random init for E (and C when kmeans_init is
    # off). Cosine losses are scale-invariant while attention logits are not:
    # inits much smaller than ~1 leave the softmax flat and untrainable.
    init_scale: float = 2.0
    kmeans_init: bool = True
    kmeans_restarts: int = 10
    early_stop: bool = False            # churn-based stop; off by default, it
    early_stop_churn: float = 0.001     # can trigger inside the flat-attention
    early_stop_patience: int = 3        # transient early in training

    def validate(self) -> None:
        if self.n_clusters < 2:
            raise ValueError(f"n_clusters must be >= 2, got {self.n_clusters}")
        if self.embedding_dim < 1:
            raise ValueError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not (self.use_l1 or self.use_l2):
            raise ValueError("at least one of use_l1/use_l2 must be enabled")
        if self.neg_count < 1:
            raise ValueError(f"neg_count must be >= 1, got {self.neg_count}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.init_scale <= 0:
            raise ValueError(f"init_scale must be positive, got {self.init_scale}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def switches(self) -> LossSwitches:
        return LossSwitches(self.use_l1, self.use_l2)


@dataclass
class AdamState:
    """First/second moment estimates mirroring ModelParams, plus step count."""

    m_E: np.ndarray
    v_E: np.ndarray
    m_C: np.ndarray
    v_C: np.ndarray
    t: int = 0

    @staticmethod
    def for_params(params: ModelParams) -> "AdamState":
        return AdamState(
            np.zeros_like(params.E), np.zeros_like(params.E),
            np.zeros_like(params.C), np.zeros_like(params.C),
        )

    def apply(self, params: ModelParams, grads: Gradients, config: TrainConfig) -> None:
        """One bias-corrected Adam update in place; frozen matrices are skipped."""
        self.t += 1
        if config.train_w:
            params.E -= _adam_delta(self.m_E, self.v_E, grads.dE, self.t, config)
        if config.train_c:
            params.C -= _adam_delta(self.m_C, self.v_C, grads.dC, self.t, config)


def _adam_delta(m: np.ndarray, v: np.ndarray, g: np.ndarray, t: int,
                config: TrainConfig) -> np.ndarray:
    b1, b2 = config.adam_beta1, config.adam_beta2
    m *= b1
    m += (1 - b1) * g
    v *= b2
    v += (1 - b2) * g * g
    m_hat = m / (1 - b1 ** t)
    v_hat = v / (1 - b2 ** t)
    return config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)


@dataclass
class ClusterResult:
    """Argmax cluster per document with the attention evidence behind it."""

    assignments: np.ndarray            # (N,) cluster index, ties -> lowest index
    max_probs: np.ndarray              # (N,) attention mass of the chosen cluster
    attn: Optional[np.ndarray] = None  # (N, M) full distributions
    history: list = field(default_factory=list)  # per-epoch mean objective


# ---------------------------------------------------------------------------
# k-means (k-means++ seeding, Lloyd iterations, empty-cluster reseeding)
# ---------------------------------------------------------------------------


def _plus_plus_seed(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = X[rng.integers(n)]
            continue
        centroids[j] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _lloyd(X: np.ndarray, k: int, rng: np.random.Generator, tol: float,
           max_iter: int):
    """Single k-means run; returns (centroids, assignments, wcss_history)."""
    centroids = _plus_plus_seed(X, k, rng)
    history = []
    assign = np.zeros(X.shape[0], dtype=np.intp)
    x2 = (X ** 2).sum(axis=1)
    for _ in range(max_iter):
        d2 = x2[:, None] - 2 * X @ centroids.T + (centroids ** 2).sum(axis=1)
        assign = d2.argmin(axis=1)
        point_d2 = d2[np.arange(X.shape[0]), assign]
        for j in range(k):
            if not (assign == j).any():
                worst = point_d2.argmax()
                centroids[j] = X[worst]
                assign[worst] = j
                point_d2[worst] = 0.0
        history.append(float(point_d2.sum()))
        new_centroids = np.stack([X[assign == j].mean(axis=0) for j in range(k)])
        shift = np.abs(new_centroids - centroids).max()
        centroids = new_centroids
        if shift < tol:
            break
    d2 = x2[:, None] - 2 * X @ centroids.T + (centroids ** 2).sum(axis=1)
    assign = d2.argmin(axis=1)
    return centroids, assign, history


def kmeans(points, k: int, seed: int = 0, *, n_init: int = 10, tol: float = 1e-6,
           max_iter: int = 100, rng: Optional[np.random.Generator] = None):
    """Best of `n_init` Lloyd runs by within-cluster sum of squares.

    Returns (centroids (k, dim), assignments (n,)).
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"points must be a nonempty 2-D array, got shape {X.shape}")
    distinct = np.unique(X, axis=0).shape[0]
    if k > distinct:
        raise ValueError(f"k={k} exceeds the {distinct} distinct points")
    if rng is None:
        rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        centroids, assign, history = _lloyd(X, k, rng, tol, max_iter)
        wcss = history[-1]
        if best is None or wcss < best[0]:
            best = (wcss, centroids, assign)
    return best[1], best[2]


# ---------------------------------------------------------------------------
# initialization and training
# ---------------------------------------------------------------------------


def _pack_corpus(corpus: Corpus) -> model._Packed:
    return model._Packed.from_docs(corpus.documents)


def _all_doc_embeddings(E: np.ndarray, packed: model._Packed) -> np.ndarray:
    return model._pooled_embeddings(E, packed)  # (K, N)


def init_params(corpus: Corpus, config: TrainConfig,
                rng: Optional[np.random.Generator] = None) -> ModelParams:
    """E uniform in (-init_scale, init_scale) or loaded from a word2vec-format
    file (misses stay random); C from k-means centroids over the pooled
    document embeddings, or random like E when kmeans_init is off."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    K = config.embedding_dim
    V = len(corpus.vocabulary)
    span = config.init_scale
    E = rng.uniform(-span, span, size=(K, V))
    if config.embeddings_path is not None:
        E, n_matched = load_word2vec_text(config.embeddings_path, corpus.vocabulary, K, base=E)
        logger.info("pretrained embeddings: %d/%d vocabulary tokens matched", n_matched, V)
    if config.kmeans_init:
        D = _all_doc_embeddings(E, _pack_corpus(corpus)).T  # (N, K)
        distinct = np.unique(D, axis=0).shape[0]
        if config.n_clusters > distinct:
            raise ValueError(
                f"n_clusters={config.n_clusters} exceeds the {distinct} distinct "
                f"document embeddings"
            )
        centroids, _ = kmeans(D, config.n_clusters, rng=rng, n_init=config.kmeans_restarts)
        C = centroids.T.copy()
    else:
        C = rng.uniform(-span, span, size=(K, config.n_clusters))
    return ModelParams(E, C)


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    chunks = [order[i: i + batch_size] for i in range(0, len(order), batch_size)]
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        # a singleton batch cannot supply a negative; fold it into the previous one
        chunks[-2] = np.concatenate([chunks[-2], chunks[-1]])
        chunks.pop()
    return chunks


def _sample_negatives(batch_len: int, neg_count: int, rng: np.random.Generator) -> np.ndarray:
    """(B, n) batch-local indices, uniform without replacement, excluding self.

    The n smallest of i.i.d. uniform keys per row form a uniform n-subset.
    """
    n = min(neg_count, batch_len - 1)
    keys = rng.random((batch_len, batch_len))
    np.fill_diagonal(keys, np.inf)
    return np.argpartition(keys, n - 1, axis=1)[:, :n]


def extract_assignments(params: ModelParams, corpus: Corpus) -> ClusterResult:
    """Attention over the clean C (perturbations discarded); argmax per
    document, ties resolved to the lowest cluster index."""
    packed = _pack_corpus(corpus)
    D = _all_doc_embeddings(params.E, packed)      # (K, N)
    logits = D.T @ params.C
    logits -= logits.max(axis=1, keepdims=True)
    P = np.exp(logits)
    P /= P.sum(axis=1, keepdims=True)
    assignments = P.argmax(axis=1)
    return ClusterResult(
        assignments=assignments,
        max_probs=P[np.arange(P.shape[0]), assignments],
        attn=P,
    )


ProgressFn = Callable[[int, float, float], None]  # (epoch, mean_J, churn)


def train(corpus: Corpus, config: TrainConfig,
          progress: Optional[ProgressFn] = None) -> tuple[ModelParams, ClusterResult]:
    """Run the minimax minibatch loop and return trained parameters plus the
    final cluster assignment. Deterministic given (corpus, config).

    Per batch: sample negatives; build the perturbation for the mode (zero
    for the attention-only mode); take one Adam step on the gradient of
    J1 + alpha * J2 at the fixed perturbation.
    """
    config.validate()
    docs = corpus.documents
    if not docs:
        raise ValueError("empty corpus")
    if config.use_l1 and len(docs) < 2:
        raise ValueError("ranking loss needs at least 2 documents to sample a negative")

    rng = np.random.default_rng(config.seed)
    params = init_params(corpus, config, rng=rng)
    adam = AdamState.for_params(params)
    # the attention-only mode drops the perturbed objective entirely
    alpha = 0.0 if config.mode == "arl" else config.alpha
    switches = config.switches

    history: list[float] = []
    prev_assign: Optional[np.ndarray] = None
    calm_epochs = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(docs))
        epoch_j = 0.0
        for batch_ids in _batches(order, config.batch_size):
            batch = [docs[i] for i in batch_ids]
            packed = model._Packed.from_docs(batch)
            negs = _sample_negatives(len(batch), config.neg_count, rng)
            j1, dE, dC = model._batch_pass(
                params.E, params.C, packed, negs, config.gamma, switches, True)
            batch_j = j1
            if alpha != 0.0:
                # the clean-parameter backward doubles as the linearization
                # point of the ascent perturbation (identical computation to
                # adversarial_step at delta = 0)
                if config.mode == "arl-random":
                    pert = random_perturbation(params.C.shape, config.epsilon, rng)
                elif config.mode == "arl-adv-word":
                    pert = Perturbation(
                        model._column_normalized(alpha * dE, config.epsilon),
                        config.epsilon, model.WORD)
                else:  # arl-adv
                    pert = Perturbation(
                        model._column_normalized(alpha * dC, config.epsilon),
                        config.epsilon, model.CLUSTER)
                E_eff, C_eff = model.effective_matrices(params, pert)
                j2, dE2, dC2 = model._batch_pass(
                    E_eff, C_eff, packed, negs, config.gamma, switches, True)
                dE += alpha * dE2
                dC += alpha * dC2
                batch_j += alpha * j2
            if not np.isfinite(batch_j):
                raise FloatingPointError(
                    f"non-finite objective at epoch {epoch}, batch of docs "
                    f"{[int(i) for i in batch_ids[:8]]}..."
                )
            grads = Gradients(
                dE if config.train_w else np.zeros_like(dE),
                dC if config.train_c else np.zeros_like(dC),
            )
            adam.apply(params, grads, config)
            epoch_j += batch_j
        history.append(epoch_j / len(docs))

        assign = extract_assignments(params, corpus).assignments
        churn = 1.0 if prev_assign is None else float((assign != prev_assign).mean())
        prev_assign = assign
        if progress is not None:
            progress(epoch, history[-1], churn)
        if config.early_stop:
            calm_epochs = calm_epochs + 1 if churn < config.early_stop_churn else 0
            if calm_epochs >= config.early_stop_patience:
                break

    result = extract_assignments(params, corpus)
    result.history = history
    return params, result


# ---------------------------------------------------------------------------
# k-means on TF-IDF baseline
# ---------------------------------------------------------------------------


def tfidf_matrix(corpus: Corpus) -> np.ndarray:
    """(N, |V|) rows of raw-count tf times ln(N/df), L2-normalized.

    Terms present in every document get idf 0 and contribute nothing;
    all-zero rows are left as zeros.
    """
    N = len(corpus.documents)
    V = len(corpus.vocabulary)
    tf = np.zeros((N, V))
    for i, doc in enumerate(corpus.documents):
        np.add.at(tf[i], np.asarray(doc.token_ids, dtype=np.intp), 1.0)
    df = (tf > 0).sum(axis=0)
    X = tf * np.log(N / df)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


def baseline_kmeans_tfidf(corpus: Corpus, config: TrainConfig) -> ClusterResult:
    """Cluster L2-normalized TF-IDF rows with k-means; max_probs are a
    placeholder 1.0 (no attention distribution exists for this baseline)."""
    X = tfidf_matrix(corpus)
    _, assignments = kmeans(X, config.n_clusters, seed=config.seed,
                            n_init=config.kmeans_restarts)
    return ClusterResult(
        assignments=assignments,
        max_probs=np.ones(len(corpus.documents)),
        attn=None,
    )
