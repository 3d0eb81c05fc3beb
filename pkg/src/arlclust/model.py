"""Model parameters and all differentiable quantities.

Holds the word embedding matrix E (K x |V|) and cluster embedding matrix
C (K x M), and computes: mean-pooled document embeddings, the softmax
cluster-level attention, the attention-weighted reconstruction, cosine
relevance, the margin ranking loss L1, the pointwise loss L2, the clean
objective J1, the perturbed objective J2 (evaluated at C + delta or
E + delta), their combined gradients, and the norm-bounded perturbation
update (ascent direction, per-column norm epsilon).

All math is float64. Single-document operations are the readable contract
surface; batched training goes through the fused forward/backward pass at
the bottom of the module, which computes identical quantities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

NORM_EPS = 1e-12  # below this, a vector is treated as zero for cosine purposes

CLUSTER = "cluster"
WORD = "word"


@dataclass
class ModelParams:
    """E: (K, |V|) word embeddings; C: (K, M) cluster embeddings."""

    E: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        self.E = np.ascontiguousarray(self.E, dtype=np.float64)
        self.C = np.ascontiguousarray(self.C, dtype=np.float64)
        if self.E.ndim != 2 or self.C.ndim != 2 or self.E.shape[0] != self.C.shape[0]:
            raise ValueError(f"inconsistent shapes E{self.E.shape}, C{self.C.shape}")

    @property
    def dim(self) -> int:
        return self.E.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.E.shape[1]

    @property
    def n_clusters(self) -> int:
        return self.C.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.E.copy(), self.C.copy())


@dataclass(frozen=True)
class LossSwitches:
    use_l1: bool = True
    use_l2: bool = True


@dataclass(frozen=True)
class Perturbation:
    """Additive offset on C (target="cluster", shape K x M) or on E
    (target="word", shape K x |V|), with per-column L2 norm <= epsilon."""

    delta: np.ndarray
    epsilon: float
    target: str = CLUSTER

    @staticmethod
    def zero(shape, epsilon: float = 0.0, target: str = CLUSTER) -> "Perturbation":
        return Perturbation(np.zeros(shape), float(epsilon), target)


@dataclass
class Gradients:
    """dE: (K, |V|), nonzero only on columns of words present in the batch;
    dC: (K, M)."""

    dE: np.ndarray
    dC: np.ndarray


def effective_matrices(params: ModelParams, pert: Optional[Perturbation]):
    """(E_eff, C_eff) with the perturbation, if any, applied to its target."""
    if pert is None:
        return params.E, params.C
    if pert.target == CLUSTER:
        return params.E, params.C + pert.delta
    if pert.target == WORD:
        return params.E + pert.delta, params.C
    raise ValueError(f"unknown perturbation target {pert.target!r}")


# ---------------------------------------------------------------------------
# single-document operations
# ---------------------------------------------------------------------------


def doc_embed(params: ModelParams, doc) -> np.ndarray:
    """Mean of the E-columns indexed by the document's token ids."""
    ids = np.asarray(doc.token_ids, dtype=np.intp)
    if ids.size == 0:
        raise ValueError(f"document {doc.id} has no tokens")
    if ids.min() < 0 or ids.max() >= params.vocab_size:
        raise IndexError(f"document {doc.id}: token id out of range")
    return params.E[:, ids].mean(axis=1)


def attention(C_eff: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Softmax over the M dot products c_m . d, max-subtracted for safety."""
    logits = C_eff.T @ d
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def reconstruct(C_eff: np.ndarray, attn: np.ndarray) -> np.ndarray:
    """Attention-weighted combination of the cluster columns."""
    return C_eff @ attn


def relevance(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0 when either norm is below the degeneracy guard."""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < NORM_EPS or nb < NORM_EPS:
        return 0.0
    return float(a @ b / (na * nb))


def loss_pairwise(i_rel: float, neg_rels: Sequence[float], gamma: float) -> float:
    """Mean hinge over negatives: max(0, gamma - i_rel + neg_rel)."""
    if len(neg_rels) == 0:
        raise ValueError("loss_pairwise requires at least one negative relevance")
    hinges = [max(0.0, gamma - i_rel + r) for r in neg_rels]
    return sum(hinges) / len(hinges)


def loss_pointwise(i_rel: float) -> float:
    return -i_rel


# ---------------------------------------------------------------------------
# batched objectives and gradients
# ---------------------------------------------------------------------------


@dataclass
class _Packed:
    """Concatenated token ids of a batch, for vectorized pooling/scatter."""

    tokens: np.ndarray   # (T,) intp
    starts: np.ndarray   # (B,) segment starts into tokens
    lengths: np.ndarray  # (B,) float64 token counts

    @staticmethod
    def from_docs(docs) -> "_Packed":
        lengths = np.array([len(d.token_ids) for d in docs], dtype=np.float64)
        if (lengths < 1).any():
            raise ValueError("batch contains an empty document")
        tokens = np.concatenate([np.asarray(d.token_ids, dtype=np.intp) for d in docs])
        starts = np.zeros(len(docs), dtype=np.intp)
        starts[1:] = np.cumsum(lengths[:-1]).astype(np.intp)
        return _Packed(tokens, starts, lengths)


def _pooled_embeddings(E_eff: np.ndarray, packed: _Packed) -> np.ndarray:
    """(K, B) mean-pooled document embeddings."""
    sums = np.add.reduceat(E_eff[:, packed.tokens], packed.starts, axis=1)
    return sums / packed.lengths


def _normalize_negs(negs, batch_size: int):
    """Ragged per-document negative lists -> padded (B, n_max) ids + mask."""
    counts = np.array([len(n) for n in negs], dtype=np.intp)
    n_max = int(counts.max()) if len(counts) else 0
    idx = np.zeros((batch_size, max(n_max, 1)), dtype=np.intp)
    mask = np.zeros_like(idx, dtype=bool)
    for i, n in enumerate(negs):
        idx[i, : len(n)] = n
        mask[i, : len(n)] = True
    return idx, mask, counts


def _batch_pass(E_eff, C_eff, packed: _Packed, negs, gamma, switches: LossSwitches,
                want_grads: bool, row_weights: Optional[np.ndarray] = None):
    """One fused forward (and optionally backward) pass of sum_i w_i(L1 + L2).

    Returns (loss, dE_eff, dC_eff); gradient arrays are None unless
    requested. dE_eff is dense (K, |V|) but only batch-token columns are
    touched. `row_weights` selects/weights which documents' loss terms
    count (default all, weight 1); zero-weight rows still participate as
    negatives of other rows.
    """
    B = len(packed.lengths)
    rw = np.ones(B) if row_weights is None else np.asarray(row_weights, dtype=np.float64)
    D = _pooled_embeddings(E_eff, packed)          # (K, B)
    nd = np.linalg.norm(D, axis=0)                 # (B,)
    d_ok = nd > NORM_EPS
    inv_nd = np.where(d_ok, 1.0 / np.where(d_ok, nd, 1.0), 0.0)

    logits = D.T @ C_eff                           # (B, M)
    logits = logits - logits.max(axis=1, keepdims=True)
    P = np.exp(logits)
    P /= P.sum(axis=1, keepdims=True)              # (B, M)
    R = C_eff @ P.T                                # (K, B) reconstructions

    nr = np.linalg.norm(R, axis=0)
    r_ok = nr > NORM_EPS
    pair_ok = d_ok & r_ok
    inv_dr = np.where(pair_ok, 1.0 / np.where(pair_ok, nd * nr, 1.0), 0.0)
    rel = np.einsum("kb,kb->b", D, R) * inv_dr     # (B,) cosine, 0 if degenerate

    loss = 0.0
    if switches.use_l2:
        loss -= (rel * rw).sum()

    if switches.use_l1:
        neg_idx, neg_mask, neg_counts = _normalize_negs(negs, B)
        if ((neg_counts < 1) & (rw != 0)).any():
            raise ValueError("every document needs at least one negative when L1 is enabled")
        neg_counts = np.maximum(neg_counts, 1)     # zero-weight rows may have none
        Dn = D * inv_nd                            # zero columns where degenerate
        G = Dn.T @ Dn                              # (B, B) pairwise cosines
        rel_neg = G[np.arange(B)[:, None], neg_idx]
        marg = (gamma - rel[:, None] + rel_neg) * neg_mask
        active = (marg > 0) & neg_mask
        hinge = np.where(active, marg, 0.0)
        loss += (hinge.sum(axis=1) / neg_counts * rw).sum()

    if not want_grads:
        return float(loss), None, None

    # upstream: dLoss/drel_i and dLoss/drel_ij
    g_rel = np.zeros(B)
    if switches.use_l2:
        g_rel -= rw
    if switches.use_l1:
        g_rel -= active.sum(axis=1) / neg_counts * rw
        g_reln = active / neg_counts[:, None] * rw[:, None]  # zero where inactive

    # cosine backward for the matched (d_i, r_i) columns
    inv_nd2 = inv_nd ** 2
    inv_nr2 = np.where(pair_ok, 1.0 / np.where(pair_ok, nr * nr, 1.0), 0.0)
    coef = g_rel * inv_dr
    dD = R * coef - D * (g_rel * rel * np.where(pair_ok, inv_nd2, 0.0))
    dR = D * coef - R * (g_rel * rel * inv_nr2)

    # reconstruction R = C_eff @ P^T
    dP = dR.T @ C_eff                              # (B, M)
    dC_eff = dR @ P                                # (K, M)
    # softmax
    dlogits = P * (dP - (dP * P).sum(axis=1, keepdims=True))
    # logits = D^T @ C_eff
    dD += C_eff @ dlogits.T
    dC_eff += D @ dlogits

    if switches.use_l1:
        # negative-pair cosines rel_ij = cos(d_i, d_j)
        W = np.zeros((B, B))
        np.add.at(W, (np.arange(B)[:, None], neg_idx), g_reln)
        WA = W * np.outer(inv_nd, inv_nd)
        dD += D @ WA.T + D @ WA
        wg = W * G
        dD -= D * (wg.sum(axis=1) * inv_nd2 + wg.sum(axis=0) * inv_nd2)

    # scatter mean-pooling back onto word columns
    contrib = (dD / packed.lengths).T              # (B, K)
    reps = packed.lengths.astype(np.intp)
    dE_T = np.zeros((E_eff.shape[1], E_eff.shape[0]))
    np.add.at(dE_T, packed.tokens, np.repeat(contrib, reps, axis=0))
    return float(loss), np.ascontiguousarray(dE_T.T), dC_eff


def objective_j1(params: ModelParams, batch, negs, gamma: float,
                 switches: LossSwitches = LossSwitches()) -> float:
    """Sum over the batch of the enabled losses, with the clean C."""
    packed = _Packed.from_docs(batch)
    loss, _, _ = _batch_pass(params.E, params.C, packed, negs, gamma, switches, False)
    return loss


def objective_j2(params: ModelParams, pert: Perturbation, batch, negs, gamma: float,
                 switches: LossSwitches = LossSwitches()) -> float:
    """Same objective evaluated at the perturbed parameters."""
    E_eff, C_eff = effective_matrices(params, pert)
    packed = _Packed.from_docs(batch)
    loss, _, _ = _batch_pass(E_eff, C_eff, packed, negs, gamma, switches, False)
    return loss


def objective_total(params: ModelParams, pert: Optional[Perturbation], batch, negs,
                    gamma: float, alpha: float,
                    switches: LossSwitches = LossSwitches()) -> float:
    """J = J1 + alpha * J2 at a fixed perturbation."""
    total = objective_j1(params, batch, negs, gamma, switches)
    if alpha != 0.0:
        if pert is None:
            pert = Perturbation.zero(params.C.shape)
        total += alpha * objective_j2(params, pert, batch, negs, gamma, switches)
    return total


def gradients(params: ModelParams, pert: Optional[Perturbation], batch, negs,
              config) -> Gradients:
    """Analytic d(J1 + alpha*J2)/dE and /dC at the fixed perturbation.

    `config` needs: alpha, gamma, use_l1, use_l2, train_w, train_c.
    The perturbation is a constant here, per the alternating scheme.
    """
    switches = LossSwitches(config.use_l1, config.use_l2)
    packed = _Packed.from_docs(batch)
    _, dE, dC = _batch_pass(params.E, params.C, packed, negs, config.gamma,
                            switches, True)
    alpha = config.alpha
    if alpha != 0.0:
        E_eff, C_eff = effective_matrices(params, pert)
        _, dE2, dC2 = _batch_pass(E_eff, C_eff, packed, negs, config.gamma,
                                  switches, True)
        dE += alpha * dE2
        dC += alpha * dC2
    if not config.train_w:
        dE = np.zeros_like(dE)
    if not config.train_c:
        dC = np.zeros_like(dC)
    if not (np.isfinite(dE).all() and np.isfinite(dC).all()):
        raise FloatingPointError(
            f"non-finite gradient entries (documents {[d.id for d in batch]})"
        )
    return Gradients(dE, dC)


def _column_normalized(g: np.ndarray, epsilon: float) -> np.ndarray:
    norms = np.linalg.norm(g, axis=0)
    ok = norms >= NORM_EPS
    scale = np.where(ok, epsilon / np.where(ok, norms, 1.0), 0.0)
    return g * scale


def adversarial_step(params: ModelParams, batch, negs, config) -> Perturbation:
    """One-shot ascent perturbation: delta_m = epsilon * g_m / ||g_m|| with
    g = alpha * dJ2/d(target), linearized at delta = 0.

    Columns with ||g_m|| below the guard are zero. Target is the cluster
    matrix, or the batch-active word columns when config.mode selects the
    word-level variant.
    """
    target = WORD if getattr(config, "mode", "arl-adv") == "arl-adv-word" else CLUSTER
    epsilon = float(config.epsilon)
    shape = params.E.shape if target == WORD else params.C.shape
    if config.alpha == 0.0 or epsilon == 0.0:
        return Perturbation.zero(shape, epsilon, target)
    switches = LossSwitches(config.use_l1, config.use_l2)
    packed = _Packed.from_docs(batch)
    _, dE, dC = _batch_pass(params.E, params.C, packed, negs, config.gamma,
                            switches, True)
    g = config.alpha * (dE if target == WORD else dC)
    return Perturbation(_column_normalized(g, epsilon), epsilon, target)


def random_perturbation(shape, epsilon: float, rng: np.random.Generator,
                        target: str = CLUSTER) -> Perturbation:
    """Columns drawn uniformly from the epsilon-sphere (normalized Gaussians)."""
    if epsilon == 0.0:
        return Perturbation.zero(shape, epsilon, target)
    g = rng.standard_normal(shape)
    return Perturbation(_column_normalized(g, epsilon), float(epsilon), target)
