"""Clustering evaluation: NMI, ARI, and Hungarian-matched accuracy.

All three are computed from the contingency table of (true topic,
predicted cluster) co-occurrence counts, are invariant under relabeling
of either side, and equal 1.0 on a perfect match. Pure functions over
immutable inputs; safe for concurrent use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ContingencyTable:
    """counts[i, j] = number of documents in true topic i and predicted
    cluster j; marginals and total are redundant but kept for direct use."""

    counts: np.ndarray    # (T, P) int64
    row_sums: np.ndarray  # (T,)
    col_sums: np.ndarray  # (P,)
    total: int


def _dense(labels: Sequence[int]) -> np.ndarray:
    # dense ids in sorted-value order, so already-dense labels map to themselves
    _, inverse = np.unique(np.asarray(labels), return_inverse=True)
    return inverse.astype(np.intp)


def contingency(true_labels: Sequence[int], pred_labels: Sequence[int]) -> ContingencyTable:
    if len(true_labels) != len(pred_labels):
        raise ValueError(
            f"label length mismatch: {len(true_labels)} true vs {len(pred_labels)} predicted"
        )
    if len(true_labels) == 0:
        raise ValueError("empty labelings")
    t = _dense(true_labels)
    p = _dense(pred_labels)
    T = int(t.max()) + 1
    P = int(p.max()) + 1
    counts = np.zeros((T, P), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ContingencyTable(counts, counts.sum(axis=1), counts.sum(axis=0), int(counts.sum()))


def _identical_partitions(table: ContingencyTable) -> bool:
    # same grouping up to relabeling: square table, one nonzero per row/column
    nz = table.counts > 0
    return (
        table.counts.shape[0] == table.counts.shape[1]
        and (nz.sum(axis=0) == 1).all()
        and (nz.sum(axis=1) == 1).all()
    )


def nmi(table: ContingencyTable) -> float:
    """Normalized mutual information in [0, 1], natural log, 0*log(.) = 0.

    Degenerate marginals (either side a single cluster) return 1.0 when the
    two partitions are identical as partitions and 0.0 otherwise.
    """
    if _identical_partitions(table):
        return 1.0
    N = table.total
    h_true = sum(v * math.log(v / N) for v in table.row_sums.tolist() if v > 0)
    h_pred = sum(v * math.log(v / N) for v in table.col_sums.tolist() if v > 0)
    if h_true == 0.0 or h_pred == 0.0:
        return 0.0
    num = 0.0
    for i, row in enumerate(table.counts.tolist()):
        ri = table.row_sums[i]
        for j, c in enumerate(row):
            if c > 0:
                num += c * (math.log(c / N) - math.log(ri / N) - math.log(table.col_sums[j] / N))
    value = num / math.sqrt(h_true * h_pred)
    return min(max(value, 0.0), 1.0)


def _pairs(n: int) -> int:
    return n * (n - 1) // 2


def ari(table: ContingencyTable) -> float:
    """Adjusted Rand index in [-1, 1], exact rational arithmetic.

    A zero adjustment denominator (both partitions trivially identical in
    structure) returns 1.0.
    """
    if table.total < 2:
        raise ValueError("ARI requires at least 2 documents")
    sum_ij = sum(_pairs(int(c)) for c in table.counts.ravel().tolist())
    a = sum(_pairs(int(v)) for v in table.row_sums.tolist())
    b = sum(_pairs(int(v)) for v in table.col_sums.tolist())
    expected = Fraction(a * b, _pairs(table.total))
    denominator = Fraction(a + b, 2) - expected
    if denominator == 0:
        return 1.0
    return float((sum_ij - expected) / denominator)


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect matching on a square cost matrix, O(n^3).

    Returns `assignment` with assignment[row] = matched column.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix must be finite")
    n = cost.shape[0]
    # shortest augmenting path with row/column potentials (1-based columns,
    # column 0 is the virtual root)
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    matched = np.zeros(n + 1, dtype=np.intp)  # matched[j] = row on column j, 0 = free
    way = np.zeros(n + 1, dtype=np.intp)
    for i in range(1, n + 1):
        matched[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = matched[j0]
            cand = cost[i0 - 1, :] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cand < minv[1:])
            idx = np.nonzero(better)[0]
            minv[idx + 1] = cand[idx]
            way[idx + 1] = j0
            free_cols = np.nonzero(free)[0] + 1
            j1 = free_cols[np.argmin(minv[free_cols])]
            delta = minv[j1]
            u[matched[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if matched[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            matched[j0] = matched[j1]
            j0 = j1
    assignment = np.empty(n, dtype=np.intp)
    assignment[matched[1:] - 1] = np.arange(n)
    return assignment


def acc(true_labels: Sequence[int], pred_labels: Sequence[int]) -> float:
    """Best accuracy over one-to-one mappings of predicted clusters to true
    topics (Hungarian-matched); rectangular tables are zero-padded square."""
    table = contingency(true_labels, pred_labels)
    W = table.counts
    n = max(W.shape)
    padded = np.zeros((n, n), dtype=np.int64)
    padded[: W.shape[0], : W.shape[1]] = W
    assignment = hungarian(padded.max() - padded)
    matched = padded[np.arange(n), assignment].sum()
    return float(matched / table.total)


def score_labels(true_labels: Sequence[int], pred_labels: Sequence[int]) -> dict:
    """Convenience record with all three metrics."""
    table = contingency(true_labels, pred_labels)
    return {
        "nmi": nmi(table),
        "ari": ari(table),
        "acc": acc(true_labels, pred_labels),
    }
