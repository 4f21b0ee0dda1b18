"""External clustering scores: ARI, Hungarian-matched accuracy, unary clusters."""
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyInput, LengthMismatch


@dataclass
class MetricsReport:
    ari: float
    acc: float
    unary_clusters: int
    k_predicted: int

    def to_dict(self):
        return asdict(self)


def _pair(y_true, y_pred):
    a = np.asarray(y_true).ravel()
    b = np.asarray(y_pred).ravel()
    if a.size != b.size:
        raise LengthMismatch(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise EmptyInput("label vectors are empty")
    return a, b


def contingency(y_true, y_pred):
    """Counts table, rows indexed by true cluster and columns by predicted."""
    a, b = _pair(y_true, y_pred)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def _pairs(counts):
    # exact python ints; products below can exceed 64 bits
    return sum(int(c) * (int(c) - 1) // 2 for c in np.ravel(counts))


def ari(y_true, y_pred):
    """Adjusted Rand index (permutation model)."""
    table = contingency(y_true, y_pred)
    n = int(table.sum())
    if n < 2:
        raise EmptyInput("ARI needs at least two instances")
    sum_ij = _pairs(table)
    sum_a = _pairs(table.sum(axis=1))
    sum_b = _pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    # scaled by `total` to stay in integers until the final division
    num = sum_ij * total - sum_a * sum_b
    den = (sum_a + sum_b) * total - 2 * sum_a * sum_b
    if den == 0:
        return 1.0
    return 2 * num / den


def clustering_accuracy(y_true, y_pred):
    """Best fraction of matches over one-to-one maps between cluster ids."""
    table = contingency(y_true, y_pred)
    k = max(table.shape)
    square = np.zeros((k, k), dtype=np.int64)
    square[:table.shape[0], :table.shape[1]] = table
    rows, cols = linear_sum_assignment(square, maximize=True)
    return float(square[rows, cols].sum()) / float(table.sum())


def unary_cluster_count(y_pred):
    y = np.asarray(y_pred).ravel()
    if y.size == 0:
        raise EmptyInput("label vector is empty")
    _, counts = np.unique(y, return_counts=True)
    return int(np.sum(counts == 1))


def evaluate_labels(y_true, y_pred):
    return MetricsReport(
        ari=float(ari(y_true, y_pred)),
        acc=clustering_accuracy(y_true, y_pred),
        unary_clusters=unary_cluster_count(y_pred),
        k_predicted=int(np.unique(y_pred).size),
    )
