"""Lloyd's K-means with uniform or k-means++ seeding and restarts."""
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig
from ..numerics import as_matrix, make_rng


@dataclass
class Centroids:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float = float("nan")

    @property
    def k(self):
        return self.centers.shape[0]


def sq_distances(Z, C):
    """Squared Euclidean distances, shape (n, K), clipped at zero."""
    d = (Z * Z).sum(1)[:, None] - 2.0 * (Z @ C.T) + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _seed_plusplus(Z, K, w, rng):
    n = Z.shape[0]
    idx = [int(rng.choice(n, p=w / w.sum()))]
    closest = sq_distances(Z, Z[idx])[:, 0]
    for _ in range(1, K):
        score = w * closest
        total = score.sum()
        if total <= 0.0:
            # every remaining point coincides with a chosen center
            free = np.setdiff1d(np.arange(n), idx)
            pick = int(rng.choice(free)) if free.size else int(rng.integers(n))
        else:
            pick = int(rng.choice(n, p=score / total))
        idx.append(pick)
        closest = np.minimum(closest, sq_distances(Z, Z[pick:pick + 1])[:, 0])
    return Z[idx].copy()


def _weighted_means(Z, w, labels, K):
    mass = np.bincount(labels, weights=w, minlength=K)
    sums = np.zeros((K, Z.shape[1]))
    np.add.at(sums, labels, Z * w[:, None])
    return sums, mass


def lloyd(Z, C, w=None, max_iter=300, tol=1e-6):
    """Lloyd iterations from centers ``C``.

    Stops when no center moves more than ``tol`` or after ``max_iter``
    rounds. An empty cluster takes over the point farthest from its current
    center (only from clusters with more than one member).
    """
    n, K = Z.shape[0], C.shape[0]
    w = np.ones(n) if w is None else w
    C = C.copy()
    for _ in range(max_iter):
        d = sq_distances(Z, C)
        labels = np.argmin(d, axis=1)
        sizes = np.bincount(labels, minlength=K)
        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            far = d[np.arange(n), labels]
            for k in empty:
                donors = sizes[labels] > 1
                cand = np.where(donors, far, -1.0)
                i = int(np.argmax(cand))
                if cand[i] < 0:
                    break
                sizes[labels[i]] -= 1
                labels[i] = k
                sizes[k] += 1
                far[i] = -1.0
        sums, mass = _weighted_means(Z, w, labels, K)
        new_C = C.copy()
        nz = mass > 0
        new_C[nz] = sums[nz] / mass[nz, None]
        shift = np.max(np.abs(new_C - C))
        C = new_C
        if shift < tol:
            break
    inertia = float(np.sum(w * np.sum(np.square(Z - C[labels]), axis=1)))
    return C, labels, inertia


def kmeans_init(Z, K, restarts=20, seeding="plusplus", rng=0, weights=None,
                max_iter=300, tol=1e-6):
    """Best of ``restarts`` Lloyd runs by (weighted) within-cluster SSE."""
    Z = as_matrix(Z, "Z")
    n = Z.shape[0]
    if not 1 <= K <= n:
        raise InvalidConfig(f"need 1 <= K <= n, got K={K}, n={n}")
    if restarts < 1:
        raise InvalidConfig("restarts must be >= 1")
    if seeding not in ("uniform", "plusplus"):
        raise InvalidConfig(f"unknown seeding {seeding!r}")
    rng = make_rng(rng)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    best = None
    for _ in range(restarts):
        if seeding == "plusplus":
            C0 = _seed_plusplus(Z, K, w, rng)
        else:
            C0 = Z[rng.choice(n, size=K, replace=False)].copy()
        C, labels, inertia = lloyd(Z, C0, w, max_iter, tol)
        if best is None or inertia < best.inertia:
            best = Centroids(C, labels, inertia)
    return best
