"""Synthetic embedding matrices with known cluster labels."""
import numpy as np

from .errors import InvalidConfig
from .numerics import make_rng


def gaussian_blobs(n=600, d=50, k=6, separation=10.0, sigma=1.0, rng=0, shuffle=True):
    """Isotropic Gaussian blobs whose centers are all ``separation * sigma`` apart.

    Centers are scaled unit basis vectors, randomly rotated and shifted, so
    every pair of centers is at exactly the requested distance (needs
    ``d >= k``). Returns ``(X, labels)`` with near-equal cluster sizes.
    """
    if d < k:
        raise InvalidConfig("equidistant centers need d >= k")
    rng = make_rng(rng)
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    centers = (separation * sigma / np.sqrt(2.0)) * Q[:, :k].T
    centers += rng.standard_normal(d)
    labels = np.arange(n) % k
    if shuffle:
        labels = labels[rng.permutation(n)]
    X = centers[labels] + sigma * rng.standard_normal((n, d))
    return X, labels


def overlapping_blobs(n=600, d=50, k=6, rng=0):
    """Blobs only two standard deviations apart, so their tails overlap."""
    return gaussian_blobs(n, d, k, separation=2.0, rng=rng)
