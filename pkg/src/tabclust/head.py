"""Self-supervised clustering head and the joint training loop.

Per epoch: latent codes ``Z`` from the encoder, distances from every code to
every center, kernel similarities, row normalization to soft assignments
``q``, a row softmax to predicted probabilities ``m`` and a sharpened target
``p``. The objective is ``alpha * KL(p || m) + mse(X, X_hat)`` with ``p``
held fixed inside each gradient evaluation. Gradients flow into the
autoencoder and, optionally, into the centers.

Distances never build an n-by-n structure; every per-epoch array is at most
``n x K`` (or a row block of ``n x K x latent`` while computing distances).
"""
import logging
import time
from dataclasses import asdict, dataclass, replace
from typing import NamedTuple

import numpy as np

from . import autoencoder as ae_mod
from .errors import (
    DegenerateColumn,
    DimensionMismatch,
    InvalidConfig,
    InvalidDelta,
    NonFinite,
    NonFiniteLoss,
    ZeroVector,
)
from .init import BirchConfig, birch_init, kmeans_init
from .numerics import as_matrix, cholesky, make_rng, row_softmax, solve_lower_triangular

log = logging.getLogger(__name__)

DISTANCES = ("mahalanobis", "euclidean", "cosine")
KERNELS = ("cauchy", "students_t", "normal")
INITS = ("birch", "kmeans", "kmeanspp")

# elements per block of the (rows, K, latent) difference tensor
_BLOCK = 1 << 22


@dataclass(frozen=True)
class CovarianceSpec:
    delta: float
    dim: int


@dataclass(frozen=True)
class Kernel:
    kind: str = "cauchy"
    gamma: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise InvalidConfig(f"unknown kernel {self.kind!r}")
        if not self.gamma > 0 or not self.nu >= 1:
            raise InvalidConfig("need gamma > 0 and nu >= 1")


@dataclass
class AssignmentSet:
    q: np.ndarray
    m: np.ndarray
    p: np.ndarray


class EpochLosses(NamedTuple):
    re_loss: float
    ce_loss: float
    total_loss: float
    kl_p_m: float
    kl_p_q: float


@dataclass
class TrainConfig:
    K: int
    alpha: float = 0.9
    gamma: float = 1.0
    delta: float = 0.01
    epsilon: float = 1e-10
    epochs: int = 200
    lr: float = 1e-3
    seed: int = 0
    distance: str = "mahalanobis"
    kernel: str = "cauchy"
    nu: float = 1.0
    init: str = "birch"
    centers_trainable: bool = True
    update_interval: int = 1
    threshold: float = None
    branching: int = 50
    leaf_capacity: int = 50
    restarts: int = 20
    normal_bandwidth: float = None  # None: fitted at initialization

    def __post_init__(self):
        if self.K < 1 or self.epochs < 1 or self.update_interval < 1:
            raise InvalidConfig("need K >= 1, epochs >= 1, update_interval >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfig("alpha must lie in [0, 1]")
        if self.distance not in DISTANCES:
            raise InvalidConfig(f"unknown distance {self.distance!r}")
        if self.init not in INITS:
            raise InvalidConfig(f"unknown init {self.init!r}")
        if not self.epsilon > 0 or not self.lr > 0:
            raise InvalidConfig("epsilon and lr must be positive")
        Kernel(self.kernel, self.gamma, self.nu)

    @property
    def kernel_spec(self):
        if self.kernel == "normal" and self.normal_bandwidth is not None:
            return Kernel("normal", self.normal_bandwidth, self.nu)
        return Kernel(self.kernel, self.gamma, self.nu)

    def to_dict(self):
        return asdict(self)


@dataclass
class ClusteringResult:
    labels: np.ndarray
    centers: np.ndarray
    loss_curve: list
    assignments: AssignmentSet
    initial_centers: np.ndarray = None
    initial_labels: np.ndarray = None
    config: TrainConfig = None
    epoch_seconds: list = None


def covariance_factor(spec):
    """Cholesky factor of ``delta * I``."""
    if not spec.delta > 0:
        raise InvalidDelta(f"delta must be > 0, got {spec.delta}")
    return cholesky(spec.delta * np.eye(spec.dim))


def _whiten(L, A):
    """Rows of ``A`` mapped through ``L^-1``."""
    return solve_lower_triangular(L, A.T).T


def _pairwise_sq(U, V):
    """Exact squared distances between rows, evaluated in row blocks."""
    n, K = U.shape[0], V.shape[0]
    out = np.empty((n, K))
    step = max(1, _BLOCK // max(1, K * U.shape[1]))
    for start in range(0, n, step):
        diff = U[start:start + step, None, :] - V[None, :, :]
        out[start:start + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _unit_rows(A, what):
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms < 1e-12):
        raise ZeroVector(f"cosine distance needs nonzero {what}")
    return A / norms[:, None], norms


class _Geometry(NamedTuple):
    s: np.ndarray  # squared distances, n x K
    D: np.ndarray  # distances
    aux: tuple


def _geometry(Z, C, kind, L=None):
    if Z.shape[1] != C.shape[1]:
        raise DimensionMismatch(f"codes have {Z.shape[1]} columns, centers {C.shape[1]}")
    if kind == "cosine":
        Zh, zn = _unit_rows(Z, "codes")
        Ch, cn = _unit_rows(C, "centers")
        D = 1.0 - Zh @ Ch.T
        return _Geometry(D * D, D, (Zh, zn, Ch, cn))
    if kind == "mahalanobis":
        U, V = _whiten(L, Z), _whiten(L, C)
    elif kind == "euclidean":
        U, V = Z, C
    else:
        raise InvalidConfig(f"unknown distance {kind!r}")
    s = _pairwise_sq(U, V)
    return _Geometry(s, np.sqrt(s), (U, V))


def _geometry_backward(geo, g_s, kind, L=None):
    """Map dLoss/ds back to (dLoss/dZ, dLoss/dC)."""
    if kind == "cosine":
        Zh, zn, Ch, cn = geo.aux
        g_cos = -2.0 * geo.D * g_s
        g_zh = g_cos @ Ch
        g_ch = g_cos.T @ Zh
        gZ = (g_zh - Zh * np.sum(Zh * g_zh, axis=1, keepdims=True)) / zn[:, None]
        gC = (g_ch - Ch * np.sum(Ch * g_ch, axis=1, keepdims=True)) / cn[:, None]
        return gZ, gC
    U, V = geo.aux
    gU = 2.0 * (U * g_s.sum(axis=1)[:, None] - g_s @ V)
    gV = 2.0 * (V * g_s.sum(axis=0)[:, None] - g_s.T @ U)
    if kind == "mahalanobis":
        gU = solve_lower_triangular(L, gU.T, transpose=True).T
        gV = solve_lower_triangular(L, gV.T, transpose=True).T
    return gU, gV


def distance_matrix(Z, C, kind="mahalanobis", spec=None):
    """Distance from every row of ``Z`` to every row of ``C`` (n x K).

    ``mahalanobis`` uses covariance ``spec.delta * I`` and goes through its
    Cholesky factor: both sides are whitened by a triangular solve and the
    Euclidean distance of the whitened vectors is returned.
    """
    Z = as_matrix(Z, "Z")
    C = as_matrix(C, "C")
    L = None
    if kind == "mahalanobis":
        spec = spec or CovarianceSpec(0.01, Z.shape[1])
        L = covariance_factor(CovarianceSpec(spec.delta, Z.shape[1]))
    return _geometry(Z, C, kind, L).D


def _kernel_sq(s, kernel):
    """Kernel value and its derivative, both as functions of squared distance."""
    if kernel.kind == "cauchy":
        r = 1.0 / (1.0 + s / kernel.gamma ** 2)
        return r, -r * r / kernel.gamma ** 2
    if kernel.kind == "students_t":
        nu = kernel.nu
        base = 1.0 + s / nu
        r = base ** (-(nu + 1.0) / 2.0)
        return r, -(nu + 1.0) / (2.0 * nu) * r / base
    r = np.exp(-s / (2.0 * kernel.gamma ** 2))
    return r, -r / (2.0 * kernel.gamma ** 2)


def kernel_similarity(D, kernel=Kernel()):
    """Raw similarities from a distance matrix."""
    D = np.asarray(D, dtype=np.float64)
    return _kernel_sq(D * D, kernel)[0]


def normalize_assignments(q_raw, epsilon=1e-10):
    q_raw = np.asarray(q_raw, dtype=np.float64)
    return q_raw / (q_raw.sum(axis=1, keepdims=True) + epsilon)


def predicted_distribution(q):
    return row_softmax(q)


def target_distribution(q):
    """Square and divide by cluster frequency, then make every row sum to one.

    A row of ``q`` that is identically zero has no preferred cluster and
    gets the uniform row.
    """
    q = np.asarray(q, dtype=np.float64)
    f = q.sum(axis=0)
    if np.any(f < 1e-12):
        dead = np.flatnonzero(f < 1e-12).tolist()
        raise DegenerateColumn(f"clusters {dead} have total soft assignment < 1e-12")
    pt = q * q / f
    rows = pt.sum(axis=1, keepdims=True)
    K = q.shape[1]
    return np.divide(pt, rows, out=np.full_like(pt, 1.0 / K), where=rows > 0)


def _kl(p, r):
    mask = p > 0
    if np.any(r[mask] <= 0):
        raise NonFinite("KL divergence undefined: reference is 0 where target is > 0")
    return float(np.sum(p[mask] * np.log(p[mask] / r[mask])))


def clustering_loss(p, m):
    """KL(p || m) summed over all rows and clusters."""
    return _kl(np.asarray(p, dtype=np.float64), np.asarray(m, dtype=np.float64))


def total_loss(ce, re, alpha=0.9):
    return alpha * ce + re


def hard_assign(m):
    """Row-wise argmax; ties go to the lowest cluster index."""
    return np.argmax(np.asarray(m), axis=1)


class Evaluation(NamedTuple):
    losses: EpochLosses
    assignments: AssignmentSet
    ae_grads: list
    center_grad: np.ndarray


def evaluate(ae, centers, X, config, L=None, p=None, need_grad=True):
    """Objective value, distributions and (optionally) gradients.

    ``p`` is treated as a constant; when not given it is computed from the
    current ``q``. ``L`` is the covariance factor (computed if missing).
    """
    if config.distance == "mahalanobis" and L is None:
        L = covariance_factor(CovarianceSpec(config.delta, centers.shape[1]))
    Z, X_hat, caches = ae_mod.forward(ae, X)
    geo = _geometry(Z, centers, config.distance, L)
    r, dr_ds = _kernel_sq(geo.s, config.kernel_spec)
    denom = r.sum(axis=1, keepdims=True) + config.epsilon
    q = r / denom
    m = row_softmax(q)
    if p is None:
        p = target_distribution(q)
    re = ae_mod.reconstruction_loss(X, X_hat)
    ce = _kl(p, m)
    kl_pq = _kl(p, q) if np.all(q[p > 0] > 0) else float("inf")
    losses = EpochLosses(re, ce, total_loss(ce, re, config.alpha), ce, kl_pq)
    assignments = AssignmentSet(q, m, p)
    if not need_grad:
        return Evaluation(losses, assignments, None, None)

    a = config.alpha
    g_q = a * (m * p.sum(axis=1, keepdims=True) - p)
    g_r = (g_q - np.sum(g_q * q, axis=1, keepdims=True)) / denom
    g_s = g_r * dr_ds
    gZ, gC = _geometry_backward(geo, g_s, config.distance, L)
    grads = ae_mod.backward(ae, caches, ae_mod.reconstruction_grad(X, X_hat), gZ)
    return Evaluation(losses, assignments, grads, gC)


def fit_bandwidth(Z, centers, config):
    """Median of all code-to-center distances (floored at 1e-12).

    Used as the Gaussian kernel width when none is configured. A width at
    the scale of the nearest-center distances is too narrow: codes move by
    several widths per step early in training and whole columns of the
    kernel underflow.
    """
    L = None
    if config.distance == "mahalanobis":
        L = covariance_factor(CovarianceSpec(config.delta, centers.shape[1]))
    D = _geometry(Z, centers, config.distance, L).D
    return max(float(np.median(D)), 1e-12)


def initial_centers(Z, config, rng):
    """Centers for the configured initializer, fitted on latent codes."""
    if config.init == "birch":
        bc = BirchConfig(config.threshold, config.branching, config.leaf_capacity,
                         config.restarts)
        return birch_init(Z, config.K, bc, rng)
    seeding = "uniform" if config.init == "kmeans" else "plusplus"
    return kmeans_init(Z, config.K, restarts=config.restarts, seeding=seeding, rng=rng)


def train(X, config, ae, rng=None, centers=None, callback=None):
    """Joint training of autoencoder and centers.

    ``ae`` is updated in place (its optimizer moments are reset first).
    ``centers`` overrides the configured initializer. ``callback`` is called
    as ``callback(epoch, assignments, losses)`` once per epoch, before the
    parameter update.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    if n < config.K:
        raise InvalidConfig(f"need at least K={config.K} rows, got {n}")
    rng = make_rng(config.seed if rng is None else rng)
    ae.reset_optimizer()

    if centers is None:
        init = initial_centers(ae_mod.encode(ae, X), config, rng)
        centers, init_labels = init.centers.copy(), init.labels
    else:
        centers = as_matrix(centers, "centers").copy()
        init_labels = None
        if centers.shape != (config.K, ae.config.latent_dim):
            raise DimensionMismatch(f"centers must be {config.K} x {ae.config.latent_dim}")
    if config.kernel == "normal" and config.normal_bandwidth is None:
        config = replace(config, normal_bandwidth=fit_bandwidth(ae_mod.encode(ae, X), centers, config))
        log.info("normal kernel bandwidth set to %.6g", config.normal_bandwidth)
    start_centers = centers.copy()
    center_opt = ae_mod.Adam([centers.shape])

    curve, seconds = [], []
    p = None
    for epoch in range(config.epochs):
        tick = time.perf_counter()
        L = None
        if config.distance == "mahalanobis":
            L = covariance_factor(CovarianceSpec(config.delta, centers.shape[1]))
        refresh = epoch % config.update_interval == 0
        ev = evaluate(ae, centers, X, config, L, p=None if refresh else p)
        p = ev.assignments.p
        if not all(np.isfinite(v) for v in ev.losses[:4]):
            raise NonFiniteLoss(f"loss became non-finite at epoch {epoch + 1}: {ev.losses}")
        curve.append(ev.losses)
        if callback is not None:
            callback(epoch, ev.assignments, ev.losses)
        ae.optimizer.step(ae.parameters(), ev.ae_grads, config.lr)
        if config.centers_trainable:
            center_opt.step([centers], [ev.center_grad], config.lr)
        seconds.append(time.perf_counter() - tick)
        log.debug("epoch %d re %.5g ce %.5g", epoch + 1, ev.losses.re_loss, ev.losses.ce_loss)

    final = evaluate(ae, centers, X, config, need_grad=False)
    return ClusteringResult(
        labels=hard_assign(final.assignments.m),
        centers=centers,
        loss_curve=curve,
        assignments=final.assignments,
        initial_centers=start_centers,
        initial_labels=init_labels,
        config=config,
        epoch_seconds=seconds,
    )
