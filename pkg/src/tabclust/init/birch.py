"""BIRCH clustering-feature tree and center initialization built on it.

Each leaf entry summarizes the points it absorbed by the triplet
``(n, ls, ss)``: count, linear sum and sum of squared norms. Internal nodes
hold one aggregate triplet per child. A point is absorbed by the closest
leaf entry when the merged entry's radius stays within the threshold;
otherwise it opens a new entry, and overfull nodes split around their two
farthest entries.
"""
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, InsufficientSubclusters, InvalidConfig
from ..numerics import as_matrix, make_rng
from .kmeans import Centroids, kmeans_init, lloyd

log = logging.getLogger(__name__)


@dataclass
class BirchConfig:
    threshold: float = None  # None: pick one with tune_threshold
    branching: int = 50
    leaf_capacity: int = 50
    global_restarts: int = 20

    def __post_init__(self):
        if self.threshold is not None and not self.threshold > 0:
            raise InvalidConfig("threshold must be > 0")
        if self.branching < 2 or self.leaf_capacity < 1:
            raise InvalidConfig("need branching >= 2 and leaf_capacity >= 1")


@dataclass
class CFEntry:
    n: float
    ls: np.ndarray
    ss: float

    def __add__(self, other):
        return CFEntry(self.n + other.n, self.ls + other.ls, self.ss + other.ss)

    @property
    def centroid(self):
        return self.ls / self.n

    @property
    def radius(self):
        return cf_radius(self.n, self.ls, self.ss)


def cf_radius(n, ls, ss):
    """sqrt(ss/n - |ls/n|^2), clipped at zero."""
    return float(np.sqrt(max(ss / n - float(ls @ ls) / (n * n), 0.0)))


class CFNode:
    """Node holding up to ``capacity`` triplets (one per entry or child).

    Arrays are allocated with one spare row so a node can overflow by one
    before it is split.
    """

    def __init__(self, dim, capacity, is_leaf):
        self.is_leaf = is_leaf
        self.capacity = capacity
        self.size = 0
        self.n = np.zeros(capacity + 1)
        self.ls = np.zeros((capacity + 1, dim))
        self.ss = np.zeros(capacity + 1)
        self.children = []  # internal nodes only
        self.ids = []  # leaf nodes only: stable entry ids

    def append(self, n, ls, ss, child=None, eid=None):
        i = self.size
        self.n[i], self.ls[i], self.ss[i] = n, ls, ss
        self.size += 1
        if child is not None:
            self.children.append(child)
        if eid is not None:
            self.ids.append(eid)

    def entry(self, i):
        return CFEntry(float(self.n[i]), self.ls[i].copy(), float(self.ss[i]))

    def entries(self):
        return [self.entry(i) for i in range(self.size)]

    def total(self):
        """Aggregate triplet, summed over entries in index order."""
        s = self.size
        return self.n[:s].sum(), self.ls[:s].sum(axis=0), self.ss[:s].sum()

    def nearest(self, z):
        s = self.size
        cent = self.ls[:s] / self.n[:s, None]
        return int(np.argmin(np.sum(np.square(cent - z), axis=1)))


class CFTree:
    def __init__(self, dim, threshold, branching=50, leaf_capacity=50):
        if not threshold > 0:
            raise InvalidConfig("threshold must be > 0")
        self.dim = dim
        self.threshold = float(threshold)
        self.branching = branching
        self.leaf_capacity = leaf_capacity
        self.root = CFNode(dim, leaf_capacity, is_leaf=True)
        self._next_id = 0

    @classmethod
    def from_config(cls, dim, config, threshold=None):
        T = config.threshold if threshold is None else threshold
        return cls(dim, T, config.branching, config.leaf_capacity)

    def insert(self, z):
        """Insert one point; returns the id of the leaf entry holding it."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.dim,):
            raise DimensionMismatch(f"point has shape {z.shape}, tree dim is {self.dim}")
        zz = float(z @ z)
        path = []
        node = self.root
        while not node.is_leaf:
            i = node.nearest(z)
            path.append((node, i))
            node = node.children[i]

        leaf = node
        eid = None
        if leaf.size:
            i = leaf.nearest(z)
            n, ls, ss = leaf.n[i] + 1.0, leaf.ls[i] + z, leaf.ss[i] + zz
            if cf_radius(n, ls, ss) <= self.threshold:
                leaf.n[i], leaf.ls[i], leaf.ss[i] = n, ls, ss
                eid = leaf.ids[i]
        if eid is None:
            eid = self._next_id
            self._next_id += 1
            leaf.append(1.0, z, zz, eid=eid)

        sibling = self._split(leaf) if leaf.size > self.leaf_capacity else None
        child = leaf
        for parent, i in reversed(path):
            parent.n[i], parent.ls[i], parent.ss[i] = child.total()
            if sibling is not None:
                parent.append(*sibling.total(), child=sibling)
                sibling = self._split(parent) if parent.size > self.branching else None
            child = parent
        if sibling is not None:
            root = CFNode(self.dim, self.branching, is_leaf=False)
            root.append(*self.root.total(), child=self.root)
            root.append(*sibling.total(), child=sibling)
            self.root = root
        return eid

    def _split(self, node):
        """Split ``node`` in place around its farthest pair; return the new sibling."""
        s = node.size
        cent = node.ls[:s] / node.n[:s, None]
        d = np.sum(np.square(cent[:, None, :] - cent[None, :, :]), axis=2)
        a, b = np.unravel_index(int(np.argmax(d)), d.shape)
        if a == b:
            a, b = 0, 1
        to_b = d[:, b] < d[:, a]
        to_b[a], to_b[b] = False, True

        n, ls, ss = node.n[:s].copy(), node.ls[:s].copy(), node.ss[:s].copy()
        children, ids = node.children, node.ids
        sibling = CFNode(self.dim, node.capacity, node.is_leaf)
        node.size = 0
        node.children, node.ids = [], []
        for j in range(s):
            target = sibling if to_b[j] else node
            target.append(n[j], ls[j], ss[j],
                          child=children[j] if children else None,
                          eid=ids[j] if ids else None)
        return sibling

    def leaves(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node
            else:
                stack.extend(reversed(node.children))

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend(reversed(node.children))

    def leaf_entries(self):
        return list(itertools.chain.from_iterable(leaf.entries() for leaf in self.leaves()))

    def leaf_arrays(self):
        """(n, centroids) over all leaf entries, in leaf order."""
        ns, cents = [], []
        for leaf in self.leaves():
            s = leaf.size
            ns.append(leaf.n[:s])
            cents.append(leaf.ls[:s] / leaf.n[:s, None])
        return np.concatenate(ns), np.vstack(cents)

    def __len__(self):
        return sum(leaf.size for leaf in self.leaves())


def cf_insert(tree, z):
    tree.insert(z)
    return tree


def build_tree(Z, config, threshold=None):
    tree = CFTree.from_config(Z.shape[1], config, threshold)
    for z in Z:
        tree.insert(z)
    return tree


def _default_start(Z, sample=512):
    n = Z.shape[0]
    idx = np.unique(np.linspace(0, n - 1, num=min(n, sample)).astype(int))
    S = Z[idx]
    if len(S) < 2:
        return 0.0
    d = np.sqrt(np.maximum(
        (S * S).sum(1)[:, None] - 2.0 * S @ S.T + (S * S).sum(1)[None, :], 0.0))
    iu = np.triu_indices(len(S), 1)
    return 0.5 * float(d[iu].mean())


def tune_threshold(Z, K, config=None, start=None, max_halvings=20, stability_tol=None):
    """Largest threshold on the grid ``start / 2**i`` giving at least K leaf entries.

    ``start`` defaults to half the mean pairwise distance over an evenly
    spaced sample of up to 512 rows. With ``stability_tol`` set, a candidate
    is accepted only if one further halving changes the leaf count by less
    than that fraction. Leaf counts per step are logged at INFO level.
    """
    Z = as_matrix(Z, "Z")
    config = config or BirchConfig()
    if Z.shape[0] < K:
        raise InsufficientSubclusters(f"{Z.shape[0]} points cannot give {K} subclusters")
    T0 = _default_start(Z) if start is None else float(start)
    T0 = max(T0, 1e-12)
    counts = {}

    def count(T):
        if T not in counts:
            counts[T] = len(build_tree(Z, config, T))
            log.info("threshold %.6g -> %d leaf entries", T, counts[T])
        return counts[T]

    for i in range(max_halvings + 1):
        T = T0 / 2 ** i
        c = count(T)
        if c < K:
            continue
        if stability_tol is None:
            return T
        c_next = count(T / 2)
        if abs(c_next - c) < stability_tol * c:
            return T
    raise InsufficientSubclusters(
        f"no threshold in {T0:.3g} / 2^0..{max_halvings} yields {K} leaf entries "
        f"(max seen {max(counts.values())})")


def birch_init(Z, K, config=None, rng=0):
    """K initial centers from a CF-tree over the rows of ``Z``.

    Leaf-entry centroids, weighted by their point counts, are grouped into K
    clusters with k-means++ (``config.global_restarts`` restarts). Every row
    of ``Z`` is then assigned to its nearest group center and the returned
    centers are the means of the assigned rows.
    """
    Z = as_matrix(Z, "Z")
    config = config or BirchConfig()
    n = Z.shape[0]
    if not 1 <= K <= n:
        raise InvalidConfig(f"need 1 <= K <= n, got K={K}, n={n}")
    rng = make_rng(rng)
    T = config.threshold
    tree = None
    if T is not None:
        tree = build_tree(Z, config, T)
        if len(tree) < K:
            log.info("threshold %.6g gave %d < %d leaf entries; tuning", T, len(tree), K)
            tree = None
    if tree is None:
        T = tune_threshold(Z, K, config)
        tree = build_tree(Z, config, T)
    weights, cents = tree.leaf_arrays()
    log.info("CF-tree with threshold %.6g has %d leaf entries", T, len(weights))
    glob = kmeans_init(cents, K, restarts=config.global_restarts, seeding="plusplus",
                       rng=rng, weights=weights)
    C, labels, inertia = lloyd(Z, glob.centers, max_iter=1)
    return Centroids(C, labels, inertia)
