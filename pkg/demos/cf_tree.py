# Building a CF-tree and reading subclusters off its leaves.
import logging

import numpy as np

from tabclust.init import BirchConfig, CFTree, birch_init, tune_threshold
from tabclust.numerics import make_rng

logging.basicConfig(level=logging.INFO, format="%(message)s")
rng = make_rng(0)
points = np.vstack([rng.standard_normal((200, 2)) + off for off in ([0, 0], [8, 0], [0, 8])])

tree = CFTree(2, threshold=0.8, branching=4, leaf_capacity=4)
for p in points:
    tree.insert(p)
print("leaf entries:", len(tree), "nodes:", len(list(tree.nodes())))

e = max(tree.leaf_entries(), key=lambda e: e.n)
print("largest entry: n=%d centroid=%s radius=%.3f" % (e.n, np.round(e.centroid, 3), e.radius))

# with no threshold given, birch halves a starting guess until there are enough entries
T = tune_threshold(points, 30)
print("threshold for >= 30 entries:", round(T, 4))

init = birch_init(points, 3, BirchConfig(), rng=0)
print("centers\n", np.round(init.centers, 2))
