# The three external scores on a few small label vectors.
from tabclust.metrics import ari, clustering_accuracy, contingency, unary_cluster_count

truth = [0, 0, 1, 1]
for pred in ([0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 1], [0, 0, 0, 0]):
    print(pred, "ari %.3f  acc %.2f" % (ari(truth, pred), clustering_accuracy(truth, pred)))

print(contingency([0, 0, 0, 1, 1], [0, 0, 1, 1, 1]))
print("ari", ari([0, 0, 0, 1, 1], [0, 0, 1, 1, 1]))  # 1/6

print("unary clusters in (0, 0, 1, 2):", unary_cluster_count([0, 0, 1, 2]))
