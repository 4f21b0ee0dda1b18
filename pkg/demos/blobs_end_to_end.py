# Cluster six synthetic Gaussian blobs end to end, one step at a time.
import numpy as np

from tabclust import autoencoder as A
from tabclust import head as H
from tabclust.datasets import gaussian_blobs
from tabclust.metrics import evaluate_labels
from tabclust.numerics import make_rng

X, y = gaussian_blobs(n=600, d=50, k=6, separation=10.0, rng=1)  # centers 10 sigma apart
print("data", X.shape, "cluster sizes", np.bincount(y))

# a smaller network than the default keeps this under ten seconds
config = A.AEConfig([50, 128, 128, 10])
ae = A.pretrain(X, config, epochs=30, rng=0)  # mini-batches of 256, Adam lr 1e-3
print("reconstruction loss, first and last epoch:", round(ae.loss_curve[0], 4), round(ae.loss_curve[-1], 4))

Z = A.encode(ae, X)  # latent codes, 600 x 10
tc = H.TrainConfig(K=6, epochs=40)  # mahalanobis distance, cauchy kernel, birch init
init = H.initial_centers(Z, tc, make_rng(0, 1))
print("after initialization:", evaluate_labels(y, init.labels))

result = H.train(X, tc, ae, centers=init.centers)
last = result.loss_curve[-1]
print("final losses: re %.4f  ce %.4f  total %.4f" % (last.re_loss, last.ce_loss, last.total_loss))
print("after joint training:", evaluate_labels(y, result.labels))

q, m, p = result.assignments.q, result.assignments.m, result.assignments.p
print("first row of q", np.round(q[0], 3))
print("first row of m", np.round(m[0], 3))  # softmax of q is much flatter
print("first row of p", np.round(p[0], 3))  # the sharpened target
