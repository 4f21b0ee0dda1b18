# How a distance becomes a soft assignment.
import numpy as np

from tabclust import head as H

z = np.array([[0.3, 0.4]])
c = np.array([[0.0, 0.0], [1.0, 1.0]])

# covariance delta * I, so the Cholesky factor is sqrt(delta) * I
print(H.covariance_factor(H.CovarianceSpec(0.01, 2)).entries)

D = H.distance_matrix(z, c, "mahalanobis", H.CovarianceSpec(0.01, 2))
print("mahalanobis", D)  # 5.0 to the origin: |z - c| / sqrt(delta) = 0.5 / 0.1
print("euclidean  ", H.distance_matrix(z, c, "euclidean"))
print("cosine     ", H.distance_matrix(z, c[1:], "cosine"))

# heavy tails (cauchy) versus light tails (normal) at the same bandwidth
d = np.array([[0.0, 1.0, 2.0, 5.0, 10.0]])
for kind in H.KERNELS:
    print(kind.ljust(10), np.round(H.kernel_similarity(d, H.Kernel(kind, gamma=2.0, nu=1.0)), 4))

q = H.normalize_assignments([[0.8, 0.2], [0.6, 0.4]])
print("q", q)
print("m", H.predicted_distribution(q))
print("p", H.target_distribution(q))  # first row 48/55, 7/55
print("KL(p || m) summed over rows:", H.clustering_loss(H.target_distribution(q), H.predicted_distribution(q)))
