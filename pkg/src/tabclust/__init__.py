"""Deep clustering of embedding matrices.

An autoencoder is pretrained on reconstruction, centers are initialized from
a BIRCH CF-tree over the latent codes, and both are then trained jointly
with a Mahalanobis-distance, Cauchy-kernel self-supervised clustering loss.
"""
from .autoencoder import AEConfig, AutoencoderState, encode, decode, pretrain
from .head import TrainConfig, ClusteringResult, train, hard_assign
from .metrics import ari, clustering_accuracy, unary_cluster_count

__version__ = "0.1.0"
