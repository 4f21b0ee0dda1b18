"""Batch pipeline, ablation grid and K-scalability benchmark.

All three take a flat :class:`RunConfig`. ``resolve`` fills every default
(including per-profile epoch counts) so a report can echo the exact
configuration that produced it and a re-run from that echo repeats the run.
"""
import csv
import json
import logging
import os
import platform
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import autoencoder as ae_mod
from . import io
from .datasets import gaussian_blobs
from .errors import InsufficientData, InvalidConfig, TabclustError
from .head import DISTANCES, INITS, KERNELS, TrainConfig, initial_centers, train
from .init import kmeans_init
from .metrics import evaluate_labels
from .numerics import make_rng

log = logging.getLogger(__name__)

# (pretrain epochs, train epochs)
PROFILES = {
    "schema": (30, 200),
    "entity": (100, 50),
    "domain": (30, 100),
}
DEFAULT_EPOCHS = (30, 100)

LOSS_HEADER = ["epoch", "re_loss", "ce_loss", "total_loss", "kl_p_m"]

# hardware description fields for benchmark reports
HW_ENV = ("TABCLUST_HW_CPU", "TABCLUST_HW_GPU", "TABCLUST_HW_MEMORY", "TABCLUST_HW_NOTE")

# stream ids for make_rng, one per phase
_PRETRAIN, _INIT, _BENCH, _BASELINE = 0, 1, 2, 3


@dataclass
class RunConfig:
    input: str = None
    labels: str = None
    out: str = "out"
    format: str = "csv"
    header: bool = False
    profile: str = None
    pretrain_epochs: int = None
    epochs: int = None
    K: int = None
    alpha: float = 0.9
    gamma: float = 1.0
    delta: float = 0.01
    epsilon: float = 1e-10
    lr: float = 1e-3
    pretrain_lr: float = 1e-3
    batch_size: int = ae_mod.DEFAULT_PRETRAIN_BATCH
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
    normal_bandwidth: float = None
    hidden_dims: list = field(default_factory=lambda: list(ae_mod.DEFAULT_HIDDEN))
    latent_dim: int = ae_mod.DEFAULT_LATENT
    activation: str = "relu"
    ae_path: str = None
    baseline: bool = True  # also score K-means on the raw input when labels are given

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    def resolve(self):
        """Copy with profile epochs filled in and names normalized."""
        if self.profile is not None and self.profile not in PROFILES:
            raise InvalidConfig(f"unknown profile {self.profile!r}")
        pre, tr = PROFILES.get(self.profile, DEFAULT_EPOCHS)
        kernel = self.kernel.replace("-", "_")
        fmt = "bin" if self.format == "binary" else self.format
        return replace(
            self,
            pretrain_epochs=pre if self.pretrain_epochs is None else self.pretrain_epochs,
            epochs=tr if self.epochs is None else self.epochs,
            kernel=kernel,
            format=fmt,
            hidden_dims=[int(h) for h in self.hidden_dims],
        )

    def ae_config(self, input_dim):
        return ae_mod.AEConfig([input_dim, *self.hidden_dims, self.latent_dim], self.activation)

    def train_config(self, **overrides):
        keys = {f.name for f in fields(TrainConfig)}
        values = {k: v for k, v in asdict(self).items() if k in keys}
        values.update(overrides)
        return TrainConfig(**values)


class _Phase:
    """Tags a package or I/O error escaping the block with the phase name."""

    def __init__(self, name, timings=None):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if self.timings is not None:
            self.timings[self.name] = time.perf_counter() - self.start
        if exc is not None and isinstance(exc, (TabclustError, OSError)) and not hasattr(exc, "phase"):
            exc.phase = self.name
        return False


def _load_inputs(cfg, timings=None, need_k=True):
    with _Phase("load", timings):
        if cfg.input is None:
            raise InvalidConfig("no input matrix given")
        X = io.load_matrix(cfg.input, cfg.format, header=cfg.header)
        y = io.load_labels(cfg.labels, n=X.shape[0]) if cfg.labels else None
        K = cfg.K
        if K is None and need_k:
            if y is None:
                raise InvalidConfig("K is required when no labels are given")
            K = int(np.unique(y).size)
        if K is not None and X.shape[0] < K:
            raise InvalidConfig(f"need at least K={K} instances, got {X.shape[0]}")
    return X, y, K


def pretrain_phase(X, cfg):
    if cfg.ae_path:
        state = ae_mod.load_state(cfg.ae_path)
        if state.config.input_dim != X.shape[1]:
            raise InvalidConfig("saved autoencoder does not match the input width")
        return state
    return ae_mod.pretrain(X, cfg.ae_config(X.shape[1]), cfg.pretrain_epochs,
                           cfg.pretrain_lr, make_rng(cfg.seed, _PRETRAIN), cfg.batch_size)


def write_losses(path, curve):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOSS_HEADER)
        for i, e in enumerate(curve, start=1):
            w.writerow([i, repr(e.re_loss), repr(e.ce_loss), repr(e.total_loss), repr(e.kl_p_m)])


def run_pipeline(config):
    """Pretrain, initialize, train, evaluate; write report, curves and labels.

    Returns the report dict (also written to ``report.json``).
    """
    cfg = config.resolve()
    timings = {}
    X, y, K = _load_inputs(cfg, timings)
    cfg = replace(cfg, K=K)
    os.makedirs(cfg.out, exist_ok=True)
    tc = cfg.train_config()

    with _Phase("pretrain", timings):
        ae = pretrain_phase(X, cfg)
    with _Phase("init", timings):
        init = initial_centers(ae_mod.encode(ae, X), tc, make_rng(cfg.seed, _INIT))
    with _Phase("train", timings):
        result = train(X, tc, ae, centers=init.centers)

    files = {
        "report": os.path.join(cfg.out, "report.json"),
        "losses": os.path.join(cfg.out, "losses.csv"),
        "labels": os.path.join(cfg.out, "labels.txt"),
    }
    with _Phase("write"):
        write_losses(files["losses"], result.loss_curve)
        io.write_labels(files["labels"], result.labels)

    report = {
        "config": cfg.to_dict(),
        "n": int(X.shape[0]),
        "d": int(X.shape[1]),
        "timings": timings,
        "files": files,
        "pretrain_losses": list(ae.loss_curve),
        "kl_p_q": [e.kl_p_q if np.isfinite(e.kl_p_q) else None for e in result.loss_curve],
        "normal_bandwidth": result.config.normal_bandwidth,
    }
    if y is not None:
        with _Phase("evaluate"):
            report["metrics"] = evaluate_labels(y, result.labels).to_dict()
            report["init_metrics"] = evaluate_labels(y, init.labels).to_dict()
        if cfg.baseline:
            with _Phase("baseline", timings):
                base = kmeans_init(X, K, restarts=cfg.restarts, rng=make_rng(cfg.seed, _BASELINE))
                report["baseline_metrics"] = evaluate_labels(y, base.labels).to_dict()
    with _Phase("write"):
        with open(files["report"], "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    return report


def ablation_cells():
    """(group, distance, kernel, init) for every cell of the grid."""
    cells = [("distance", d, "cauchy", "birch") for d in DISTANCES]
    cells += [("kernel", "mahalanobis", k, "birch") for k in KERNELS]
    cells += [("init", "mahalanobis", "cauchy", i) for i in INITS]
    return cells


ABLATION_HEADER = ["group", "distance", "kernel", "init", "status", "ari", "acc",
                   "unary_clusters", "k_predicted", "error"]


def ablate(config, X=None, y=None):
    """Run the distance, kernel and initializer ablations from one pretrained snapshot.

    A failing cell is recorded with its error code and the grid continues.
    Writes ``ablation.csv`` and returns the rows as dicts.
    """
    cfg = config.resolve()
    if X is None:
        X, y, K = _load_inputs(cfg)
    else:
        K = cfg.K if cfg.K is not None else int(np.unique(y).size)
    cfg = replace(cfg, K=K)
    with _Phase("pretrain"):
        snapshot = pretrain_phase(X, cfg)

    rows = []
    for group, dist, kern, init in ablation_cells():
        row = dict(group=group, distance=dist, kernel=kern, init=init, status="ok",
                   ari="", acc="", unary_clusters="", k_predicted="", error="")
        try:
            tc = cfg.train_config(distance=dist, kernel=kern, init=init)
            ae = snapshot.copy()
            cent = initial_centers(ae_mod.encode(ae, X), tc, make_rng(cfg.seed, _INIT))
            res = train(X, tc, ae, centers=cent.centers)
            if y is not None:
                row.update(evaluate_labels(y, res.labels).to_dict())
        except (TabclustError, FloatingPointError) as err:
            row.update(status="error", error=getattr(err, "code", type(err).__name__))
            log.warning("ablation cell %s/%s/%s failed: %s", dist, kern, init, err)
        rows.append(row)

    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "ablation.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, ABLATION_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return rows


def hardware_info():
    info = {"platform": platform.platform(), "machine": platform.machine(),
            "cpu_count": os.cpu_count()}
    for key in HW_ENV:
        if key in os.environ:
            info[key.removeprefix("TABCLUST_HW_").lower()] = os.environ[key]
    return info


def bench_scalability(config, k_grid=(100, 200, 400, 800), X=None, n=5000, d=100,
                      warmup=2, measured=5):
    """Mean per-epoch training time for each K in ``k_grid``.

    Uses the configured input, or synthetic blobs of shape ``n x d`` when
    there is none. Each K starts from the same untrained autoencoder with
    centers drawn as K distinct latent codes; only the joint training epochs
    are timed (``warmup`` epochs discarded, then ``measured`` averaged).
    Writes ``scalability.csv`` and returns ``[(K, seconds_per_epoch), ...]``.
    """
    cfg = config.resolve()
    if X is None:
        if cfg.input is not None:
            X = io.load_matrix(cfg.input, cfg.format, header=cfg.header)
        else:
            X, _ = gaussian_blobs(n=n, d=d, k=min(10, d), rng=make_rng(cfg.seed, _BENCH))
    if X.shape[0] < max(k_grid):
        raise InsufficientData(f"{X.shape[0]} rows cannot hold K={max(k_grid)} clusters")
    base = ae_mod.init_state(cfg.ae_config(X.shape[1]), make_rng(cfg.seed, _PRETRAIN))
    Z = ae_mod.encode(base, X)

    rows = []
    for K in k_grid:
        rng = make_rng(cfg.seed, _INIT)
        centers = Z[rng.choice(X.shape[0], size=K, replace=False)]
        tc = cfg.train_config(K=K, epochs=warmup + measured)
        res = train(X, tc, base.copy(), centers=centers)
        sec = float(np.mean(res.epoch_seconds[warmup:]))
        log.info("K=%d: %.4f s/epoch", K, sec)
        rows.append((int(K), sec))

    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "scalability.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "seconds_per_epoch"])
        w.writerows(rows)
    with open(os.path.join(cfg.out, "scalability.json"), "w", encoding="utf-8") as fh:
        json.dump({"n": int(X.shape[0]), "d": int(X.shape[1]), "warmup": warmup,
                   "measured": measured, "rows": rows, "hardware": hardware_info(),
                   "config": cfg.to_dict()}, fh, indent=2)
    return rows
