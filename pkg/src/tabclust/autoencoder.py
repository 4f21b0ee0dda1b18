"""Fully connected autoencoder with hand-written backpropagation and Adam.

Encoder layers map ``d -> h1 -> ... -> latent`` with a nonlinearity on every
hidden layer and a linear latent layer; the decoder mirrors the encoder and
ends in a linear output layer. Weights are stored ``(out_dim, in_dim)`` and a
batch ``X`` of shape ``(n, in_dim)`` is mapped to ``X @ W.T + b``.
"""
import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NonFiniteLoss, ShapeMismatch
from .numerics import as_matrix, make_rng

log = logging.getLogger(__name__)

DEFAULT_HIDDEN = (500, 500, 2000)
DEFAULT_LATENT = 100


@dataclass
class AEConfig:
    layer_dims: list
    activation: str = "relu"

    def __post_init__(self):
        self.layer_dims = [int(v) for v in self.layer_dims]
        if len(self.layer_dims) < 2 or min(self.layer_dims) < 1:
            raise InvalidConfig(f"bad layer dims {self.layer_dims}")
        if self.activation not in ("relu", "sigmoid"):
            raise InvalidConfig(f"unknown activation {self.activation!r}")

    @classmethod
    def default(cls, input_dim, hidden=DEFAULT_HIDDEN, latent=DEFAULT_LATENT, activation="relu"):
        return cls([input_dim, *hidden, latent], activation)

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def latent_dim(self):
        return self.layer_dims[-1]


@dataclass
class LayerParams:
    W: np.ndarray
    b: np.ndarray


class Adam:
    """Adam with bias correction over a fixed list of parameter arrays."""

    def __init__(self, shapes, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads, lr):
        if lr <= 0:
            raise InvalidConfig("learning rate must be positive")
        if len(grads) != len(params):
            raise ShapeMismatch(f"expected {len(params)} gradients, got {len(grads)}")
        for p, g, m in zip(params, grads, self.m):
            if np.shape(g) != p.shape or m.shape != p.shape:
                raise ShapeMismatch(f"gradient shape {np.shape(g)} vs parameter {p.shape}")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class AutoencoderState:
    config: AEConfig
    encoder: list
    decoder: list
    optimizer: Adam = None
    loss_curve: list = field(default_factory=list)

    def __post_init__(self):
        if self.optimizer is None:
            self.reset_optimizer()

    def parameters(self):
        """Flat parameter list: encoder (W, b) pairs, then decoder pairs."""
        out = []
        for layer in self.encoder + self.decoder:
            out += [layer.W, layer.b]
        return out

    def reset_optimizer(self):
        self.optimizer = Adam([p.shape for p in self.parameters()])

    @property
    def step(self):
        return self.optimizer.t

    def copy(self):
        return copy.deepcopy(self)


def init_state(config, rng):
    """Fresh parameters, uniform in +-1/sqrt(fan_in), encoder first."""
    rng = make_rng(rng)
    dims = config.layer_dims
    pairs = list(zip(dims[:-1], dims[1:]))
    pairs += [(o, i) for i, o in reversed(pairs)]
    layers = []
    for fan_in, fan_out in pairs:
        bound = 1.0 / np.sqrt(fan_in)
        W = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append(LayerParams(W, b))
    k = len(dims) - 1
    return AutoencoderState(config, layers[:k], layers[k:])


def _act(name, a):
    if name == "relu":
        return np.maximum(a, 0.0)
    return 1.0 / (1.0 + np.exp(-a))


def _act_grad(name, a, h):
    if name == "relu":
        return (a > 0.0).astype(np.float64)
    return h * (1.0 - h)


def _forward(layers, X, activation):
    """Run a layer stack; the last layer is linear. Returns (out, cache)."""
    cache = []
    h = X
    for i, layer in enumerate(layers):
        a = h @ layer.W.T + layer.b
        out = a if i == len(layers) - 1 else _act(activation, a)
        cache.append((h, a, out))
        h = out
    return h, cache


def _backward(layers, cache, grad_out, activation, need_input_grad=True):
    """Backpropagate ``grad_out`` through a stack. Returns (param_grads, grad_in)."""
    grads = [None] * (2 * len(layers))
    g = grad_out
    for i in range(len(layers) - 1, -1, -1):
        h_in, a, out = cache[i]
        if i != len(layers) - 1:
            g = g * _act_grad(activation, a, out)
        grads[2 * i] = g.T @ h_in
        grads[2 * i + 1] = g.sum(axis=0)
        if i > 0 or need_input_grad:
            g = g @ layers[i].W
    return grads, g


def _check_cols(M, expected, what):
    if M.shape[1] != expected:
        raise DimensionMismatch(f"{what} expects {expected} columns, got {M.shape[1]}")


def encode(state, X):
    X = as_matrix(X, "X")
    _check_cols(X, state.config.input_dim, "encoder")
    return _forward(state.encoder, X, state.config.activation)[0]


def decode(state, Z):
    Z = as_matrix(Z, "Z")
    _check_cols(Z, state.config.latent_dim, "decoder")
    return _forward(state.decoder, Z, state.config.activation)[0]


def forward(state, X):
    """Full pass keeping activations for backprop: (Z, X_hat, caches)."""
    act = state.config.activation
    Z, enc_cache = _forward(state.encoder, X, act)
    X_hat, dec_cache = _forward(state.decoder, Z, act)
    return Z, X_hat, (enc_cache, dec_cache)


def backward(state, caches, grad_X_hat, grad_Z=None):
    """Parameter gradients given dL/dX_hat and an optional extra dL/dZ."""
    act = state.config.activation
    enc_cache, dec_cache = caches
    dec_grads, gZ = _backward(state.decoder, dec_cache, grad_X_hat, act)
    if grad_Z is not None:
        gZ = gZ + grad_Z
    enc_grads, _ = _backward(state.encoder, enc_cache, gZ, act, need_input_grad=False)
    return enc_grads + dec_grads


def reconstruction_loss(X, X_hat):
    """Mean squared error over all n*d entries."""
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    if X.shape != X_hat.shape:
        raise DimensionMismatch(f"shapes differ: {X.shape} vs {X_hat.shape}")
    return float(np.mean(np.square(X - X_hat)))


def reconstruction_grad(X, X_hat):
    return 2.0 * (X_hat - X) / X.size


def loss_and_grads(state, X):
    """Reconstruction loss and its gradient for every parameter."""
    _, X_hat, caches = forward(state, X)
    loss = reconstruction_loss(X, X_hat)
    return loss, backward(state, caches, reconstruction_grad(X, X_hat))


def gradient_step(state, grads, lr):
    """One Adam update applied in place; returns ``state`` for chaining."""
    state.optimizer.step(state.parameters(), grads, lr)
    return state


DEFAULT_PRETRAIN_BATCH = 256


def pretrain(X, config, epochs, lr=1e-3, rng=0, batch_size=DEFAULT_PRETRAIN_BATCH):
    """Train the autoencoder on reconstruction alone.

    Rows are visited in mini-batches of ``batch_size``, in a fresh seeded
    permutation each epoch; ``batch_size=None`` trains full batch. Full-batch
    training gives one Adam step per epoch, which at the usual 30 epochs
    leaves the network reconstructing little more than the data mean. The per-epoch loss is kept in
    ``state.loss_curve`` (for mini-batches, the mean over batches).
    """
    X = as_matrix(X, "X")
    if X.shape[0] == 0:
        raise DimensionMismatch("X has no rows")
    if epochs < 0:
        raise InvalidConfig("epochs must be >= 0")
    _check_cols(X, config.input_dim, "encoder")
    rng = make_rng(rng)
    state = init_state(config, rng)
    n = X.shape[0]
    for epoch in range(epochs):
        if batch_size is None or batch_size >= n:
            loss, grads = loss_and_grads(state, X)
            gradient_step(state, grads, lr)
        else:
            order = rng.permutation(n)
            losses = []
            for start in range(0, n, batch_size):
                batch = X[order[start:start + batch_size]]
                bl, grads = loss_and_grads(state, batch)
                gradient_step(state, grads, lr)
                losses.append(bl)
            loss = float(np.mean(losses))
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"reconstruction loss became {loss} at pretrain epoch {epoch + 1}")
        state.loss_curve.append(loss)
        log.debug("pretrain epoch %d re_loss %.6g", epoch + 1, loss)
    return state


def save_state(path, state):
    """Parameters and layer config as ``.npz`` (optimizer moments are not kept)."""
    arrays = {f"p{i}": p for i, p in enumerate(state.parameters())}
    np.savez(path, layer_dims=np.array(state.config.layer_dims),
             activation=np.array(state.config.activation), **arrays)


def load_state(path):
    with np.load(path) as f:
        config = AEConfig(f["layer_dims"].tolist(), str(f["activation"]))
        params = [f[f"p{i}"] for i in range(2 * 2 * (len(config.layer_dims) - 1))]
    layers = [LayerParams(W.astype(np.float64), b.astype(np.float64))
              for W, b in zip(params[::2], params[1::2])]
    k = len(config.layer_dims) - 1
    return AutoencoderState(config, layers[:k], layers[k:])
