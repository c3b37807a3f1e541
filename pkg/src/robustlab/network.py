"""Bias-free deep ReLU networks with the scaled-output parameterization.

Architecture: h_0 = x, h_l = relu(W_l h_{l-1}) for l = 1..L-1, and
f(x) = W_L h_{L-1} / alpha. Shapes are W_1: m x d, W_2..W_{L-1}: m x m,
W_L: o x m. The derivative convention at 0 is relu'(0) = 1, so sign masks
are pre-activation >= 0.

Each init scheme fixes the per-layer std beta_l:
    lecun     sqrt(1 / fan_in)
    he        sqrt(2 / fan_in)
    ntk       sqrt(2 / m) for layers 1..L-1, sqrt(1 / o) for the output
    nonlazy   m^(-c) everywhere, c >= 1.5
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .numerics import sample_gaussian_matrix

__all__ = [
    "SCHEMES",
    "FormatError",
    "NetworkConfig",
    "Network",
    "ForwardTrace",
    "init_network",
    "forward",
    "input_jvp",
    "batch_outputs",
    "weight_gradients",
    "loss_value",
    "accuracy",
    "save_checkpoint",
    "load_checkpoint",
]

SCHEMES = ("lecun", "he", "ntk", "nonlazy", "custom")

LOSSES = ("squared", "cross_entropy")


class FormatError(ValueError):
    """Raised when a binary file does not parse as its declared format."""


def scheme_betas(scheme, d, m, o, L, c=None):
    """Per-layer stds (beta_1..beta_L) for a named init scheme."""
    if min(d, m, o, L) < 1:
        raise ValueError(f"dims must be positive, got d={d} m={m} o={o} L={L}")
    if scheme == "lecun":
        return (math.sqrt(1.0 / d),) + (math.sqrt(1.0 / m),) * (L - 1)
    if scheme == "he":
        return (math.sqrt(2.0 / d),) + (math.sqrt(2.0 / m),) * (L - 1)
    if scheme == "ntk":
        return (math.sqrt(2.0 / m),) * (L - 1) + (math.sqrt(1.0 / o),)
    if scheme == "nonlazy":
        return (float(m) ** (-float(c)),) * L
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class NetworkConfig:
    """Static description of a network: dims, output scale, init stds."""

    d: int
    m: int
    o: int
    L: int
    alpha: float
    scheme: str
    betas: tuple
    c: float = None

    def __post_init__(self):
        for name in ("d", "m", "o", "L"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.L < 2:
            raise ValueError(f"L must be at least 2, got {self.L}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be finite and positive, got {self.alpha}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if len(self.betas) != self.L:
            raise ValueError(f"need {self.L} betas, got {len(self.betas)}")
        for b in self.betas:
            if not (math.isfinite(b) and b > 0):
                raise ValueError(f"betas must be finite and positive, got {b}")
        if self.scheme == "nonlazy":
            if self.c is None or not (math.isfinite(self.c) and self.c >= 1.5):
                raise ValueError(f"nonlazy needs c >= 1.5, got {self.c}")
        if self.scheme in ("lecun", "he", "ntk", "nonlazy"):
            expect = scheme_betas(self.scheme, self.d, self.m, self.o, self.L, self.c)
            if tuple(self.betas) != expect:
                raise ValueError(f"betas inconsistent with scheme {self.scheme!r}")

    @classmethod
    def lecun(cls, d, m, o, L, alpha=1.0):
        return cls(d, m, o, L, float(alpha), "lecun", scheme_betas("lecun", d, m, o, L))

    @classmethod
    def he(cls, d, m, o, L, alpha=1.0):
        return cls(d, m, o, L, float(alpha), "he", scheme_betas("he", d, m, o, L))

    @classmethod
    def ntk(cls, d, m, o, L, alpha=1.0):
        return cls(d, m, o, L, float(alpha), "ntk", scheme_betas("ntk", d, m, o, L))

    @classmethod
    def nonlazy(cls, d, m, o, L, c=2.0, alpha=1.0):
        c = float(c)
        return cls(d, m, o, L, float(alpha), "nonlazy", scheme_betas("nonlazy", d, m, o, L, c), c)

    @classmethod
    def custom(cls, d, m, o, L, betas, alpha=1.0):
        return cls(d, m, o, L, float(alpha), "custom", tuple(float(b) for b in betas))

    @property
    def shapes(self):
        """Weight shapes layer by layer."""
        return [(self.m, self.d)] + [(self.m, self.m)] * (self.L - 2) + [(self.o, self.m)]


@dataclass
class Network:
    """Weights plus a frozen copy of the weights at init."""

    config: NetworkConfig
    weights: list
    init_weights: tuple

    def __post_init__(self):
        shapes = self.config.shapes
        if len(self.weights) != self.config.L or len(self.init_weights) != self.config.L:
            raise ValueError("need one weight matrix per layer")
        for w, w0, shape in zip(self.weights, self.init_weights, shapes):
            if w.shape != shape or w0.shape != shape:
                raise ValueError(f"weight shape {w.shape} does not match config {shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(w0))):
                raise ValueError("weights must be finite")
        for w0 in self.init_weights:
            w0.setflags(write=False)

    def copy(self):
        return Network(self.config, [w.copy() for w in self.weights], self.init_weights)

    def at_init(self):
        """A network holding a mutable copy of the init weights."""
        return Network(self.config, [w.copy() for w in self.init_weights], self.init_weights)


def init_network(config, rng):
    """Draw fresh weights W_l ~ N(0, beta_l^2) entrywise from rng."""
    weights = []
    for (rows, cols), beta in zip(config.shapes, config.betas):
        weights.append(sample_gaussian_matrix(rows, cols, beta, rng))
    init = tuple(w.copy() for w in weights)
    return Network(config, weights, init)


@dataclass
class ForwardTrace:
    """Activations h_0..h_{L-1}, sign masks of each hidden layer, output."""

    activations: list
    signs: list
    output: np.ndarray


def forward(net, x):
    """Forward pass on a single input, recording activations and sign masks."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.config.d,):
        raise ValueError(f"input must have shape ({net.config.d},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    h = x
    activations = [x]
    signs = []
    for w in net.weights[:-1]:
        z = w @ h
        s = z >= 0.0
        h = z * s  # relu as mask * pre-activation, exactly
        signs.append(s)
        activations.append(h)
    output = (net.weights[-1] @ h) / net.config.alpha
    return ForwardTrace(activations, signs, output)


def input_jvp(net, trace, delta):
    """Jacobian-vector product d f(x) / dx applied to delta, with the ReLU
    sign pattern frozen to the one recorded in trace."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (net.config.d,):
        raise ValueError(f"delta must have shape ({net.config.d},), got {delta.shape}")
    t = delta
    for w, s in zip(net.weights[:-1], trace.signs):
        t = (w @ t) * s
    return (net.weights[-1] @ t) / net.config.alpha


def jvp_many(net, trace, deltas):
    """input_jvp for a block of tangents: deltas (k, d) -> outputs (k, o)."""
    t = np.asarray(deltas, dtype=float).T
    for w, s in zip(net.weights[:-1], trace.signs):
        t = (w @ t) * s[:, None]
    return ((net.weights[-1] @ t) / net.config.alpha).T


def _forward_batch(weights, alpha, xs):
    """Batch forward. Returns (outputs (n,o), hidden activations, sign masks)."""
    h = xs
    acts = [xs]
    signs = []
    for w in weights[:-1]:
        z = h @ w.T
        s = z >= 0.0
        h = z * s
        signs.append(s)
        acts.append(h)
    out = (h @ weights[-1].T) / alpha
    return out, acts, signs


def batch_outputs(net, xs):
    """Network outputs for a batch of inputs, shape (n, o)."""
    xs = np.asarray(xs, dtype=float)
    return _forward_batch(net.weights, net.config.alpha, xs)[0]


def _softmax(f):
    z = f - f.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_batch(net, xs, ys, loss):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != net.config.d:
        raise ValueError(f"inputs must be (n, {net.config.d}), got {xs.shape}")
    if ys.shape != (xs.shape[0], net.config.o):
        raise ValueError(f"labels must be ({xs.shape[0]}, {net.config.o}), got {ys.shape}")
    if xs.shape[0] < 1:
        raise ValueError("batch must be non-empty")
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    if loss == "cross_entropy" and net.config.o < 2:
        raise ValueError("cross_entropy needs at least 2 outputs")
    return xs, ys


def weight_gradients(net, xs, ys, loss="squared"):
    """Gradients of the batch-mean loss with respect to every weight matrix.

    squared:        (1/2n) sum_i ||f(x_i) - y_i||^2
    cross_entropy:  (1/n) sum_i -log softmax(f(x_i))[argmax y_i]
    """
    xs, ys = _check_batch(net, xs, ys, loss)
    n = xs.shape[0]
    alpha = net.config.alpha
    out, acts, signs = _forward_batch(net.weights, alpha, xs)
    if loss == "squared":
        g = (out - ys) / n
    else:
        g = (_softmax(out) - ys) / n
    grads = [None] * net.config.L
    grads[-1] = (g.T @ acts[-1]) / alpha
    gh = (g @ net.weights[-1]) / alpha
    for l in range(net.config.L - 2, -1, -1):
        gz = gh * signs[l]
        grads[l] = gz.T @ acts[l]
        if l > 0:
            gh = gz @ net.weights[l]
    return grads


def loss_value(net, xs, ys, loss="squared"):
    """Batch-mean loss under the same conventions as weight_gradients."""
    xs, ys = _check_batch(net, xs, ys, loss)
    out = batch_outputs(net, xs)
    n = xs.shape[0]
    if loss == "squared":
        return float(0.5 * ((out - ys) ** 2).sum() / n)
    z = out - out.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-(ys * logp).sum() / n)


def accuracy(net, xs, ys):
    """argmax match for one-hot labels, sign match for scalar labels."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = batch_outputs(net, xs)
    if net.config.o == 1:
        return float(np.mean(np.sign(out[:, 0]) * ys[:, 0] > 0))
    return float(np.mean(out.argmax(axis=1) == ys.argmax(axis=1)))


# ---------------------------------------------------------------------------
# checkpoint format
#
# magic "RLAB", u32 version, then little-endian:
# u32 L, d, m, o; f64 alpha; u8 scheme tag; f64 c (0 when unused);
# f64 beta_1..beta_L; then weights and init weights as row-major f64 blocks,
# layer by layer.
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"RLAB"
CHECKPOINT_VERSION = 1
_SCHEME_TAGS = {"lecun": 0, "he": 1, "ntk": 2, "nonlazy": 3, "custom": 4}
_TAG_SCHEMES = {v: k for k, v in _SCHEME_TAGS.items()}


def save_checkpoint(net, path):
    """Write the network (weights and init weights) to a binary checkpoint."""
    cfg = net.config
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<I", CHECKPOINT_VERSION),
        struct.pack("<IIII", cfg.L, cfg.d, cfg.m, cfg.o),
        struct.pack("<d", cfg.alpha),
        struct.pack("<B", _SCHEME_TAGS[cfg.scheme]),
        struct.pack("<d", cfg.c if cfg.c is not None else 0.0),
        struct.pack(f"<{cfg.L}d", *cfg.betas),
    ]
    for group in (net.weights, net.init_weights):
        for w in group:
            parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint. Round trip is bit-exact."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError("bad magic: not a checkpoint file")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(blob):
            raise FormatError("truncated checkpoint")
        vals = struct.unpack_from(fmt, blob, pos)
        pos += size
        return vals

    (version,) = take("<I")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    L, d, m, o = take("<IIII")
    if L < 2 or min(d, m, o) < 1:
        raise FormatError(f"bad dimensions L={L} d={d} m={m} o={o}")
    (alpha,) = take("<d")
    (tag,) = take("<B")
    if tag not in _TAG_SCHEMES:
        raise FormatError(f"unknown scheme tag {tag}")
    (c,) = take("<d")
    betas = take(f"<{L}d")
    try:
        cfg = NetworkConfig(
            int(d), int(m), int(o), int(L), alpha, _TAG_SCHEMES[tag],
            tuple(betas), c if _TAG_SCHEMES[tag] == "nonlazy" else None,
        )
    except ValueError as exc:
        raise FormatError(f"inconsistent checkpoint header: {exc}") from exc
    shapes = cfg.shapes
    need = 2 * sum(r * cols for r, cols in shapes) * 8
    if len(blob) - pos != need:
        raise FormatError(
            f"checkpoint payload has {len(blob) - pos} bytes, expected {need}"
        )

    def take_group():
        nonlocal pos
        group = []
        for rows, cols in shapes:
            size = rows * cols * 8
            arr = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=pos)
            pos += size
            group.append(arr.reshape(rows, cols).astype(float))
        return group

    weights = take_group()
    init = tuple(take_group())
    try:
        return Network(cfg, weights, init)
    except ValueError as exc:
        raise FormatError(f"invalid checkpoint payload: {exc}") from exc
