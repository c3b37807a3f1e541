"""Training loops: minibatch SGD, the lazy-training ratio, and full-batch
gradient flow for two-layer scalar networks.

Loss conventions differ deliberately between the two paths. SGD minimizes
the batch-MEAN loss (gradients carry 1/n). The flow integrator minimizes the
per-sample SUM of squared errors, because only under that convention do the
outputs evolve as df/dt = (H(t) + G(t))(y - f), the identity the gram-matrix
analysis and its validator are built on.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import RngStream
from .network import LOSSES, _forward_batch, accuracy, loss_value, weight_gradients

__all__ = [
    "TrainHyper",
    "EpochRecord",
    "TrainLog",
    "TrainingDiverged",
    "IntegrationDiverged",
    "sgd_train",
    "lazy_ratio",
    "FlowTrajectory",
    "flow_step",
    "integrate_gradient_flow",
]


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite. Carries the log."""

    def __init__(self, message, log):
        super().__init__(message)
        self.log = log


class IntegrationDiverged(RuntimeError):
    """Raised when gradient-flow state stops being finite."""


@dataclass(frozen=True)
class TrainHyper:
    """SGD settings. The step size is multiplied by lr_drop_factor at the
    start of epochs lr_drop_after+1, +1+every, ... (so 26, 36, 46 with the
    defaults over 50 epochs)."""

    epochs: int = 50
    batch_size: int = 64
    lr: float = 1e-3
    lr_drop_after: int = 25
    lr_drop_factor: float = 0.1
    lr_drop_every: int = 10
    loss: str = "cross_entropy"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (math.isfinite(self.lr) and self.lr >= 0):
            raise ValueError(f"lr must be finite and >= 0, got {self.lr}")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.lr_drop_every < 1:
            raise ValueError(f"lr_drop_every must be >= 1, got {self.lr_drop_every}")

    def effective_lr(self, epoch):
        """Step size in force during the given 1-based epoch."""
        if epoch <= self.lr_drop_after:
            return self.lr
        drops = (epoch - self.lr_drop_after - 1) // self.lr_drop_every + 1
        return self.lr * self.lr_drop_factor**drops


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float
    kappa: float
    elapsed_s: float


@dataclass
class TrainLog:
    records: list = field(default_factory=list)

    @property
    def final(self):
        return self.records[-1]

    def to_csv(self, path=None):
        lines = ["epoch,loss,accuracy,kappa,elapsed_s"]
        for r in self.records:
            lines.append(f"{r.epoch},{r.loss!r},{r.accuracy!r},{r.kappa!r},{r.elapsed_s!r}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def lazy_ratio(net):
    """kappa = sum_l ||W_l - W_l(0)||_F / sum_l ||W_l(0)||_F."""
    num = 0.0
    den = 0.0
    for w, w0 in zip(net.weights, net.init_weights):
        num += math.sqrt(float(((w - w0) ** 2).sum()))
        den += math.sqrt(float((w0**2).sum()))
    if den == 0.0:
        raise ZeroDivisionError("lazy ratio undefined: init weights have zero norm")
    return num / den


def sgd_train(net, dataset, hyper, epoch_callback=None):
    """Minibatch SGD on the batch-mean loss, mutating net.weights in place.

    Shuffling is driven entirely by hyper.seed. Records per-epoch full-set
    loss, accuracy, kappa, and wall time; epoch 0 is the pre-training state.
    Raises TrainingDiverged (carrying the partial log) on non-finite loss.
    """
    if dataset.d != net.config.d or dataset.o != net.config.o:
        raise ValueError(
            f"dataset dims ({dataset.d}, {dataset.o}) do not match "
            f"network ({net.config.d}, {net.config.o})"
        )
    xs, ys = dataset.inputs, dataset.labels
    n = dataset.n
    rng = RngStream(hyper.seed)
    log = TrainLog()
    start = time.perf_counter()

    def record(epoch):
        rec = EpochRecord(
            epoch,
            loss_value(net, xs, ys, hyper.loss),
            accuracy(net, xs, ys),
            0.0 if epoch == 0 else lazy_ratio(net),
            time.perf_counter() - start,
        )
        log.records.append(rec)
        if not math.isfinite(rec.loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}", log)
        if epoch_callback is not None:
            epoch_callback(net, rec)
        return rec

    record(0)
    for epoch in range(1, hyper.epochs + 1):
        lr = hyper.effective_lr(epoch)
        perm = rng.generator.permutation(n)
        for lo in range(0, n, hyper.batch_size):
            idx = perm[lo : lo + hyper.batch_size]
            grads = weight_gradients(net, xs[idx], ys[idx], hyper.loss)
            for w, g in zip(net.weights, grads):
                w -= lr * g
        record(epoch)
    return log


# ---------------------------------------------------------------------------
# gradient flow for two-layer scalar networks
# ---------------------------------------------------------------------------


@dataclass
class FlowTrajectory:
    """Euler trajectory snapshots: state at times[k] is (w1[k], a[k]), with
    residuals[k] = y - f(times[k])."""

    times: np.ndarray
    w1: list
    a: list
    residuals: list

    @property
    def residual_norms(self):
        return np.array([math.sqrt(float(r @ r)) for r in self.residuals])


def _check_two_layer_scalar(net):
    if net.config.L != 2 or net.config.o != 1:
        raise ValueError("gradient flow requires a two-layer scalar network")


def _flow_state(w1, a, xs, ys, alpha):
    # forward through the shared batch path so that labels produced by
    # batch_outputs give an exactly-zero residual (same op sequence)
    out, acts, signs = _forward_batch([w1, a[None, :]], alpha, xs)
    return signs[0], acts[1], ys - out[:, 0]


def flow_step(w1, a, xs, ys, alpha, eta):
    """One explicit Euler step of gradient flow on the SUM squared loss
    (1/2) sum_i (f_i - y_i)^2. Returns new (w1, a) without mutating inputs."""
    s, hid, e = _flow_state(w1, a, xs, ys, alpha)
    da = (eta / alpha) * (hid.T @ e)
    dw = (eta / alpha) * (a[:, None] * ((s * e[:, None]).T @ xs))
    return w1 + dw, a + da


def integrate_gradient_flow(net, dataset, t_max, eta=None, snapshot_every=1):
    """Integrate two-layer gradient flow to t_max with fixed Euler steps.

    eta defaults to 1e-3 * alpha^2 / n, which keeps the step well below the
    dynamics rate for the supported init scales. The input net is not
    mutated. Snapshots (including t = 0 and the final step) land every
    snapshot_every steps.
    """
    _check_two_layer_scalar(net)
    if dataset.d != net.config.d or dataset.o != 1:
        raise ValueError("dataset does not match the two-layer scalar network")
    alpha = net.config.alpha
    n = dataset.n
    if eta is None:
        eta = 1e-3 * alpha * alpha / n
    eta = float(eta)
    if not (math.isfinite(eta) and eta > 0):
        raise ValueError(f"eta must be finite and positive, got {eta}")
    if not (math.isfinite(t_max) and t_max > 0):
        raise ValueError(f"t_max must be finite and positive, got {t_max}")
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    steps = max(1, math.ceil(t_max / eta - 1e-12))
    xs = dataset.inputs
    ys = dataset.labels[:, 0]
    w1 = net.weights[0].copy()
    a = net.weights[1][0].copy()
    times = []
    w1_snaps = []
    a_snaps = []
    residuals = []

    def snapshot(k):
        _, _, e = _flow_state(w1, a, xs, ys, alpha)
        if not np.all(np.isfinite(e)):
            raise IntegrationDiverged(f"non-finite residual at step {k}")
        times.append(k * eta)
        w1_snaps.append(w1.copy())
        a_snaps.append(a.copy())
        residuals.append(e)

    snapshot(0)
    for k in range(1, steps + 1):
        w1, a = flow_step(w1, a, xs, ys, alpha, eta)
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(a))):
            raise IntegrationDiverged(f"non-finite weights at step {k}")
        if k % snapshot_every == 0 or k == steps:
            snapshot(k)
    return FlowTrajectory(np.array(times), w1_snaps, a_snaps, residuals)
