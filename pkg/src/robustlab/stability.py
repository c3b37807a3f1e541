"""Monte-Carlo estimator of average robustness.

The target quantity is E ||grad f(x)^T (x - xhat)||_2 with x drawn from the
dataset and xhat uniform in the ball of radius eps around x. The gradient is
taken at the unperturbed x (sign masks frozen from its forward pass), so each
sample is a Jacobian-vector product and the estimate is exactly linear in
eps for a fixed stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import RngStream, sample_in_ball
from .network import forward, input_jvp, jvp_many

__all__ = ["StabilityConfig", "StabilityEstimate", "perturbation_stability", "gradient_drift"]


@dataclass(frozen=True)
class StabilityConfig:
    eps: float = 0.1
    n_points: int = 512
    n_dirs: int = 16
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be finite and positive, got {self.eps}")
        if self.n_points < 1 or self.n_dirs < 1:
            raise ValueError("n_points and n_dirs must be >= 1")


@dataclass(frozen=True)
class StabilityEstimate:
    mean: float
    std_error: float
    n_total: int


def perturbation_stability(net, dataset, cfg):
    """Estimate average robustness over n_points dataset points times n_dirs
    ball perturbations each. Points are drawn without replacement; both the
    point choice and the perturbations are functions of cfg.seed alone."""
    if dataset.d != net.config.d:
        raise ValueError(f"dataset d={dataset.d} does not match network d={net.config.d}")
    if cfg.n_points > dataset.n:
        raise ValueError(f"n_points={cfg.n_points} exceeds dataset size {dataset.n}")
    rng = RngStream(cfg.seed)
    pick = rng.substream(0).generator.choice(dataset.n, size=cfg.n_points, replace=False)
    dir_rng = rng.substream(1)
    values = np.empty(cfg.n_points * cfg.n_dirs)
    deltas = np.empty((cfg.n_dirs, net.config.d))
    for i, idx in enumerate(pick):
        x = dataset.inputs[idx]
        trace = forward(net, x)
        for j in range(cfg.n_dirs):
            deltas[j] = x - sample_in_ball(x, cfg.eps, dir_rng)
        out = jvp_many(net, trace, deltas)
        values[i * cfg.n_dirs : (i + 1) * cfg.n_dirs] = np.sqrt((out**2).sum(axis=1))
    n_total = values.size
    mean = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(n_total)) if n_total > 1 else 0.0
    return StabilityEstimate(mean, std_error, n_total)


def gradient_drift(net, dataset, n_points, seed=0):
    """Mean ||J_trained(x) u - J_init(x) u||_2 over sampled points x and a
    random unit direction u per point, where J_init is the Jacobian of the
    network at its init weights. Zero for an untrained network."""
    if dataset.d != net.config.d:
        raise ValueError(f"dataset d={dataset.d} does not match network d={net.config.d}")
    if n_points > dataset.n or n_points < 1:
        raise ValueError(f"n_points must be in [1, {dataset.n}], got {n_points}")
    rng = RngStream(seed)
    pick = rng.substream(0).generator.choice(dataset.n, size=n_points, replace=False)
    u_rng = rng.substream(1)
    init_net = net.at_init()
    total = 0.0
    for idx in pick:
        x = dataset.inputs[idx]
        u = u_rng.generator.standard_normal(dataset.d)
        u /= math.sqrt(float(u @ u))
        v_trained = input_jvp(net, forward(net, x), u)
        v_init = input_jvp(init_net, forward(init_net, x), u)
        diff = v_trained - v_init
        total += math.sqrt(float(diff @ diff))
    return total / n_points
