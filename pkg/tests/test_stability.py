"""Perturbation-stability estimator tests, including an exact replay oracle."""

import math

import numpy as np
import pytest

from robustlab.data import generate_sphere_dataset
from robustlab.network import Network, NetworkConfig, forward, init_network
from robustlab.numerics import RngStream, sample_in_ball
from robustlab.stability import (
    StabilityConfig,
    StabilityEstimate,
    gradient_drift,
    perturbation_stability,
)

from test_network import explicit_jacobian


def sphere_data(n=64, d=6, seed=0):
    return generate_sphere_dataset(n, d, "two-class-halfspace", RngStream(seed))


def make_net(d=6, m=10, o=2, L=3, seed=0):
    return init_network(NetworkConfig.he(d=d, m=m, o=o, L=L), RngStream(seed))


def linear_relu_net(d=6, o=2, k=5, alpha=2.0, seed=1):
    """A relu network computing exactly f(x) = C x via mirrored hidden rows:
    relu(z) - relu(-z) = z."""
    rng = RngStream(seed)
    mmat = rng.generator.standard_normal((k, d))
    pmat = rng.generator.standard_normal((o, k))
    cfg = NetworkConfig.custom(d=d, m=2 * k, o=o, L=2, betas=(1.0, 1.0), alpha=alpha)
    w1 = np.vstack([mmat, -mmat])
    w2 = np.hstack([pmat, -pmat])
    ws = [w1, w2]
    net = Network(cfg, [w.copy() for w in ws], tuple(w.copy() for w in ws))
    return net, (pmat @ mmat) / alpha


def replay_values(net_apply, dataset, cfg):
    """Re-derive every Monte-Carlo sample by replaying the estimator's stream
    layout: point picks on substream 0, ball draws consumed in order on
    substream 1."""
    rng = RngStream(cfg.seed)
    pick = rng.substream(0).generator.choice(dataset.n, size=cfg.n_points, replace=False)
    dir_rng = rng.substream(1)
    vals = []
    for idx in pick:
        x = dataset.inputs[idx]
        for _ in range(cfg.n_dirs):
            delta = x - sample_in_ball(x, cfg.eps, dir_rng)
            vals.append(net_apply(x, delta))
    return np.array(vals)


# ---------------------------------------------------------------------------


def test_zero_last_layer_gives_zero():
    net = make_net()
    net.weights[-1][:] = 0.0
    est = perturbation_stability(net, sphere_data(), StabilityConfig(n_points=8, n_dirs=4))
    assert est.mean == 0.0
    assert est.std_error == 0.0


def test_estimate_linear_in_eps():
    net = make_net(seed=2)
    data = sphere_data(seed=3)
    base = StabilityConfig(eps=0.05, n_points=16, n_dirs=8, seed=4)
    doubled = StabilityConfig(eps=0.1, n_points=16, n_dirs=8, seed=4)
    e1 = perturbation_stability(net, data, base)
    e2 = perturbation_stability(net, data, doubled)
    assert math.isclose(e2.mean, 2.0 * e1.mean, rel_tol=1e-12)
    assert math.isclose(e2.std_error, 2.0 * e1.std_error, rel_tol=1e-12)


def test_linear_network_replay_oracle():
    # for f(x) = Cx each sample is exactly ||C delta||, so the estimate must
    # reproduce the replayed stream to float accuracy
    net, cmat = linear_relu_net()
    data = sphere_data(n=40, seed=5)
    cfg = StabilityConfig(eps=0.2, n_points=20, n_dirs=6, seed=6)
    est = perturbation_stability(net, data, cfg)
    vals = replay_values(lambda x, delta: np.linalg.norm(cmat @ delta), data, cfg)
    assert math.isclose(est.mean, vals.mean(), rel_tol=1e-12)
    assert math.isclose(est.std_error, vals.std(ddof=1) / math.sqrt(vals.size), rel_tol=1e-12)
    assert est.n_total == vals.size == 120


def test_general_network_replay_oracle():
    # replay with an independent jacobian implementation (explicit matrix)
    net = make_net(d=5, m=9, o=3, L=3, seed=7)
    data = sphere_data(n=30, d=5, seed=8)
    cfg = StabilityConfig(eps=0.1, n_points=10, n_dirs=5, seed=9)
    est = perturbation_stability(net, data, cfg)

    def apply(x, delta):
        j = explicit_jacobian(net, forward(net, x))
        return np.linalg.norm(j @ delta)

    vals = replay_values(apply, data, cfg)
    assert math.isclose(est.mean, vals.mean(), rel_tol=1e-12)


def test_mean_bounded_by_jacobian_norm():
    # ||J delta|| <= ||J||_F ||delta|| and ||delta|| <= eps
    net = make_net(seed=10)
    data = sphere_data(seed=11)
    cfg = StabilityConfig(eps=0.3, n_points=32, n_dirs=4, seed=12)
    est = perturbation_stability(net, data, cfg)
    jmax = max(
        np.linalg.norm(explicit_jacobian(net, forward(net, x))) for x in data.inputs
    )
    assert est.mean <= cfg.eps * jmax * (1 + 1e-12)


def test_deterministic_given_seed():
    net = make_net(seed=13)
    data = sphere_data(seed=14)
    cfg = StabilityConfig(eps=0.1, n_points=16, n_dirs=8, seed=15)
    e1 = perturbation_stability(net, data, cfg)
    e2 = perturbation_stability(net, data, cfg)
    assert isinstance(e1, StabilityEstimate)
    assert (e1.mean, e1.std_error, e1.n_total) == (e2.mean, e2.std_error, e2.n_total)


def test_config_validation():
    with pytest.raises(ValueError):
        StabilityConfig(eps=0.0)
    with pytest.raises(ValueError):
        StabilityConfig(n_points=0)
    net = make_net()
    small = sphere_data(n=4)
    with pytest.raises(ValueError):
        perturbation_stability(net, small, StabilityConfig(n_points=8))
    wrong_d = sphere_data(d=5)
    with pytest.raises(ValueError):
        perturbation_stability(net, wrong_d, StabilityConfig(n_points=4))


# ---------------------------------------------------------------------------
# gradient drift
# ---------------------------------------------------------------------------


def test_drift_zero_untrained():
    net = make_net(seed=16)
    assert gradient_drift(net, sphere_data(seed=17), 16, seed=0) == 0.0


def test_drift_positive_after_update():
    net = make_net(seed=18)
    data = sphere_data(seed=19)
    net.weights[-1][:] = 2.0 * net.weights[-1]
    # J = 2 J0, so drift = mean ||J0 u|| > 0
    drift = gradient_drift(net, data, 16, seed=0)
    assert drift > 0.0
    init = net.at_init()
    ref = gradient_drift(net, data, 16, seed=0)
    assert math.isclose(drift, ref, rel_tol=1e-15)
    assert gradient_drift(init, data, 16, seed=0) == 0.0


def test_drift_validation():
    net = make_net()
    data = sphere_data(n=8)
    with pytest.raises(ValueError):
        gradient_drift(net, data, 9)
    with pytest.raises(ValueError):
        gradient_drift(net, data, 0)
