"""Statistical validators: positive runs at frozen seeds, negative controls
that must reject, input validation, and false-positive-rate calibration."""

import math

import numpy as np
import pytest

from robustlab.network import NetworkConfig
from robustlab.theory import early_training_radii
from robustlab.validators import (
    make_flow_instance,
    make_movement_instance,
    run_all,
    validate_chi_square_mixture,
    validate_flow_dynamics,
    validate_gram_concentration,
    validate_layer_norm_ratio,
    validate_relu_square_law,
    validate_weight_movement,
)


# ---------------------------------------------------------------------------
# relu square law
# ---------------------------------------------------------------------------


def test_relu_square_law_passes():
    v = validate_relu_square_law(seed=1)
    assert v.passed and v.statistic <= 1.0
    assert v.lemma == "relu-square-law"
    assert v.n_samples == 100_000
    # about half the draws land on the zero atom
    assert abs(v.details["zeros_observed"] / v.n_samples - 0.5) < 0.01
    assert str(v).startswith("PASS relu-square-law")


def test_relu_square_law_negative_control():
    # a reference with no zero atom must be rejected by the count test
    v = validate_relu_square_law(seed=1, mask_prob=1.0)
    assert not v.passed and v.statistic > 1.0
    assert v.details["zeros_reference"] == 0


def test_relu_square_law_sigma_zero():
    # everything sits on the atom; the KS leg degenerates to 0
    v = validate_relu_square_law(n_samples=1000, sigma=0.0, seed=3)
    assert v.passed
    assert v.statistic == pytest.approx(0.01)


def test_relu_square_law_validation():
    with pytest.raises(ValueError):
        validate_relu_square_law(sigma=-1.0)
    with pytest.raises(ValueError):
        validate_relu_square_law(mask_prob=1.5)


# ---------------------------------------------------------------------------
# chi-square mixture
# ---------------------------------------------------------------------------


def test_chi_square_mixture_passes():
    v = validate_chi_square_mixture(q=16, seed=1)
    assert v.passed and v.statistic <= 1.0
    # law of total expectation: E = q/2; sd of the mean is sqrt(5q/4)/sqrt(N)
    se = math.sqrt(5 * 16 / 4.0) / math.sqrt(v.n_samples)
    assert abs(v.details["observed_mean"] - 8.0) < 4 * se
    assert v.details["zeros_observed"] > 0  # the q-fold atom has mass 2^-q


def test_chi_square_mixture_negative_control():
    v = validate_chi_square_mixture(q=16, seed=1, mix_p=0.7)
    assert not v.passed and v.statistic > 1.0


def test_chi_square_mixture_validation():
    with pytest.raises(ValueError):
        validate_chi_square_mixture(q=1)
    with pytest.raises(ValueError):
        validate_chi_square_mixture(q=16, mix_p=1.5)
    with pytest.raises(ValueError):
        validate_chi_square_mixture(q=16, p_dim=0)


# ---------------------------------------------------------------------------
# layer norm ratio
# ---------------------------------------------------------------------------


def test_layer_norm_ratio_passes():
    he = validate_layer_norm_ratio(NetworkConfig.he(d=32, m=128, o=1, L=3), seed=1)
    assert he.passed and he.statistic <= 4.0
    assert he.details["target"] == pytest.approx(1.0)  # m (2/m) / 2
    lecun = validate_layer_norm_ratio(NetworkConfig.lecun(d=32, m=128, o=1, L=3), seed=1)
    assert lecun.passed
    assert lecun.details["target"] == pytest.approx(0.5)  # m (1/m) / 2


def test_layer_norm_ratio_negative_control():
    # doubling the draw std quadruples the mean while the target stays put
    v = validate_layer_norm_ratio(NetworkConfig.he(d=32, m=128, o=1, L=3), seed=1, std_scale=2.0)
    assert not v.passed and v.statistic > 4.0


def test_layer_norm_ratio_requires_hidden_pair():
    with pytest.raises(ValueError):
        validate_layer_norm_ratio(NetworkConfig.he(d=32, m=128, o=1, L=2), seed=1)


# ---------------------------------------------------------------------------
# flow dynamics
# ---------------------------------------------------------------------------


def test_flow_dynamics_passes():
    net, data = make_flow_instance(seed=1)
    v = validate_flow_dynamics(net, data)
    assert v.passed
    assert v.statistic < 1e-4  # Euler error at the default eta is tiny


def test_flow_dynamics_negative_control():
    # for this parameterization the h term carries almost all of df/dt, so
    # predicting from g alone misses by orders of magnitude
    net, data = make_flow_instance(seed=1)
    v = validate_flow_dynamics(net, data, terms=("g",))
    assert not v.passed and v.statistic > 1.0


def test_flow_dynamics_first_order_in_eta():
    net, data = make_flow_instance(seed=1)
    base = 1e-4 * net.config.alpha**2 / data.n
    s1 = validate_flow_dynamics(net, data, eta=base).statistic
    s2 = validate_flow_dynamics(net, data, eta=base / 2.0).statistic
    assert 1.5 < s1 / s2 < 2.5


def test_flow_dynamics_multi_step():
    net, data = make_flow_instance(seed=1)
    v = validate_flow_dynamics(net, data, n_steps=5)
    assert v.passed and len(v.details["errors"]) == 5


def test_flow_dynamics_validation():
    net, data = make_flow_instance(seed=1)
    with pytest.raises(ValueError):
        validate_flow_dynamics(net, data, terms=())
    with pytest.raises(ValueError):
        validate_flow_dynamics(net, data, terms=("h", "x"))


# ---------------------------------------------------------------------------
# weight movement
# ---------------------------------------------------------------------------


def test_weight_movement_passes():
    net, data, radii, t_end = make_movement_instance(seed=1)
    v = validate_weight_movement(net, data, radii, t_end)
    assert v.passed
    # the residual leg is deterministically capped: decay never beats zero,
    # and t_end <= 0.5 ln(1.1)/lambda0 keeps the demanded factor below slack
    assert v.statistic <= 1.1**-0.5 * (1.0 + 1e-9)
    assert set(v.details["worst_by_check"]) == {"hidden-rows", "outputs", "residual"}


def test_weight_movement_trivial_horizon():
    net, data, radii, _ = make_movement_instance(seed=1)
    v = validate_weight_movement(net, data, radii, 0.0)
    assert v.passed and v.statistic == 0.0 and v.n_samples == 0


def test_weight_movement_negative_control():
    # inflating lambda0 demands a residual decay the flow cannot deliver
    net, data, radii, t_end = make_movement_instance(seed=1)
    bad = early_training_radii(net.config, radii.lambda0 * 50.0, radii.n, radii.residual0)
    v = validate_weight_movement(net, data, bad, min(t_end, 0.5 * bad.t_star))
    assert not v.passed


def test_weight_movement_validation():
    net, data, radii, t_end = make_movement_instance(seed=1)
    with pytest.raises(ValueError):
        validate_weight_movement(net, data, radii, t_end, slack=0.5)
    with pytest.raises(ValueError):
        validate_weight_movement(net, data, radii, radii.t_star * 2.0)
    with pytest.raises(ValueError):
        validate_weight_movement(net, data, radii, -1.0)
    vacuous = early_training_radii(
        NetworkConfig.custom(8, 2048, 1, 2, (0.01, 0.01), alpha=0.01), radii.lambda0, radii.n, radii.residual0
    )
    with pytest.raises(ValueError, match="vacuous"):
        validate_weight_movement(net, data, vacuous, 0.1)


# ---------------------------------------------------------------------------
# gram concentration
# ---------------------------------------------------------------------------


def test_gram_concentration_passes():
    v = validate_gram_concentration(seed=1)
    assert v.passed
    assert v.statistic == 0.0  # every (width, seed) trial holds
    assert v.n_samples == 40


def test_gram_concentration_negative_control():
    # dropping the inner-product factor shifts the limit kernel
    v = validate_gram_concentration(seed=1, kernel="angle")
    assert not v.passed


def test_gram_concentration_validation():
    with pytest.raises(ValueError):
        validate_gram_concentration(kernel="bogus")
    with pytest.raises(ValueError):
        validate_gram_concentration(
            seed=1, config_family=lambda m: NetworkConfig.he(d=8, m=m, o=1, L=2)
        )


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


def test_run_all_order_and_verdicts():
    verdicts = run_all(seed=1)
    names = [v.lemma for v in verdicts]
    assert names == [
        "relu-square-law",
        "chi-square-mixture",
        "layer-norm-ratio",
        "flow-dynamics",
        "weight-movement",
        "gram-concentration",
    ]
    assert all(v.passed for v in verdicts)
    for v in verdicts:
        assert v.passed == (v.statistic <= v.threshold)


def test_false_positive_rate_calibration():
    # the distribution-level validators run at alpha = 0.01 per leg; across
    # frozen seeds the rejection count must stay near that rate
    relu_fails = sum(
        not validate_relu_square_law(n_samples=50_000, seed=s).passed for s in range(40)
    )
    assert relu_fails <= 4
    chi_fails = sum(
        not validate_chi_square_mixture(q=16, n_samples=50_000, seed=s).passed for s in range(25)
    )
    assert chi_fails <= 3
