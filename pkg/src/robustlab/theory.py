"""Closed-form bound calculators and two-layer gram-matrix analysis.

The depth-width stability bound for lazy inits is, per unit perturbation
radius,

    (sqrt(pi L^3 m^2 b1^2 bL^2 / 8) exp(-m/L^3) + 1) * gamma^(L-2),

with gamma = beta / sqrt(2/m) the hidden-layer gain. gamma is exactly 1 for
he and ntk and exactly sqrt(2)/2 for lecun, which is what drives the
depth-robustness phase transition. Two-layer non-lazy nets get the separate
decreasing-in-width bound nonlazy_bound.

The gram matrices describe full-batch dynamics of a two-layer scalar net
under the sum squared loss: df/dt = (H(t) + G(t))(y - f). H_inf is the
m -> infinity limit of H at init. All entries carry the 1/alpha^2 scale of
the parameterization.

early_training_radii evaluates the movement radii and time horizons
literally from (config, lambda0, n, residual0); the caller chooses lambda0.
Note that feeding lambda_min(H_inf) with its m beta2^2/alpha^2 prefactor
makes r_a negative for every dataset (the subtraction term then always
dominates); the radii are only informative with the prefactor-free kernel
eigenvalue, i.e. lambda_min(arccos_kernel), and a large output scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import sym_eigenvalues

__all__ = [
    "gamma",
    "StabilityBounds",
    "stability_bound",
    "nonlazy_bound",
    "RegimeReport",
    "classify_regime",
    "arccos_kernel",
    "gram_h_infinity",
    "gram_h",
    "gram_h_hat",
    "gram_g",
    "GramSet",
    "build_gram_set",
    "EarlyTrainingRadii",
    "early_training_radii",
]

SQRT_HALF = math.sqrt(2.0) / 2.0


def gamma(config):
    """Hidden-layer gain beta / sqrt(2/m). Exactly 1 for he and ntk and
    exactly sqrt(2)/2 for lecun; for custom configs it is computed from the
    first post-input layer std."""
    if config.scheme in ("he", "ntk"):
        return 1.0
    if config.scheme == "lecun":
        return SQRT_HALF
    if config.scheme == "nonlazy":
        return float(config.m) ** (0.5 - config.c) / math.sqrt(2.0)
    return config.betas[1] / math.sqrt(2.0 / config.m)


@dataclass(frozen=True)
class StabilityBounds:
    """Per-unit-radius stability bounds for one architecture.

    general uses the config's actual (beta_1, beta_L, gamma); specialized is
    the per-scheme closed form (equal to general for the named lazy schemes).
    The two comparators are reference bounds with polynomial respectively
    exponential depth growth."""

    gamma: float
    general: float
    specialized: float
    depth_poly_comparator: float
    depth_exp_comparator: float


def stability_bound(config):
    """Evaluate the depth-width bound and its comparators for a config."""
    L, m, d, o = config.L, config.m, config.d, config.o
    b1, bL = config.betas[0], config.betas[-1]
    gam = gamma(config)
    decay = math.exp(-m / L**3)
    general = (math.sqrt(math.pi * L**3 * m * m * b1 * b1 * bL * bL / 8.0) * decay + 1.0) * gam ** (L - 2)
    if config.scheme == "lecun":
        specialized = (math.sqrt(math.pi * L**3 * m / (8.0 * d)) * decay + 1.0) * SQRT_HALF ** (L - 2)
    elif config.scheme == "he":
        specialized = math.sqrt(math.pi * L**3 * m / (2.0 * d)) * decay + 1.0
    elif config.scheme == "ntk":
        specialized = math.sqrt(math.pi * L**3 * m / (4.0 * o)) * decay + 1.0
    else:
        specialized = general
    poly = L**2 * m ** (1.0 / 3.0) * math.sqrt(math.log(m)) + math.sqrt(m * L)
    expo = 2.0 ** ((3 * L - 5) / 2.0) * math.sqrt(m)
    return StabilityBounds(gam, general, specialized, poly, expo)


def nonlazy_bound(n, m, c):
    """Two-layer non-lazy stability bound per unit radius (natural log,
    constant 1): ((sqrt(n ln m) + n)/m^(c-1)) (1/sqrt(n^3 m) + 1/m^(c-0.5))."""
    if c < 1.5:
        raise ValueError(f"bound requires c >= 1.5, got {c}")
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n} m={m}")
    lead = (math.sqrt(n * math.log(m)) + n) / m ** (c - 1.0)
    return lead * (1.0 / math.sqrt(n**3 * m) + 1.0 / m ** (c - 0.5))


@dataclass(frozen=True)
class RegimeReport:
    rho: float
    label: str  # "lazy" | "non-lazy-candidate" | "indeterminate"


def classify_regime(config):
    """Sufficient-condition check for leaving the lazy regime.

    rho = alpha / (m^(3/2) sum_l beta_l)^L. rho >= 10 flags a non-lazy
    candidate, rho <= 1 flags lazy, anything between is indeterminate (the
    condition is sufficient, not sharp)."""
    scale = (config.m**1.5 * sum(config.betas)) ** config.L
    rho = config.alpha / scale
    if rho >= 10.0:
        label = "non-lazy-candidate"
    elif rho <= 1.0:
        label = "lazy"
    else:
        label = "indeterminate"
    return RegimeReport(rho, label)


# ---------------------------------------------------------------------------
# gram matrices of a two-layer scalar network
# ---------------------------------------------------------------------------


def _check_two_layer(net):
    if net.config.L != 2 or net.config.o != 1:
        raise ValueError("gram matrices are defined for two-layer scalar networks")


def _unit_inputs(dataset, tol=1e-8):
    err = dataset.max_norm_error()
    if err > tol:
        raise ValueError(f"inputs must be unit-norm within {tol}, max error {err:.3e}")
    return dataset.inputs


def _symmetrize(m):
    return 0.5 * (m + m.T)


def arccos_kernel(dataset):
    """Normalized limit kernel K_ij = x_i.x_j (pi - arccos(x_i.x_j)) / (2 pi)
    for unit-norm inputs. gram_h_infinity is this kernel times its scale."""
    x = _unit_inputs(dataset)
    k = np.clip(_symmetrize(x @ x.T), -1.0, 1.0)
    return _symmetrize(k * (math.pi - np.arccos(k)) / (2.0 * math.pi))


def gram_h_infinity(dataset, config):
    """Infinite-width limit of H at init: (m beta2^2 / alpha^2) * arccos_kernel."""
    if config.L != 2:
        raise ValueError("gram_h_infinity is defined for two-layer configs")
    scale = config.m * config.betas[1] ** 2 / config.alpha**2
    return scale * arccos_kernel(dataset)


def gram_h(net, dataset):
    """H_ij(t) = (1/alpha^2) sum_r a_r^2 x_i.x_j 1{w_r.x_i >= 0} 1{w_r.x_j >= 0}."""
    _check_two_layer(net)
    x = dataset.inputs
    s = (net.weights[0] @ x.T) >= 0.0
    b = s * net.weights[1][0][:, None]
    return _symmetrize((x @ x.T) * (b.T @ b)) / net.config.alpha**2


def gram_h_hat(net, dataset):
    """H with current a_r but the sign pattern of the init weights w_r(0)."""
    _check_two_layer(net)
    x = dataset.inputs
    s = (net.init_weights[0] @ x.T) >= 0.0
    b = s * net.weights[1][0][:, None]
    return _symmetrize((x @ x.T) * (b.T @ b)) / net.config.alpha**2


def gram_g(net, dataset):
    """G_ij(t) = (1/alpha^2) sum_r relu(w_r.x_i) relu(w_r.x_j)."""
    _check_two_layer(net)
    z = net.weights[0] @ dataset.inputs.T
    phi = z * (z >= 0.0)
    return _symmetrize(phi.T @ phi) / net.config.alpha**2


@dataclass(frozen=True)
class GramSet:
    h_inf: np.ndarray
    h: np.ndarray
    h_hat: np.ndarray
    g: np.ndarray
    lambda0: float


def build_gram_set(net, dataset):
    """All four gram matrices plus lambda0 = lambda_min(H_inf). A degenerate
    limit kernel (lambda0 <= 1e-10) raises instead of proceeding, since all
    downstream quantities divide by it."""
    h_inf = gram_h_infinity(dataset, net.config)
    lam = float(sym_eigenvalues(h_inf)[0])
    if lam <= 1e-10:
        raise ValueError(f"degenerate limit kernel: lambda0 = {lam:.3e}")
    return GramSet(h_inf, gram_h(net, dataset), gram_h_hat(net, dataset), gram_g(net, dataset), lam)


# ---------------------------------------------------------------------------
# early-training movement radii and time horizons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EarlyTrainingRadii:
    """Literal evaluation of the movement radii (r_a for output weights, r_w
    for hidden rows), the horizons t1_star/t2_star at which the trajectory
    bounds first reach those radii, and the trajectory bounds themselves.
    valid is False when a radius is non-positive (bound vacuous)."""

    r_a: float
    r_w: float
    t1_star: float
    t2_star: float
    lambda0: float
    residual0: float
    n: int
    m: int
    alpha: float
    beta1: float
    beta2: float
    valid: bool

    @property
    def t_star(self):
        return min(self.t1_star, self.t2_star)

    def _envelope(self, t):
        return (
            2.0
            * math.sqrt(self.n)
            / (self.lambda0 * self.alpha)
            * self.residual0
            * (1.0 - math.exp(-self.lambda0 * t / 2.0))
        )

    def w_bound(self, t):
        """Upper bound on max_r ||w_r(t) - w_r(0)||_2."""
        return (math.sqrt(self.n) * self.beta2 + self.r_a) * self._envelope(t)

    def a_bound(self, t):
        """Upper bound on max_r |a_r(t) - a_r(0)|."""
        term = 3.0 * self.beta1 * math.sqrt(math.log(self.m * self.n**2)) + self.r_w
        return term * self._envelope(t)


def early_training_radii(config, lambda0, n, residual0):
    """Evaluate the radii/horizon formulas for a two-layer config.

    lambda0 is caller-supplied (see the module docstring for why the choice
    matters). Horizons whose log argument is non-positive are +inf."""
    if config.L != 2:
        raise ValueError("early_training_radii is defined for two-layer configs")
    if not (math.isfinite(lambda0) and lambda0 > 0):
        raise ValueError(f"lambda0 must be finite and positive, got {lambda0}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not (math.isfinite(residual0) and residual0 > 0):
        raise ValueError(f"residual0 must be finite and positive, got {residual0}")
    alpha = config.alpha
    m = config.m
    b1, b2 = config.betas[0], config.betas[1]
    r_a = (alpha / n) * math.sqrt(lambda0 / (8.0 * n * m)) - math.sqrt(2.0 / math.pi) * b2
    # the quadratic r_a (r_a + sqrt(8/pi) b2) + b2^2 has negative discriminant,
    # so the r_w denominator is always positive
    q = r_a * (r_a + math.sqrt(8.0 / math.pi) * b2) + b2 * b2
    r_w = alpha**2 * lambda0 * math.sqrt(2.0 * math.pi) * b1 / (32.0 * n**3 * m * q)

    def horizon(radius, companion):
        z = radius * lambda0 * alpha / (2.0 * math.sqrt(n) * companion * residual0)
        if 1.0 - z <= 0.0:
            return math.inf
        return -(2.0 / lambda0) * math.log(1.0 - z)

    t1 = horizon(r_w, math.sqrt(n) * b2 + r_a)
    t2 = horizon(r_a, 3.0 * b1 * math.sqrt(math.log(m * n**2)) + r_w)
    return EarlyTrainingRadii(
        r_a, r_w, t1, t2, float(lambda0), float(residual0), int(n), m, alpha, b1, b2,
        valid=r_a > 0.0 and r_w > 0.0,
    )
