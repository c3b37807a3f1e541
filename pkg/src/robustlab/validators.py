"""Statistical validators for the distributional facts behind the bounds.

Each validator draws fresh Monte Carlo evidence for one lemma-level claim
and returns a LemmaVerdict with a scalar statistic and a fixed threshold.
Statistics are normalized so that the threshold is 1.0 wherever a
distribution-level test (KS, Fisher) supplies its own critical value, and
an explicit count otherwise. Every validator has a knob that turns it into
a negative control (a deliberately wrong null) so the test suite can check
that the machinery actually rejects.

Conventions: all draws come from Philox substreams of the given seed, so
verdicts are reproducible; "passed" means the evidence is consistent with
the claim at the validator's significance level, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import fisher_exact

from .data import generate_sphere_dataset
from .network import Network, NetworkConfig, batch_outputs, init_network
from .numerics import RngStream, ks_two_sample, spectral_norm_sym, sym_eigenvalues
from .theory import arccos_kernel, early_training_radii, gram_g, gram_h
from .training import flow_step, integrate_gradient_flow

__all__ = [
    "LemmaVerdict",
    "validate_relu_square_law",
    "validate_chi_square_mixture",
    "validate_layer_norm_ratio",
    "validate_flow_dynamics",
    "validate_weight_movement",
    "make_movement_instance",
    "make_flow_instance",
    "validate_gram_concentration",
    "run_all",
]


@dataclass(frozen=True)
class LemmaVerdict:
    """Outcome of one statistical check. Invariant: passed iff
    statistic <= threshold (smaller statistics are always better)."""

    lemma: str
    statistic: float
    threshold: float
    passed: bool
    n_samples: int
    details: dict = field(default_factory=dict)

    def __str__(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.lemma}: statistic {self.statistic:.4g} vs threshold {self.threshold:.4g} (n={self.n_samples})"


def validate_relu_square_law(n_samples=100_000, sigma=1.0, alpha=0.01, seed=0, mask_prob=0.5):
    """Check that relu(g)^2 for g ~ N(0, sigma^2) is the half-half mixture
    of a point mass at zero and sigma^2 chi^2_1.

    Two pieces of evidence: a Fisher exact test on the zero-atom counts and
    a two-sample KS test on the strictly positive parts against a reference
    sample Bernoulli(mask_prob) * (sigma Z)^2. The law corresponds to
    mask_prob = 0.5; mask_prob = 1.0 is the negative control (no zero
    atom in the reference). The combined statistic is
    max(ks / ks_critical, alpha / fisher_p) with threshold 1.0.
    """
    if sigma < 0 or not (0.0 <= mask_prob <= 1.0):
        raise ValueError("need sigma >= 0 and mask_prob in [0, 1]")
    rng = RngStream(seed, key=(101,))
    g = sigma * rng.substream(0).generator.standard_normal(n_samples)
    obs = np.square(np.maximum(g, 0.0))
    z = sigma * rng.substream(1).generator.standard_normal(n_samples)
    keep = rng.substream(2).generator.random(n_samples) < mask_prob
    ref = keep * np.square(z)

    zeros_obs = int(np.count_nonzero(obs == 0.0))
    zeros_ref = int(np.count_nonzero(ref == 0.0))
    table = [[zeros_obs, n_samples - zeros_obs], [zeros_ref, n_samples - zeros_ref]]
    p_zero = float(fisher_exact(table)[1])

    pos_obs = obs[obs > 0.0]
    pos_ref = ref[ref > 0.0]
    details = {"p_zero": p_zero, "zeros_observed": zeros_obs, "zeros_reference": zeros_ref}
    if pos_obs.size == 0 and pos_ref.size == 0:
        ks_ratio = 0.0  # degenerate sigma = 0 case: everything sits on the atom
    elif pos_obs.size == 0 or pos_ref.size == 0:
        ks_ratio = math.inf
    else:
        ks = ks_two_sample(pos_obs, pos_ref, alpha=alpha)
        ks_ratio = ks.statistic / ks.critical
        details.update(ks_statistic=ks.statistic, ks_critical=ks.critical)
    statistic = max(ks_ratio, alpha / max(p_zero, 1e-300))
    return LemmaVerdict("relu-square-law", statistic, 1.0, statistic <= 1.0, n_samples, details)


def validate_chi_square_mixture(q, n_samples=100_000, alpha=0.01, mix_p=0.5, seed=0, p_dim=16):
    """Check that q ||relu(W h)||^2 / (2 ||h||^2) with W a q x p matrix of
    N(0, 2/q) entries follows chi^2 with a Binomial(q, 1/2) random degree.

    W is drawn honestly (full matrices, chunked) rather than through the
    Gaussian projection shortcut, since the projection is part of the claim.
    The reference mixture uses Binomial(q, mix_p); mix_p = 0.5 is the law,
    anything else is a negative control. KS ratio against threshold 1.0.
    """
    if q < 2 or p_dim < 1:
        raise ValueError("need q >= 2 and p_dim >= 1")
    if not (0.0 < mix_p < 1.0 or mix_p in (0.0, 1.0)):
        raise ValueError(f"mix_p must be in [0, 1], got {mix_p}")
    rng = RngStream(seed, key=(102,))
    h = rng.substream(0).generator.standard_normal(p_dim)
    h_sq = float(h @ h)
    if h_sq == 0.0:
        raise ArithmeticError("degenerate zero direction")

    gen_w = rng.substream(1).generator
    std = math.sqrt(2.0 / q)
    vals = np.empty(n_samples)
    done = 0
    chunk = max(1, 4_000_000 // (q * p_dim))
    while done < n_samples:
        b = min(chunk, n_samples - done)
        w = gen_w.normal(0.0, std, size=(b, q, p_dim))
        phi = np.maximum(w @ h, 0.0)
        vals[done : done + b] = np.einsum("bq,bq->b", phi, phi)
        done += b
    obs = q * vals / (2.0 * h_sq)

    k = rng.substream(2).generator.binomial(q, mix_p, size=n_samples)
    # gamma(k/2, scale=2) is chi^2_k and returns exactly 0.0 at k = 0,
    # which preserves the atom of the mixture
    ref = rng.substream(3).generator.gamma(k / 2.0, 2.0)
    ks = ks_two_sample(obs, ref, alpha=alpha)
    statistic = ks.statistic / ks.critical
    details = {
        "q": q,
        "mix_p": mix_p,
        "ks_statistic": ks.statistic,
        "ks_critical": ks.critical,
        "observed_mean": float(obs.mean()),  # law of total expectation gives q/2
        "zeros_observed": int(np.count_nonzero(obs == 0.0)),
        "zeros_reference": int(np.count_nonzero(ref == 0.0)),
    }
    return LemmaVerdict("chi-square-mixture", statistic, 1.0, statistic <= 1.0, n_samples, details)


def validate_layer_norm_ratio(config, n_samples=2000, seed=0, std_scale=1.0):
    """Check the layer norm propagation mean E ||relu(W h)||^2 / ||h||^2 =
    m beta^2 / 2 (the squared layer gain) for a width-m hidden layer.

    W is m x m with std std_scale * beta where beta is the config's first
    hidden-to-hidden std; std_scale = 1 tests the law, any other value is a
    negative control since the target stays at m beta^2 / 2. The statistic
    is the deviation of the sample mean from the target in standard errors,
    threshold 4.
    """
    if config.L < 3:
        raise ValueError("the ratio law concerns hidden-to-hidden layers; need L >= 3")
    m = config.m
    beta = config.betas[1]
    target = m * beta * beta / 2.0
    rng = RngStream(seed, key=(103,))
    h = rng.substream(0).generator.standard_normal(m)
    h /= math.sqrt(float(h @ h))
    gen = rng.substream(1).generator
    ratios = np.empty(n_samples)
    done = 0
    chunk = max(1, 4_000_000 // (m * m))
    while done < n_samples:
        b = min(chunk, n_samples - done)
        w = gen.normal(0.0, std_scale * beta, size=(b, m, m))
        phi = np.maximum(w @ h, 0.0)
        ratios[done : done + b] = np.einsum("bq,bq->b", phi, phi)
        done += b
    mean = float(ratios.mean())
    stderr = float(ratios.std(ddof=1)) / math.sqrt(n_samples)
    if stderr == 0.0:
        statistic = 0.0 if mean == target else math.inf
    else:
        statistic = abs(mean - target) / stderr
    details = {"mean": mean, "target": target, "stderr": stderr, "width": m}
    return LemmaVerdict("layer-norm-ratio", statistic, 4.0, statistic <= 4.0, n_samples, details)


def _as_network(config, w1, a, init_weights):
    return Network(config, [w1, a.reshape(1, -1)], init_weights)


def validate_flow_dynamics(net, dataset, n_steps=1, eta=None, terms=("h", "g")):
    """Check that two-layer gradient flow outputs obey df/dt = (H + G)(y - f).

    Takes n_steps explicit Euler steps and compares the finite-difference
    derivative of f against the gram prediction built from the requested
    terms, relative to max(prediction norm, 1e-12). terms = ("h", "g")
    tests the identity; dropping a term is a negative control. Statistic is
    the worst relative error across steps, threshold 0.05 (loose enough for
    the Euler discretization error at the default eta = 1e-4 alpha^2 / n,
    far below the gap left by a missing term).
    """
    if not terms or any(t not in ("h", "g") for t in terms):
        raise ValueError(f"terms must be a non-empty subset of ('h', 'g'), got {terms!r}")
    config = net.config
    if config.L != 2 or config.o != 1:
        raise ValueError("flow dynamics are defined for two-layer scalar networks")
    alpha = config.alpha
    xs, ys = dataset.inputs, dataset.labels[:, 0]
    if eta is None:
        eta = 1e-4 * alpha * alpha / dataset.n
    w1 = net.weights[0].copy()
    a = net.weights[1][0].copy()
    errors = []
    for _ in range(n_steps):
        cur = _as_network(config, w1, a, net.init_weights)
        f = batch_outputs(cur, xs)[:, 0]
        kernel = np.zeros((dataset.n, dataset.n))
        if "h" in terms:
            kernel = kernel + gram_h(cur, dataset)
        if "g" in terms:
            kernel = kernel + gram_g(cur, dataset)
        predicted = kernel @ (ys - f)
        w1, a = flow_step(w1, a, xs, ys, alpha, eta)
        f_next = batch_outputs(_as_network(config, w1, a, net.init_weights), xs)[:, 0]
        empirical = (f_next - f) / eta
        scale = math.sqrt(float(predicted @ predicted))
        diff = empirical - predicted
        errors.append(math.sqrt(float(diff @ diff)) / max(scale, 1e-12))
    statistic = max(errors)
    details = {"errors": [float(e) for e in errors], "eta": float(eta), "terms": tuple(terms)}
    return LemmaVerdict("flow-dynamics", statistic, 0.05, statistic <= 0.05, n_steps, details)


def validate_weight_movement(net, dataset, radii, t_end, eta=None, slack=1.1):
    """Check the early-training trajectory bounds along an actual flow.

    Integrates gradient flow to t_end <= t_star and verifies, at every
    snapshot t > 0, that max_r ||w_r(t) - w_r(0)|| <= slack * w_bound(t),
    that max_r |a_r(t) - a_r(0)| <= slack * a_bound(t), and that the
    residual norm stays within slack * res0 * exp(-lambda0 t). The statistic
    is the worst bound ratio across snapshots, threshold 1.0. slack absorbs
    both the Euler discretization and the gap between the claimed residual
    rate and the realized one early in training; keep
    t_end <= ln(slack) / lambda0 so the residual check stays meaningful.
    """
    if not radii.valid:
        raise ValueError("movement radii are vacuous (non-positive); nothing to validate")
    if radii.lambda0 <= 0:
        raise ValueError(f"degenerate kernel: lambda0 = {radii.lambda0}")
    if slack < 1.0:
        raise ValueError(f"slack must be >= 1, got {slack}")
    if not (0.0 <= t_end <= radii.t_star):
        raise ValueError(f"t_end must lie in [0, t_star = {radii.t_star}], got {t_end}")
    if t_end == 0.0:
        # no motion yet: every movement is 0, trivially within the bounds
        return LemmaVerdict("weight-movement", 0.0, 1.0, True, 0, {"t_end": 0.0, "steps": 0})
    if eta is None:
        eta = t_end / 256.0
    traj = integrate_gradient_flow(net, dataset, t_end, eta=eta)
    w0, a0 = traj.w1[0], traj.a[0]
    res = traj.residual_norms
    lam = radii.lambda0
    worst = 0.0
    labels = ("hidden-rows", "outputs", "residual")
    worst_by = dict.fromkeys(labels, 0.0)
    for k in range(1, len(traj.times)):
        t = float(traj.times[k])
        w_move = float(np.max(np.linalg.norm(traj.w1[k] - w0, axis=1)))
        a_move = float(np.max(np.abs(traj.a[k] - a0)))
        ratios = (
            w_move / (slack * radii.w_bound(t)),
            a_move / (slack * radii.a_bound(t)),
            float(res[k]) / (slack * res[0] * math.exp(-lam * t)),
        )
        for name, r in zip(labels, ratios):
            worst_by[name] = max(worst_by[name], r)
        worst = max(worst, *ratios)
    details = {"worst_by_check": worst_by, "t_end": float(t_end), "steps": len(traj.times) - 1}
    return LemmaVerdict("weight-movement", worst, 1.0, worst <= 1.0, len(traj.times) - 1, details)


def make_movement_instance(seed=0):
    """Standard instance for validate_weight_movement: a wide two-layer net
    with small init stds and a large output scale, where the movement radii
    are positive.

    lambda0 is the smallest eigenvalue of the normalized limit kernel (the
    prefactor-free choice; see the bound module notes) and t_end is capped
    at 0.5 * ln(1.1) / lambda0 so the residual check stays within the 1.1
    slack even if the realized decay rate is smaller than lambda0 (residual
    norms never increase under the flow, so the check then holds with a
    deterministic margin).
    """
    rng = RngStream(seed, key=(104,))
    config = NetworkConfig.custom(d=8, m=2048, o=1, L=2, betas=(0.01, 0.01), alpha=100.0)
    dataset = generate_sphere_dataset(4, 8, "scalar-regression", rng.substream(0))
    net = init_network(config, rng.substream(1))
    lam = float(sym_eigenvalues(arccos_kernel(dataset))[0])
    e0 = dataset.labels[:, 0] - batch_outputs(net, dataset.inputs)[:, 0]
    res0 = math.sqrt(float(e0 @ e0))
    radii = early_training_radii(config, lam, dataset.n, res0)
    t_end = 0.5 * min(radii.t_star, math.log(1.1) / lam)
    return net, dataset, radii, t_end


def validate_gram_concentration(
    n=4,
    m_list=(2048, 4096),
    config_family=None,
    alpha_scale=10.0,
    n_seeds=20,
    d=16,
    seed=0,
    kernel="arccos",
    beta2=0.01,
):
    """Check that H(0) concentrates around its infinite-width limit.

    For each width and seed, draws a fresh two-layer net and requires both
    ||H(0) - H_inf||_2 <= lambda0 / 4 and lambda_min(H(0)) >= 0.75 lambda0.
    Both sides of each inequality scale as 1/alpha^2, so the check is
    alpha-invariant; alpha is still instantiated inside the claimed regime.
    The regime condition is self-referential when written with the
    prefactored lambda0; solved for alpha it reads
    alpha <= m beta2 lambda_K / (16 n sqrt(ln(2 n^3))) with lambda_K the
    prefactor-free kernel eigenvalue, and alpha_scale is the margin by
    which alpha sits inside it.

    config_family, when given, is a callable m -> NetworkConfig overriding
    the built-in two-layer family (its beta2 and alpha are used as-is).
    kernel = "arccos" compares against the correct limit; "angle" drops the
    inner-product factor from the kernel and is the negative control. The
    statistic is the fraction of (width, seed) trials that fail, threshold
    0.1 (at least 90% must pass).
    """
    if kernel not in ("arccos", "angle"):
        raise ValueError(f"kernel must be 'arccos' or 'angle', got {kernel!r}")
    rng = RngStream(seed, key=(105,))
    dataset = generate_sphere_dataset(n, d, "scalar-regression", rng.substream(0))
    inner = np.clip(dataset.inputs @ dataset.inputs.T, -1.0, 1.0)
    k_true = arccos_kernel(dataset)
    k_used = k_true if kernel == "arccos" else (math.pi - np.arccos(inner)) / (2.0 * math.pi)
    k_used = 0.5 * (k_used + k_used.T)
    lam_true = float(sym_eigenvalues(k_true)[0])
    if lam_true <= 1e-10:
        raise ValueError(f"degenerate limit kernel: lambda_min = {lam_true:.3e}")
    lam_used = float(sym_eigenvalues(k_used)[0])
    fails = 0
    per_width = {}
    for mi, m in enumerate(m_list):
        if config_family is not None:
            config = config_family(m)
            if config.L != 2 or config.o != 1 or config.d != d:
                raise ValueError("config_family must produce two-layer scalar configs of matching input dim")
        else:
            alpha_max = m * beta2 * lam_true / (16.0 * n * math.sqrt(math.log(2.0 * n**3)))
            config = NetworkConfig.custom(d=d, m=m, o=1, L=2, betas=(0.05, beta2), alpha=alpha_max / alpha_scale)
        scale = config.m * config.betas[1] ** 2 / config.alpha**2
        h_inf = scale * k_used
        lam0 = scale * lam_used
        width_fails = 0
        for s in range(n_seeds):
            net = init_network(config, rng.substream(1, mi, s))
            h0 = gram_h(net, dataset)
            ok = (
                spectral_norm_sym(h0 - h_inf) <= lam0 / 4.0
                and float(sym_eigenvalues(h0)[0]) >= 0.75 * lam0
            )
            width_fails += 0 if ok else 1
        per_width[m] = width_fails
        fails += width_fails
    total = len(m_list) * n_seeds
    statistic = fails / total
    details = {"fails_per_width": per_width, "kernel": kernel, "lambda_kernel": lam_true}
    return LemmaVerdict("gram-concentration", statistic, 0.1, statistic <= 0.1, total, details)


def make_flow_instance(seed=0, n=8, m=512, d=16):
    """Standard instance for validate_flow_dynamics: ntk-initialized
    two-layer scalar net on a small sphere dataset."""
    rng = RngStream(seed, key=(106,))
    dataset = generate_sphere_dataset(n, d, "scalar-regression", rng.substream(0))
    net = init_network(NetworkConfig.ntk(d=d, m=m, o=1, L=2), rng.substream(1))
    return net, dataset


def run_all(seed=0):
    """Run every validator in its law-testing configuration. Returns the
    list of verdicts in a fixed order."""
    verdicts = [
        validate_relu_square_law(seed=seed),
        validate_chi_square_mixture(q=16, seed=seed),
        validate_layer_norm_ratio(NetworkConfig.he(d=32, m=128, o=1, L=3), seed=seed),
    ]
    flow_net, flow_data = make_flow_instance(seed)
    verdicts.append(validate_flow_dynamics(flow_net, flow_data))
    net, dataset, radii, t_end = make_movement_instance(seed)
    verdicts.append(validate_weight_movement(net, dataset, radii, t_end))
    verdicts.append(validate_gram_concentration(seed=seed))
    return verdicts
