"""Command line front end.

Subcommands: train, stability, kappa, bounds, gram, flow, sweep, validate.
Every stochastic subcommand requires an explicit seed. A --config FILE of
line-oriented key=value pairs (# comments allowed) is expanded into flags
placed before the ones given on the command line, so explicit flags win.
Exit codes: 0 success, 1 runtime failure (and any failed validation), 2
usage errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import generate_sphere_dataset, load_mnist_idx, TASKS
from .harness import SweepSpec, default_widths, run_sweep
from .network import (
    FormatError,
    NetworkConfig,
    SCHEMES,
    init_network,
    load_checkpoint,
    save_checkpoint,
)
from .numerics import RngStream, sym_eigenvalues, spectral_norm_sym
from .stability import StabilityConfig, gradient_drift, perturbation_stability
from .theory import (
    build_gram_set,
    classify_regime,
    gamma,
    nonlazy_bound,
    stability_bound,
)
from .training import (
    IntegrationDiverged,
    TrainHyper,
    TrainingDiverged,
    integrate_gradient_flow,
    lazy_ratio,
    sgd_train,
)
from . import validators

__all__ = ["cli_dispatch", "main"]

# the only boolean (store_true) config keys; everything else takes a value
_BOOL_KEYS = {"no-unit-norm"}


def _read_config_file(path):
    flags = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().replace("_", "-")
        value = value.strip()
        if not key:
            raise ValueError(f"{path}:{lineno}: empty key")
        if key in _BOOL_KEYS:
            if value.lower() in ("true", "1", "yes"):
                flags.append(f"--{key}")
            elif value.lower() not in ("false", "0", "no"):
                raise ValueError(f"{path}:{lineno}: boolean key {key} takes true/false")
        else:
            flags.append(f"--{key}={value}")
    return flags


def _expand_config(argv):
    """Pull --config FILE out of argv and splice its flags in after the
    subcommand, before the remaining user flags."""
    rest = []
    configs = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg == "--config":
            if i + 1 >= len(argv):
                raise ValueError("--config needs a file argument")
            configs.append(argv[i + 1])
            i += 2
        elif arg.startswith("--config="):
            configs.append(arg.split("=", 1)[1])
            i += 1
        else:
            rest.append(arg)
            i += 1
    if not configs:
        return rest
    if not rest or rest[0].startswith("-"):
        raise ValueError("--config requires a subcommand")
    injected = []
    for path in configs:
        injected.extend(_read_config_file(path))
    return [rest[0]] + injected + rest[1:]


def _int_list(text):
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _str_list(text):
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _add_dataset_args(p):
    p.add_argument("--data", choices=("sphere", "idx"), default="sphere")
    p.add_argument("--d", type=int, default=64, help="input dimension for sphere data")
    p.add_argument("--task", choices=TASKS, default="two-class-halfspace")
    p.add_argument("--n-train", type=int, default=2048)
    p.add_argument("--n-eval", type=int, default=512)
    p.add_argument("--train-images")
    p.add_argument("--train-labels")
    p.add_argument("--eval-images")
    p.add_argument("--eval-labels")
    p.add_argument("--no-unit-norm", action="store_true", help="keep idx images at raw 0..1 scale")


def _load_datasets(args, seed):
    rng = RngStream(seed, key=(900,))
    if args.data == "sphere":
        train = generate_sphere_dataset(args.n_train, args.d, args.task, rng.substream(0))
        eval_ = generate_sphere_dataset(args.n_eval, args.d, args.task, rng.substream(1))
        return train, eval_
    if not args.train_images or not args.train_labels:
        raise ValueError("idx data needs --train-images and --train-labels")
    unit = not args.no_unit_norm
    train = load_mnist_idx(args.train_images, args.train_labels, unit_norm=unit)
    if args.eval_images and args.eval_labels:
        eval_ = load_mnist_idx(args.eval_images, args.eval_labels, unit_norm=unit)
    else:
        eval_ = train
    if args.n_train and args.n_train < train.n:
        train = train.subset(args.n_train)
    if args.n_eval and args.n_eval < eval_.n:
        eval_ = eval_.subset(args.n_eval)
    return train, eval_


def _make_config(args, d, o):
    if args.scheme == "nonlazy":
        return NetworkConfig.nonlazy(d=d, m=args.width, o=o, L=args.depth, c=args.c, alpha=args.alpha)
    factory = getattr(NetworkConfig, args.scheme)
    return factory(d=d, m=args.width, o=o, L=args.depth, alpha=args.alpha)


def _resolve_loss(choice, o):
    if choice == "auto":
        return "squared" if o == 1 else "cross_entropy"
    return {"squared": "squared", "cross-entropy": "cross_entropy"}[choice]


def _cmd_train(args):
    train, eval_ = _load_datasets(args, args.seed)
    config = _make_config(args, train.d, train.o)
    rng = RngStream(args.seed, key=(1,))
    net = init_network(config, rng.substream(0))
    loss = _resolve_loss(args.loss, train.o)
    hyper = TrainHyper(
        epochs=args.epochs, batch_size=args.batch, lr=args.lr, loss=loss, seed=rng.derived_seed(1)
    )
    log = sgd_train(net, train, hyper)
    for r in log.records:
        print(f"epoch {r.epoch:3d}  loss {r.loss:.6f}  accuracy {r.accuracy:.4f}  kappa {r.kappa:.6f}")
    final = log.final
    print(f"final: loss {final.loss:.6f} accuracy {final.accuracy:.4f} kappa {final.kappa:.6f}")
    ev_loss = None
    if eval_ is not train:
        from .network import accuracy as _acc, loss_value as _lv

        ev_loss = _lv(net, eval_.inputs, eval_.labels, loss)
        print(f"eval: loss {ev_loss:.6f} accuracy {_acc(net, eval_.inputs, eval_.labels):.4f}")
    if args.epoch_csv:
        log.to_csv(args.epoch_csv)
        print(f"wrote {args.epoch_csv}")
    if args.out:
        save_checkpoint(net, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_stability(args):
    net = load_checkpoint(args.ckpt)
    if args.data == "sphere" and args.d != net.config.d:
        args.d = net.config.d
    _, eval_ = _load_datasets(args, args.seed)
    cfg = StabilityConfig(
        eps=args.eps, n_points=min(args.points, eval_.n), n_dirs=args.dirs, seed=args.seed
    )
    est = perturbation_stability(net, eval_, cfg)
    print(f"stability mean {est.mean:.8e} stderr {est.std_error:.3e} (n={est.n_total})")
    if args.drift_points:
        drift = gradient_drift(net, eval_, args.drift_points, seed=args.seed)
        print(f"gradient drift {drift:.8e} over {args.drift_points} points")
    return 0


def _cmd_kappa(args):
    net = load_checkpoint(args.ckpt)
    print(f"kappa {lazy_ratio(net):.8e}")
    return 0


def _cmd_bounds(args):
    config = _make_config(args, args.d, args.o)
    b = stability_bound(config)
    r = classify_regime(config)
    cols = [
        ("scheme", config.scheme),
        ("L", config.L),
        ("m", config.m),
        ("gamma", f"{gamma(config):.12g}"),
        ("general", f"{b.general:.12g}"),
        ("scheme_form", f"{b.specialized:.12g}"),
        ("poly_cmp", f"{b.depth_poly_comparator:.12g}"),
        ("exp_cmp", f"{b.depth_exp_comparator:.12g}"),
    ]
    if config.scheme == "nonlazy" and config.L == 2:
        cols.append(("twolayer", f"{nonlazy_bound(args.n, config.m, config.c):.12g}"))
    cols.append(("rho", f"{r.rho:.12g}"))
    cols.append(("regime", r.label))
    print("  ".join(name for name, _ in cols))
    print("  ".join(str(val) for _, val in cols))
    return 0


def _cmd_gram(args):
    rng = RngStream(args.seed, key=(2,))
    dataset = generate_sphere_dataset(args.n, args.d, "scalar-regression", rng.substream(0))
    config = NetworkConfig.custom(
        d=args.d, m=args.width, o=1, L=2, betas=(args.beta1, args.beta2), alpha=args.alpha
    )
    net = init_network(config, rng.substream(1))
    gs = build_gram_set(net, dataset)
    gap = spectral_norm_sym(gs.h - gs.h_inf)
    print(f"n {dataset.n}  width {config.m}  lambda0 {gs.lambda0:.8e}")
    print(f"spectral gap |H(0) - H_inf| {gap:.8e} (lambda0/4 = {gs.lambda0 / 4:.8e})")
    for name, mat in (("h_inf", gs.h_inf), ("h", gs.h), ("h_hat", gs.h_hat), ("g", gs.g)):
        lam = float(sym_eigenvalues(mat)[0])
        print(f"min eigenvalue {name} {lam:.8e}")
    return 0


def _cmd_flow(args):
    rng = RngStream(args.seed, key=(3,))
    dataset = generate_sphere_dataset(args.n, args.d, "scalar-regression", rng.substream(0))
    config = NetworkConfig.ntk(d=args.d, m=args.width, o=1, L=2, alpha=args.alpha)
    net = init_network(config, rng.substream(1))
    steps = max(1, math.ceil(args.t_max / (args.eta if args.eta else 1e-3 * args.alpha**2 / args.n)))
    traj = integrate_gradient_flow(
        net, dataset, args.t_max, eta=args.eta, snapshot_every=max(1, steps // 8)
    )
    norms = traj.residual_norms
    for t, r in zip(traj.times, norms):
        print(f"t {t:.6f}  residual {r:.8e}")
    print(f"residual ratio {norms[-1] / norms[0]:.6f} over t {traj.times[-1]:.6f}")
    return 0


def _cmd_sweep(args):
    train, eval_ = _load_datasets(args, args.seeds[0])
    loss = _resolve_loss(args.loss, train.o)
    widths = args.widths if args.widths else default_widths(args.max_width)
    spec = SweepSpec(
        widths=widths,
        depths=args.depths,
        schemes=args.schemes,
        seeds=args.seeds,
        train_data=train,
        eval_data=eval_,
        hyper=TrainHyper(epochs=args.epochs, batch_size=args.batch, lr=args.lr, loss=loss),
        stability=StabilityConfig(eps=args.eps, n_points=args.points, n_dirs=args.dirs),
        alpha=args.alpha,
        nonlazy_c=args.c,
    )
    rows = run_sweep(spec, args.out, workers=args.workers)
    ok = sum(1 for r in rows if r.status == "ok")
    print(f"{ok}/{len(rows)} runs ok; artifacts in {args.out}")
    return 0 if ok > 0 else 1


_LEMMAS = {
    "relu-square": lambda args: validators.validate_relu_square_law(
        n_samples=args.n, sigma=args.sigma, alpha=args.significance, seed=args.seed
    ),
    "chi-square": lambda args: validators.validate_chi_square_mixture(
        q=args.q, n_samples=args.n, alpha=args.significance, seed=args.seed
    ),
    "layer-norm": lambda args: validators.validate_layer_norm_ratio(
        NetworkConfig.he(d=32, m=128, o=1, L=3), seed=args.seed
    ),
    "flow": lambda args: validators.validate_flow_dynamics(*validators.make_flow_instance(args.seed)),
    "movement": lambda args: validators.validate_weight_movement(
        *validators.make_movement_instance(args.seed)
    ),
    "gram": lambda args: validators.validate_gram_concentration(seed=args.seed),
}


def _cmd_validate(args):
    if args.lemma == "all":
        verdicts = validators.run_all(seed=args.seed)
    else:
        verdicts = [_LEMMAS[args.lemma](args)]
    print(f"{'lemma':24s} {'statistic':>12s} {'threshold':>10s} {'pass':>5s}")
    for v in verdicts:
        print(f"{v.lemma:24s} {v.statistic:12.4g} {v.threshold:10.4g} {str(v.passed):>5s}")
    return 0 if all(v.passed for v in verdicts) else 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="robustlab",
        description="train bias-free relu nets, measure perturbation stability, evaluate bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def arch_args(p, need_o=False):
        p.add_argument("--scheme", choices=[s for s in SCHEMES if s != "custom"], required=True)
        p.add_argument("--width", type=int, required=True)
        p.add_argument("--depth", type=int, required=True)
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--c", type=float, default=2.0, help="nonlazy width exponent")
        if need_o:
            p.add_argument("--o", type=int, required=True)

    p = sub.add_parser("train", help="sgd-train one network")
    arch_args(p)
    _add_dataset_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--loss", choices=("auto", "squared", "cross-entropy"), default="auto")
    p.add_argument("--out", help="checkpoint output path")
    p.add_argument("--epoch-csv", help="write per-epoch records to this CSV")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("stability", help="estimate perturbation stability of a checkpoint")
    p.add_argument("--ckpt", required=True)
    _add_dataset_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--dirs", type=int, default=16)
    p.add_argument("--drift-points", type=int, default=0, help="also report gradient drift over this many points")
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("kappa", help="relative weight movement of a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.set_defaults(func=_cmd_kappa)

    p = sub.add_parser("bounds", help="closed-form stability bounds and regime classification")
    arch_args(p, need_o=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, default=4, help="sample count for the two-layer non-lazy bound")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("gram", help="gram matrices of a fresh two-layer net on sphere data")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta1", type=float, default=0.05)
    p.add_argument("--beta2", type=float, default=0.01)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_gram)

    p = sub.add_parser("flow", help="integrate two-layer gradient flow")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--eta", type=float)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_flow)

    p = sub.add_parser("sweep", help="width x depth x scheme x seed sweep with CSV/SVG artifacts")
    _add_dataset_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--widths", type=_int_list, default=())
    p.add_argument("--max-width", type=int, default=1024)
    p.add_argument("--depths", type=_int_list, default=(2, 4, 6, 8, 10))
    p.add_argument("--schemes", type=_str_list, default=("he",))
    p.add_argument("--seeds", type=_int_list, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--loss", choices=("auto", "squared", "cross-entropy"), default="auto")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--dirs", type=int, default=16)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="statistical lemma validators")
    p.add_argument("--lemma", choices=("all",) + tuple(_LEMMAS), default="all")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=100_000, help="sample count")
    p.add_argument("--q", type=int, default=16)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--significance", type=float, default=0.01)
    p.set_defaults(func=_cmd_validate)

    return parser


def cli_dispatch(argv):
    """Parse argv (no program name) and run the subcommand; returns the
    process exit code."""
    try:
        argv = _expand_config(list(argv))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (
        OSError,
        ValueError,
        FormatError,
        TrainingDiverged,
        IntegrationDiverged,
        ArithmeticError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
