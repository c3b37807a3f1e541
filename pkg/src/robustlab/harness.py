"""Experiment sweeps over (width x depth x scheme x seed) with artifacts.

run_sweep executes every combination, writes two CSVs (final metrics per
run in sweep.csv, per-epoch training curves in kappa_epochs.csv) and
renders the standard figure set from those CSVs. Figures are a pure
function of the CSV content: re-rendering from the files on disk gives
byte-identical SVGs.

Determinism: each run draws from Philox substreams keyed by
(scheme, width, depth, seed) with a fixed scheme -> integer map, so
results do not depend on list order in the spec or on worker scheduling.
Failed runs are kept as rows with status "diverged" and nan metrics.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path

import numpy as np

from .data import Dataset
from .network import SCHEMES, NetworkConfig, accuracy, init_network, loss_value
from .numerics import RngStream
from .stability import StabilityConfig, perturbation_stability
from .theory import stability_bound
from .training import TrainHyper, TrainingDiverged, sgd_train

__all__ = [
    "SWEEP_HEADER",
    "KAPPA_HEADER",
    "SweepSpec",
    "SweepRow",
    "default_widths",
    "run_single",
    "run_sweep",
    "parse_sweep_csv",
    "parse_kappa_csv",
    "figures_from_tables",
]

SWEEP_HEADER = "width,depth,scheme,seed,loss,accuracy,kappa,stability_mean,stability_stderr,thm1_order,status"
KAPPA_HEADER = "width,depth,scheme,seed,epoch,loss,accuracy,kappa"

# stable identity keys for RNG substreams (independent of spec list order);
# values match the checkpoint scheme tags
_SCHEME_KEY = {"lecun": 0, "he": 1, "ntk": 2, "nonlazy": 3}


def default_widths(max_width=1024):
    """Powers of two from 2^4 up to 2^14, truncated at max_width."""
    return tuple(2**k for k in range(4, 15) if 2**k <= max_width)


@dataclass(frozen=True)
class SweepSpec:
    """Full factorial sweep description. total_runs is the product of the
    four list lengths; all lists must be non-empty."""

    widths: tuple
    depths: tuple
    schemes: tuple
    seeds: tuple
    train_data: Dataset
    eval_data: Dataset
    hyper: TrainHyper
    stability: StabilityConfig
    alpha: float = 1.0
    nonlazy_c: float = 2.0

    def __post_init__(self):
        for name in ("widths", "depths", "schemes", "seeds"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be non-empty")
        for s in self.schemes:
            if s not in SCHEMES or s == "custom":
                raise ValueError(f"unknown scheme {s!r}")
        if self.train_data.d != self.eval_data.d or self.train_data.o != self.eval_data.o:
            raise ValueError("train and eval datasets must share input/output dims")
        if any(int(w) < 1 for w in self.widths) or any(int(L) < 2 for L in self.depths):
            raise ValueError("need widths >= 1 and depths >= 2")

    @property
    def total_runs(self):
        return len(self.widths) * len(self.depths) * len(self.schemes) * len(self.seeds)


@dataclass(frozen=True)
class SweepRow:
    width: int
    depth: int
    scheme: str
    seed: int
    loss: float
    accuracy: float
    kappa: float
    stability_mean: float
    stability_stderr: float
    thm1_order: float
    status: str  # "ok" | "diverged"

    def csv_line(self):
        return ",".join(
            [
                str(self.width),
                str(self.depth),
                self.scheme,
                str(self.seed),
                repr(float(self.loss)),
                repr(float(self.accuracy)),
                repr(float(self.kappa)),
                repr(float(self.stability_mean)),
                repr(float(self.stability_stderr)),
                repr(float(self.thm1_order)),
                self.status,
            ]
        )


def _make_config(spec, scheme, width, depth):
    d, o = spec.train_data.d, spec.train_data.o
    if scheme == "nonlazy":
        return NetworkConfig.nonlazy(d=d, m=width, o=o, L=depth, c=spec.nonlazy_c, alpha=spec.alpha)
    factory = getattr(NetworkConfig, scheme)
    return factory(d=d, m=width, o=o, L=depth, alpha=spec.alpha)


def run_single(spec, scheme, width, depth, seed):
    """One training + stability run. Returns (SweepRow, epoch record list)."""
    base = RngStream(int(seed), key=(_SCHEME_KEY[scheme], int(width), int(depth)))
    config = _make_config(spec, scheme, width, depth)
    net = init_network(config, base.substream(0))
    hyper = replace(spec.hyper, seed=base.derived_seed(1))
    order = stability_bound(config).specialized
    try:
        log = sgd_train(net, spec.train_data, hyper)
        records = log.records
        n_pts = min(spec.stability.n_points, spec.eval_data.n)
        scfg = replace(spec.stability, n_points=n_pts, seed=base.derived_seed(2))
        est = perturbation_stability(net, spec.eval_data, scfg)
        final = log.final
        row = SweepRow(
            width, depth, scheme, int(seed),
            final.loss, final.accuracy, final.kappa,
            est.mean, est.std_error, order, "ok",
        )
    except TrainingDiverged as exc:
        records = exc.log.records
        nan = float("nan")
        row = SweepRow(width, depth, scheme, int(seed), nan, nan, nan, nan, nan, order, "diverged")
    epochs = [
        (width, depth, scheme, int(seed), r.epoch, r.loss, r.accuracy, r.kappa) for r in records
    ]
    return row, epochs


def _run_task(args):
    return run_single(*args)


def run_sweep(spec, out_dir, workers=1):
    """Execute the sweep, write sweep.csv / kappa_epochs.csv, render SVGs.

    Returns the list of SweepRow in deterministic (scheme, width, depth,
    seed) nested order. Divergent runs become rows tagged "diverged";
    callers deciding process exit codes should treat a sweep as failed only
    when no row is "ok".
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [
        (spec, scheme, width, depth, seed)
        for scheme, width, depth, seed in product(spec.schemes, spec.widths, spec.depths, spec.seeds)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    rows = [r for r, _ in results]
    lines = [SWEEP_HEADER] + [r.csv_line() for r in rows]
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    klines = [KAPPA_HEADER]
    for _, epochs in results:
        for width, depth, scheme, seed, epoch, loss, acc, kappa in epochs:
            klines.append(
                f"{width},{depth},{scheme},{seed},{epoch},{repr(float(loss))},{repr(float(acc))},{repr(float(kappa))}"
            )
    (out / "kappa_epochs.csv").write_text("\n".join(klines) + "\n", encoding="utf-8")

    sweep_rows = parse_sweep_csv(out / "sweep.csv")
    kappa_rows = parse_kappa_csv(out / "kappa_epochs.csv")
    for name, svg in figures_from_tables(sweep_rows, kappa_rows).items():
        (out / name).write_text(svg, encoding="utf-8")
    return rows


# ---------------------------------------------------------------------------
# CSV parsing and figure construction (figures are functions of the CSVs)
# ---------------------------------------------------------------------------


def _parse(path, header, int_cols, str_cols):
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != header.split(","):
        raise ValueError(f"unexpected CSV header in {path}: {reader.fieldnames}")
    rows = []
    for rec in reader:
        row = {}
        for k, v in rec.items():
            if k in int_cols:
                row[k] = int(v)
            elif k in str_cols:
                row[k] = v
            else:
                row[k] = float(v)
        rows.append(row)
    return rows


def parse_sweep_csv(path):
    return _parse(path, SWEEP_HEADER, {"width", "depth", "seed"}, {"scheme", "status"})


def parse_kappa_csv(path):
    return _parse(path, KAPPA_HEADER, {"width", "depth", "seed", "epoch"}, {"scheme"})


def _seed_stats(values):
    vals = [v for v in values if math.isfinite(v)]
    if not vals:
        return None
    mean = float(np.mean(vals))
    err = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return mean, err


def _series_over_width(rows, key, scheme, depth):
    """Seed-aggregated (width, mean, stderr) triples of rows[key]."""
    widths = sorted({r["width"] for r in rows if r["scheme"] == scheme and r["depth"] == depth})
    xs, ys, es = [], [], []
    for w in widths:
        stat = _seed_stats(
            [
                r[key]
                for r in rows
                if r["scheme"] == scheme and r["depth"] == depth and r["width"] == w and r["status"] == "ok"
            ]
        )
        if stat is not None:
            xs.append(float(w))
            ys.append(stat[0])
            es.append(stat[1])
    return xs, ys, es


def figures_from_tables(sweep_rows, kappa_rows):
    """Build the standard figure set from parsed CSV rows; returns
    {filename: svg text}. Figures whose data is absent are skipped."""
    from .svgplot import Series, line_chart

    figures = {}
    schemes = sorted({r["scheme"] for r in sweep_rows})
    depths = sorted({r["depth"] for r in sweep_rows})
    if not schemes or not depths:
        return figures

    for scheme in schemes:
        series = []
        for depth in depths:
            xs, ys, es = _series_over_width(sweep_rows, "stability_mean", scheme, depth)
            if xs:
                series.append(Series(f"depth {depth}", tuple(xs), tuple(ys), tuple(es)))
        if series:
            figures[f"stability_width_{scheme}.svg"] = line_chart(
                series, title=f"stability vs width ({scheme})", xlabel="width", ylabel="stability", logx=True
            )

        series = []
        for depth in depths:
            xs, ys, es = _series_over_width(sweep_rows, "kappa", scheme, depth)
            if xs:
                series.append(Series(f"depth {depth}", tuple(xs), tuple(ys), tuple(es)))
        if series:
            figures[f"kappa_width_{scheme}.svg"] = line_chart(
                series, title=f"relative weight movement vs width ({scheme})", xlabel="width", ylabel="kappa", logx=True
            )

        d0 = depths[0]
        series = []
        for width in sorted({r["width"] for r in kappa_rows if r["scheme"] == scheme and r["depth"] == d0}):
            by_epoch = {}
            for r in kappa_rows:
                if r["scheme"] == scheme and r["depth"] == d0 and r["width"] == width:
                    by_epoch.setdefault(r["epoch"], []).append(r["kappa"])
            epochs = sorted(by_epoch)
            xs, ys, es = [], [], []
            for e in epochs:
                stat = _seed_stats(by_epoch[e])
                if stat is not None:
                    xs.append(float(e))
                    ys.append(stat[0])
                    es.append(stat[1])
            if xs:
                series.append(Series(f"width {width}", tuple(xs), tuple(ys), tuple(es)))
        if series:
            figures[f"kappa_epoch_{scheme}.svg"] = line_chart(
                series, title=f"relative weight movement per epoch ({scheme}, depth {d0})", xlabel="epoch", ylabel="kappa"
            )

    def scheme_comparison(name, wanted, depth, title):
        series = []
        for scheme in wanted:
            xs, ys, es = _series_over_width(sweep_rows, "stability_mean", scheme, depth)
            if xs:
                series.append(Series(scheme, tuple(xs), tuple(ys), tuple(es)))
        if len(series) >= 2:
            positive = all(y - e > 0.0 for s in series for y, e in zip(s.ys, s.yerr))
            figures[name] = line_chart(
                series, title=title, xlabel="width", ylabel="stability", logx=True, logy=positive
            )

    if "nonlazy" in schemes:
        lazy = [s for s in schemes if s != "nonlazy"]
        scheme_comparison(
            "stability_width_lazy_nonlazy.svg",
            lazy + ["nonlazy"],
            depths[0],
            f"stability vs width, lazy vs non-lazy (depth {depths[0]})",
        )
    scheme_comparison(
        "stability_width_schemes.svg",
        schemes,
        depths[-1],
        f"stability vs width by scheme (depth {depths[-1]})",
    )
    return figures
