"""Desk-scale width sweep: measured stability against the closed-form order.

Runs the sweep harness over widths for he (L=4) and the two-layer
non-lazy family on a synthetic task, then renders the standard figure
set (stability and kappa vs width, kappa vs epoch) from the emitted
tables. Everything lands in demos/out/width_sweep/.
"""

import pathlib

from robustlab.data import generate_sphere_dataset
from robustlab.harness import SweepSpec, run_sweep
from robustlab.numerics import RngStream
from robustlab.stability import StabilityConfig
from robustlab.training import TrainHyper

OUT = pathlib.Path(__file__).parent / "out" / "width_sweep"

rng = RngStream(21)
train = generate_sphere_dataset(512, 16, "two-class-halfspace", rng.substream(0))
eval_ = generate_sphere_dataset(128, 16, "two-class-halfspace", rng.substream(1))

spec = SweepSpec(
    widths=(16, 32, 64, 128, 256),
    depths=(2, 4),
    schemes=("he", "nonlazy"),
    seeds=(0, 1, 2),
    train_data=train,
    eval_data=eval_,
    hyper=TrainHyper(epochs=10, batch_size=32, lr=0.1, loss="squared"),
    stability=StabilityConfig(eps=0.1, n_points=128, n_dirs=8, seed=0),
)

rows = run_sweep(spec, OUT)
ok = sum(r.status == "ok" for r in rows)
print(f"{ok}/{len(rows)} runs ok")
for scheme in ("he", "nonlazy"):
    picks = sorted(
        (r for r in rows if r.scheme == scheme and r.depth == 2 and r.seed == 0),
        key=lambda r: r.width,
    )
    line = ", ".join(f"m={r.width}: {r.stability_mean:.3e}" for r in picks)
    print(f"{scheme:8s} L=2 seed 0 stability  {line}")
print(f"tables and figures in {OUT}")
