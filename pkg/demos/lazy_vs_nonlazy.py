"""Weight movement kappa under lazy vs non-lazy initialization.

Trains two-layer nets of equal width on the same synthetic task. The
he-initialized net barely moves (kappa stays small and flat); the
non-lazy net (beta = 1/m^2) must travel far from init to fit, so kappa
is orders of magnitude larger and keeps growing. Writes the kappa-vs-
epoch curves to demos/out/kappa_epochs.svg.
"""

import pathlib

from robustlab.data import generate_sphere_dataset
from robustlab.network import NetworkConfig, init_network
from robustlab.numerics import RngStream
from robustlab.stability import StabilityConfig, perturbation_stability
from robustlab.svgplot import Series, line_chart
from robustlab.training import TrainHyper, sgd_train

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

M, SEED = 512, 0
rng = RngStream(11)
train = generate_sphere_dataset(256, 16, "two-class-halfspace", rng.substream(0))
eval_ = generate_sphere_dataset(128, 16, "two-class-halfspace", rng.substream(1))
hyper = TrainHyper(epochs=20, batch_size=32, lr=0.1, loss="squared", seed=SEED)
stab = StabilityConfig(eps=0.1, n_points=128, n_dirs=16, seed=0)

curves = []
for label, cfg in (
    ("he (lazy)", NetworkConfig.he(16, M, 1, 2)),
    ("beta=1/m^2 (non-lazy)", NetworkConfig.nonlazy(16, M, 1, 2, c=2.0)),
):
    net = init_network(cfg, RngStream(SEED))
    log = sgd_train(net, train, hyper)
    ks = [r.kappa for r in log.records]
    est = perturbation_stability(net, eval_, stab)
    print(f"{label:22s} kappa@1={ks[1]:.3e} kappa@20={ks[-1]:.3e} "
          f"loss={log.records[-1].loss:.4f} stability={est.mean:.3e}")
    curves.append(Series(label, tuple(range(1, len(ks))), tuple(ks[1:])))

ratio = curves[1].ys[-1] / curves[0].ys[-1]
print(f"final kappa ratio non-lazy/he = {ratio:.0f}x")
(OUT / "kappa_epochs.svg").write_text(
    line_chart(curves, title=f"kappa per epoch, m={M}", xlabel="epoch", ylabel="kappa", logy=True)
)
print(f"figure in {OUT}")
