"""Tour of the closed-form stability bounds and the regime classifier.

Prints the per-scheme bounds over a width/depth grid, compares them with
the polynomial/exponential reference envelopes, evaluates the two-layer
non-lazy bound, and renders bound-vs-width curves to demos/out/.
"""

import math
import pathlib

from robustlab.network import NetworkConfig
from robustlab.svgplot import Series, line_chart
from robustlab.theory import classify_regime, nonlazy_bound, stability_bound

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

D, O = 784, 10
WIDTHS = [2**k for k in range(4, 13)]

print("specialized bound per unit radius, L=4")
print("   m      he        lecun     ntk       poly-ref   exp-ref")
for m in WIDTHS:
    row = [f"{m:6d}"]
    for scheme in ("he", "lecun", "ntk"):
        rep = stability_bound(getattr(NetworkConfig, scheme)(D, m, O, 4))
        row.append(f"{rep.specialized:9.4f}")
    row.append(f"{rep.depth_poly_comparator:9.1f}")
    row.append(f"{rep.depth_exp_comparator:9.1f}")
    print("  ".join(row))

print()
print("depth behavior at m=256: he stays O(1), lecun decays like (sqrt(2)/2)^(L-2)")
for L in (2, 4, 6, 8, 10):
    he = stability_bound(NetworkConfig.he(D, 256, O, L)).specialized
    le = stability_bound(NetworkConfig.lecun(D, 256, O, L)).specialized
    print(f"  L={L:2d}  he={he:8.4f}  lecun={le:8.4f}  lecun-gamma^(L-2)={math.sqrt(0.5) ** (L - 2):8.4f}")

print()
print("two-layer non-lazy bound decreases with width (n=4 targets)")
for c in (1.5, 2.0):
    vals = [nonlazy_bound(4, m, c) for m in WIDTHS]
    print(f"  c={c}: m=16 -> {vals[0]:.3e}, m=4096 -> {vals[-1]:.3e}")

print()
print("regime classifier rho = alpha / (m^1.5 sum beta)^L")
for scheme, kw in (("he", {}), ("lecun", {}), ("ntk", {}), ("nonlazy", {"c": 2.0})):
    cfg = getattr(NetworkConfig, scheme)(D, 256, O, 2, **kw)
    rep = classify_regime(cfg)
    print(f"  {scheme:8s} rho={rep.rho:10.3e}  {rep.label}")

series = [
    Series(
        scheme,
        tuple(WIDTHS),
        tuple(stability_bound(getattr(NetworkConfig, scheme)(D, m, O, 4)).specialized for m in WIDTHS),
    )
    for scheme in ("he", "lecun", "ntk")
]
(OUT / "bounds_width_L4.svg").write_text(
    line_chart(series, title="stability bound vs width, L=4", xlabel="width m", ylabel="bound", logx=True)
)
series = [
    Series(f"c={c}", tuple(WIDTHS), tuple(nonlazy_bound(4, m, c) for m in WIDTHS))
    for c in (1.5, 2.0, 2.5)
]
(OUT / "nonlazy_bound_width.svg").write_text(
    line_chart(series, title="two-layer non-lazy bound, n=4", xlabel="width m", ylabel="bound", logx=True, logy=True)
)
print()
print(f"figures in {OUT}")
