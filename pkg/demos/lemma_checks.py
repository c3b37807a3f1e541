"""Run the statistical self-checks and show that they can fail.

The validators test distributional facts the bounds rely on (relu square
law, chi-square mixture tails, per-layer norm ratios, flow dynamics,
movement radii, gram concentration). Each prints PASS/FAIL with its
statistic and threshold. The second half feeds each validator a distorted
input to confirm the checks have teeth.
"""

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

print("law-testing configuration, seed 0")
for verdict in run_all(seed=0):
    print(f"  {verdict}")

print()
print("negative controls (each input violates the tested law)")
controls = [
    ("half the mass moved to zero", validate_relu_square_law(seed=1, mask_prob=1.0)),
    ("30% contaminated mixture", validate_chi_square_mixture(q=16, seed=1, mix_p=0.7)),
    ("hidden stds doubled", validate_layer_norm_ratio(NetworkConfig.he(d=32, m=128, o=1, L=3), seed=1, std_scale=2.0)),
    ("wrong limit kernel", validate_gram_concentration(seed=1, kernel="angle")),
]
net, data = make_flow_instance(seed=1)
controls.append(("H term dropped from the flow", validate_flow_dynamics(net, data, terms=("g",))))
net, data, radii, t_end = make_movement_instance(seed=1)
bad = early_training_radii(net.config, radii.lambda0 * 50.0, radii.n, radii.residual0)
controls.append(("lambda0 inflated 50x", validate_weight_movement(net, data, bad, min(t_end, 0.5 * bad.t_star))))
for reason, verdict in controls:
    print(f"  [{reason}] {verdict}")
