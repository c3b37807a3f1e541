"""Numerical laboratory for perturbation stability of bias-free relu nets.

The library trains deep fully-connected networks under several width-scaled
initialization schemes, estimates the average perturbation stability
E ||grad f(x)^T (x - xhat)|| under uniform ball noise, evaluates the matching
closed-form bounds, and statistically validates the supporting distributional
and dynamics lemmas.
"""

from .data import Dataset, TASKS, generate_sphere_dataset, load_mnist_idx
from .harness import (
    KAPPA_HEADER,
    SWEEP_HEADER,
    SweepRow,
    SweepSpec,
    default_widths,
    figures_from_tables,
    parse_kappa_csv,
    parse_sweep_csv,
    run_single,
    run_sweep,
)
from .network import (
    ForwardTrace,
    FormatError,
    Network,
    NetworkConfig,
    SCHEMES,
    accuracy,
    batch_outputs,
    forward,
    init_network,
    input_jvp,
    jvp_many,
    load_checkpoint,
    loss_value,
    save_checkpoint,
    scheme_betas,
    weight_gradients,
)
from .numerics import (
    KsResult,
    RngStream,
    jacobi_eigh,
    ks_two_sample,
    sample_gaussian_matrix,
    sample_in_ball,
    spectral_norm_sym,
    sym_eigenvalues,
)
from .stability import (
    StabilityConfig,
    StabilityEstimate,
    gradient_drift,
    perturbation_stability,
)
from .svgplot import Series, line_chart
from .theory import (
    EarlyTrainingRadii,
    GramSet,
    RegimeReport,
    StabilityBounds,
    arccos_kernel,
    build_gram_set,
    classify_regime,
    early_training_radii,
    gamma,
    gram_g,
    gram_h,
    gram_h_hat,
    gram_h_infinity,
    nonlazy_bound,
    stability_bound,
)
from .training import (
    EpochRecord,
    FlowTrajectory,
    IntegrationDiverged,
    TrainHyper,
    TrainLog,
    TrainingDiverged,
    flow_step,
    integrate_gradient_flow,
    lazy_ratio,
    sgd_train,
)
from .validators import (
    LemmaVerdict,
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

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "TASKS",
    "generate_sphere_dataset",
    "load_mnist_idx",
    "KAPPA_HEADER",
    "SWEEP_HEADER",
    "SweepRow",
    "SweepSpec",
    "default_widths",
    "figures_from_tables",
    "parse_kappa_csv",
    "parse_sweep_csv",
    "run_single",
    "run_sweep",
    "ForwardTrace",
    "FormatError",
    "Network",
    "NetworkConfig",
    "SCHEMES",
    "accuracy",
    "batch_outputs",
    "forward",
    "init_network",
    "input_jvp",
    "jvp_many",
    "load_checkpoint",
    "loss_value",
    "save_checkpoint",
    "scheme_betas",
    "weight_gradients",
    "KsResult",
    "RngStream",
    "jacobi_eigh",
    "ks_two_sample",
    "sample_gaussian_matrix",
    "sample_in_ball",
    "spectral_norm_sym",
    "sym_eigenvalues",
    "StabilityConfig",
    "StabilityEstimate",
    "gradient_drift",
    "perturbation_stability",
    "Series",
    "line_chart",
    "EarlyTrainingRadii",
    "GramSet",
    "RegimeReport",
    "StabilityBounds",
    "arccos_kernel",
    "build_gram_set",
    "classify_regime",
    "early_training_radii",
    "gamma",
    "gram_g",
    "gram_h",
    "gram_h_hat",
    "gram_h_infinity",
    "nonlazy_bound",
    "stability_bound",
    "EpochRecord",
    "FlowTrajectory",
    "IntegrationDiverged",
    "TrainHyper",
    "TrainLog",
    "TrainingDiverged",
    "flow_step",
    "integrate_gradient_flow",
    "lazy_ratio",
    "sgd_train",
    "LemmaVerdict",
    "make_flow_instance",
    "make_movement_instance",
    "run_all",
    "validate_chi_square_mixture",
    "validate_flow_dynamics",
    "validate_gram_concentration",
    "validate_layer_norm_ratio",
    "validate_relu_square_law",
    "validate_weight_movement",
    "__version__",
]
