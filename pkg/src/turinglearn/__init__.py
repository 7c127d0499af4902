"""Learning reaction-diffusion parameters back from the patterns they make.

The package covers the full loop: spectral simulation of a two-species
activator-inhibitor system on a torus, linear stability classification,
resistance-histogram pattern descriptors, three regression back-ends
(support vector, operator-valued kernel, feed-forward network), and the
dataset/CLI plumbing to run reproducible experiments end to end.
"""

from .grid import SpectralOperator, TorusGrid, laplacian_matvec, spectral_solve, toroidal_distance
from .reactions import (
    GmParams,
    ReactionModel,
    gm_equilibrium,
    gm_jacobian,
    gm_model,
    gm_reaction,
    jacobian,
)
from .stability import StabilityReport, dispersion, turing_check
from .simulate import (
    PatternField,
    SimConfig,
    SimulationError,
    coefficient_of_variation,
    initial_condition,
    simulate,
)
from .resistance import PatternGraph, ResistanceSolver, build_pattern_graph, resistance
from .features import (
    DegenerateFeatureError,
    Rdh,
    RdhConfig,
    collect_resistance_samples,
    compute_rdh,
    connected_components_high,
    maximal_concentration,
    r_max_from_dataset,
)
from .kernels import (
    KernelSpec,
    chi2_exponential,
    chi2_symmetric,
    gaussian_output,
    gram_matrix,
    wasserstein_kernel,
    wasserstein_sq,
)
from .svr import SvrModel, TrainingError, kkt_residual, svr_objective, svr_predict, svr_train
from .ovk import OvkModel, global_gmres, ovk_embed, ovk_predict, ovk_train
from .nn import FfnnModel, TrainSchedule, default_schedule, ffnn_predict, ffnn_train
from .pipeline import (
    Dataset,
    DatasetRecord,
    FeatureRecipe,
    GridSearchResult,
    SamplingPlan,
    TrainedModel,
    averaged_nrmse,
    cluster_patterns,
    embed_2d,
    evaluate_model,
    four_parameter_plan,
    generate_dataset,
    grid_search,
    normalize_targets,
    nrmse,
    predict_with,
    recipe_features,
    single_parameter_plan,
    split_dataset,
    train_model,
)
from .config import RunConfig, default_config, load_config, save_config
from .storage import load_dataset, read_model, read_pattern, write_model, write_pattern

__version__ = "0.1.0"
