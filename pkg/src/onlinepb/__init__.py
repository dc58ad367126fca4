"""Online PAC-Bayes learning: losses, learners, bounds, certification.

The package follows the pipeline of an online generalisation-bound
experiment: ``core`` defines clipped losses with subgradients and
proximal maps, ``distributions`` the Gaussian / particle measures and
their divergences, ``learners`` the three online algorithms,
``pac_bounds`` the numeric bound evaluators, ``streams`` + ``certify``
the synthetic-data coverage harness, ``data`` CSV ingestion, and
``cli`` the command-line front end.
"""

from .core import (
    CLASSIFICATION,
    DEFAULT_THRESHOLD,
    HINGE,
    REGRESSION,
    SQUARED,
    DataPoint,
    Dataset,
    DimensionMismatchError,
    LossSpec,
    RunConfig,
    RunTrace,
    eval_loss,
    prox,
    raw_loss,
    subgradient,
)
from .distributions import (
    GaussianFixedVar,
    LaplacePrior,
    ParticleEnsemble,
    effective_sample_size,
    ensemble_kl,
    gaussian_log_density_ratio,
    gibbs_update,
    init_ensemble,
    kl_gaussian_fixed_var,
    posterior_mean,
    renyi2_gaussian_fixed_var,
    run_rng,
)
from .learners import (
    PSI_POINTWISE,
    PSI_RENYI,
    gibbs_run,
    noisy_prox_run,
    ogd_regret_bound,
    ogd_run,
)
from .pac_bounds import (
    BoundReport,
    disintegrated_penalty,
    disintegrated_rhs,
    lambda_grid_select,
    main_bound_rhs,
    naive_bound_rhs,
    opb_test_rhs,
    opb_train_rhs,
    optimal_lambda_test,
)
from .streams import SyntheticStream, generate, true_weights
from .certify import (
    CoverageResult,
    binomial_envelope,
    coverage_experiment,
    exp_moment_probe,
)
from .data import DatasetSpec, export_builtin, load_dataset, save_dataset

__version__ = "0.1.0"

__all__ = [
    "CLASSIFICATION",
    "DEFAULT_THRESHOLD",
    "HINGE",
    "REGRESSION",
    "SQUARED",
    "PSI_POINTWISE",
    "PSI_RENYI",
    "BoundReport",
    "CoverageResult",
    "DataPoint",
    "Dataset",
    "DatasetSpec",
    "DimensionMismatchError",
    "GaussianFixedVar",
    "LaplacePrior",
    "LossSpec",
    "ParticleEnsemble",
    "RunConfig",
    "RunTrace",
    "SyntheticStream",
    "binomial_envelope",
    "coverage_experiment",
    "disintegrated_penalty",
    "disintegrated_rhs",
    "effective_sample_size",
    "ensemble_kl",
    "eval_loss",
    "exp_moment_probe",
    "export_builtin",
    "gaussian_log_density_ratio",
    "generate",
    "gibbs_run",
    "gibbs_update",
    "init_ensemble",
    "kl_gaussian_fixed_var",
    "lambda_grid_select",
    "load_dataset",
    "main_bound_rhs",
    "naive_bound_rhs",
    "noisy_prox_run",
    "ogd_regret_bound",
    "ogd_run",
    "opb_test_rhs",
    "opb_train_rhs",
    "optimal_lambda_test",
    "posterior_mean",
    "prox",
    "raw_loss",
    "renyi2_gaussian_fixed_var",
    "run_rng",
    "save_dataset",
    "subgradient",
    "true_weights",
]
