"""Fully-corrective greedy boosting for binary classification.

Greedy atom selection over a randomized kernel dictionary with a joint
coefficient refit at every step, solved for the squared hinge loss by an ADMM
scheme with a closed-form proximal map.  Includes stagewise baselines, a
synthetic benchmark generator, CSV ingestion, a scikit-learn style estimator,
and an experiment CLI (``fcgboost``).
"""

from .boosting import (
    BASELINE_SCHEMES,
    BoostModel,
    FitConfig,
    TrainTrace,
    ValidationResult,
    baseline_fit,
    classify,
    early_stop_grid,
    fcg_fit,
    fit_with_validation,
    predict_margin,
    select_atom,
    truncate,
)
from .data import (
    Dataset,
    accuracy,
    gen_synthetic,
    load_csv,
    save_csv,
    split,
    test_error,
    zeta,
)
from .dictionary import (
    GAUSS_WIDTH_GRID,
    KERNEL_KINDS,
    Dictionary,
    atom_correlations,
    build_dictionary,
    load_dictionary,
    save_dictionary,
)
from .estimator import FCGBoostingClassifier
from .losses import (
    LOSSES,
    CubedHinge,
    Hinge,
    MarginLoss,
    Square,
    SquaredHinge,
    empirical_risk,
    get_loss,
    prox_squared_hinge,
    risk_gradient,
)
from .serialize import ModelBundle, load_model, save_model
from .solver import (
    REFERENCE_ADMM,
    AdmmConfig,
    AdmmState,
    GdConfig,
    SolveTrace,
    SolverNumericalError,
    admm_solve,
    cache_factorization,
    gd_solve,
)

__version__ = "0.1.0"
