"""Smoothed Cholesky estimation of covariance and precision matrices.

The estimator minimizes the Gaussian loss tr(L S L') - 2 sum(log L_kk)
over lower-triangular factors L of the precision matrix, adding a
roughness penalty down each subdiagonal.  Minimization runs blockwise
over subdiagonals; every block update is an exact penalized least
squares solve, so the objective never increases.
"""

from .bcd import FitResult, complexity_probe, fit, sweep_once
from .errors import (
    InvalidCovarianceError,
    InvalidFactorError,
    InvalidModelError,
    NumericalError,
    SmoothCholError,
)
from .metrics import (
    conditional_forecast,
    forecast_error,
    kl_loss,
    matrix_error,
    support_roc,
    total_variation,
)
from .model import (
    PENALTY_FAMILIES,
    CholFactor,
    FitConfig,
    ModifiedChol,
    PenaltySpec,
    SampleCov,
    covariance,
    from_modified,
    precision,
    to_modified,
)
from .penalties import (
    solve_diagonal,
    solve_fused,
    solve_hp,
    solve_sparse_fused,
    solve_subdiagonal,
    solve_trend,
    sparse_threshold,
)
from .simulate import CASES, CaseSpec, make_truth, sample_gaussian, standardize
from .tuning import TuneGrid, TuneResult, bic_score, cv_score, effective_df, tune

__version__ = "0.1.0"

__all__ = [
    "CASES",
    "CholFactor",
    "CaseSpec",
    "FitConfig",
    "FitResult",
    "InvalidCovarianceError",
    "InvalidFactorError",
    "InvalidModelError",
    "ModifiedChol",
    "NumericalError",
    "PENALTY_FAMILIES",
    "PenaltySpec",
    "SampleCov",
    "SmoothCholError",
    "TuneGrid",
    "TuneResult",
    "bic_score",
    "complexity_probe",
    "conditional_forecast",
    "covariance",
    "cv_score",
    "effective_df",
    "fit",
    "forecast_error",
    "from_modified",
    "kl_loss",
    "make_truth",
    "matrix_error",
    "precision",
    "sample_gaussian",
    "solve_diagonal",
    "solve_fused",
    "solve_hp",
    "solve_sparse_fused",
    "solve_subdiagonal",
    "solve_trend",
    "sparse_threshold",
    "standardize",
    "support_roc",
    "sweep_once",
    "to_modified",
    "total_variation",
    "tune",
    "__version__",
]
