"""Shrinkage estimation of covariance and partial correlation for compositional data."""

__version__ = "0.1.0"

from .composition import alr, alr_inverse, as_composition, as_counts, closure, clr
from .covariance import (
    CovMatrix,
    gamma_to_sigma,
    logratio_to_omega,
    omega_to_gamma,
    omega_to_sigma,
    partial_correlation,
    pseudoinverse,
    sample_covariance,
    sigma_to_gamma,
)
from .errors import CodaError
from .imputation import impute, impute_czm, impute_freq_shrink
from .lu import (
    dilution_experiment,
    lu_determinant,
    lu_gamma,
    lu_partial_correlation,
    lu_sigma,
    lu_sigma_inverse,
)
from .shrinkage import (
    ShrinkageEstimate,
    WishartPrior,
    bayes_equivalence,
    estimate_lambda_diagonal,
    estimate_lambda_general,
    lu_target_alr,
    lu_target_clr,
    shrink,
    shrink_basis_pipeline,
    shrink_logratio_direct,
)
from .simulation import logistic_normal_logdensity, sample_logistic_normal

__all__ = [
    "CodaError", "CovMatrix", "ShrinkageEstimate", "WishartPrior",
    "alr", "alr_inverse", "as_composition", "as_counts", "bayes_equivalence",
    "closure", "clr", "dilution_experiment", "estimate_lambda_diagonal",
    "estimate_lambda_general", "gamma_to_sigma", "impute", "impute_czm",
    "impute_freq_shrink", "logistic_normal_logdensity", "logratio_to_omega",
    "lu_determinant", "lu_gamma", "lu_partial_correlation", "lu_sigma",
    "lu_sigma_inverse", "lu_target_alr", "lu_target_clr", "omega_to_gamma",
    "omega_to_sigma", "partial_correlation", "pseudoinverse", "sample_covariance",
    "sample_logistic_normal", "shrink", "shrink_basis_pipeline",
    "shrink_logratio_direct", "sigma_to_gamma",
]
