"""Weighted Poincare bases, gradient-enhanced sparse chaos expansions, and
variance/derivative-based global sensitivity indices for products of
continuous 1-D measures."""

from .measures import Family, Measure1D, ProductMeasure, make_measure
from .weights import (
    ConditionProbe,
    ExistenceReport,
    Weight1D,
    check_existence,
    constant_weight,
    weight_from_grid,
    wlin_compute,
)
from .spectral import (
    Mesh1D,
    PoincareBasis1D,
    build_basis,
    export_basis_csv,
    export_eigenvalues_json,
    gram_deriv_matrix,
    gram_matrix,
    make_mesh,
)
from .chaos import (
    ChaosBasis,
    ChaosExpansion,
    TruncationSet,
    basis_matrix,
    coefficients_from_json,
    deriv_matrix,
    export_expansion_json,
    h1_column_norms,
    predict_many,
    total_degree_set,
)
from .regression import (
    DesignData,
    FitMethod,
    FitResult,
    expansion_from_fit,
    fit_combined,
    fit_deriv_aggregated,
    fit_standard,
    lars_loo,
)
from .gsa import (
    GsaReport,
    dgsm,
    first_sobol,
    make_report,
    sobol_dgsm_bound,
    total_sobol,
    variance,
)
from .bench import (
    BenchmarkModel,
    FLOOD_VARIABLES,
    flood_inputs,
    flood_model,
    get_model,
    reference_sobol,
    toy_model,
)
from .cli import ExperimentConfig, ExperimentResult, export_basis, run_experiment
from . import errors

__version__ = "0.1.0"

__all__ = [
    "Family", "Measure1D", "ProductMeasure", "make_measure",
    "Weight1D", "ConditionProbe", "ExistenceReport", "check_existence",
    "constant_weight", "weight_from_grid", "wlin_compute",
    "Mesh1D", "PoincareBasis1D", "build_basis", "make_mesh",
    "gram_matrix", "gram_deriv_matrix", "export_basis_csv", "export_eigenvalues_json",
    "TruncationSet", "ChaosBasis", "ChaosExpansion", "total_degree_set",
    "basis_matrix", "deriv_matrix", "h1_column_norms", "predict_many",
    "export_expansion_json", "coefficients_from_json",
    "DesignData", "FitMethod", "FitResult", "lars_loo",
    "fit_standard", "fit_deriv_aggregated", "fit_combined", "expansion_from_fit",
    "GsaReport", "variance", "total_sobol", "first_sobol", "dgsm",
    "make_report", "sobol_dgsm_bound",
    "BenchmarkModel", "FLOOD_VARIABLES", "toy_model", "flood_model",
    "flood_inputs", "get_model", "reference_sobol",
    "ExperimentConfig", "ExperimentResult", "run_experiment", "export_basis",
    "errors",
]
