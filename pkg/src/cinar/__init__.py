"""Count random fields on regular 2-D grids.

Simulation, estimation (moment, least-squares, and likelihood based), and
diagnostics for unilateral thinning-based count autoregressions with
Poisson or negative-binomial marginals, plus a censored (signed) variant.
"""

from .errors import CinarError, ConvergenceError, NumericalError, ValidationError
from .model import (
    CinarParams,
    CountGrid,
    ModelOrder,
    ParamsVerdict,
    SignPattern,
    alpha_phi_to_theta,
    lag_set,
    stationary_moments,
    theta_to_alpha_phi,
    validate_params,
)
from .innovations import (
    NbMarginalInnovation,
    PoissonInnovation,
    TabulatedInnovation,
    nb_params_from_targets,
)
from .simulate import SimConfig, binomial_thin, simulate_cinar, simulate_tobit_cinar
from .acf import (
    AcfTable,
    acf_closed_form_11,
    acf_recursion_residual,
    sample_acf,
    sample_acvf,
    theoretical_acf,
)
from .estimate import (
    FitDiagnostics,
    FitResult,
    cls_estimate,
    cml_estimate,
    cml_loglik,
    fd_hessian,
    observed_fisher_se,
    yw_estimate,
)
from .diagnose import (
    ConditionalPmf,
    DiagnosticsReport,
    PearsonResiduals,
    build_diagnostics,
    conditional_moments,
    conditional_pmf,
    information_criteria,
    multilateral_conditional_pmf,
    pearson_residuals,
    pit_histogram,
    tobit_conditional_pmf,
)
from .gridio import read_grid, write_grid
from .simstudy import (
    StudyArm,
    StudyResult,
    parse_arm,
    replication_seed,
    run_study,
    write_study_csv,
)

__all__ = [
    "CinarError",
    "ValidationError",
    "NumericalError",
    "ConvergenceError",
    "ModelOrder",
    "CinarParams",
    "SignPattern",
    "CountGrid",
    "ParamsVerdict",
    "lag_set",
    "validate_params",
    "theta_to_alpha_phi",
    "alpha_phi_to_theta",
    "stationary_moments",
    "PoissonInnovation",
    "NbMarginalInnovation",
    "TabulatedInnovation",
    "nb_params_from_targets",
    "SimConfig",
    "binomial_thin",
    "simulate_cinar",
    "simulate_tobit_cinar",
    "AcfTable",
    "sample_acvf",
    "sample_acf",
    "theoretical_acf",
    "acf_closed_form_11",
    "acf_recursion_residual",
    "FitResult",
    "FitDiagnostics",
    "yw_estimate",
    "cls_estimate",
    "cml_loglik",
    "cml_estimate",
    "fd_hessian",
    "observed_fisher_se",
    "ConditionalPmf",
    "PearsonResiduals",
    "DiagnosticsReport",
    "conditional_pmf",
    "conditional_moments",
    "tobit_conditional_pmf",
    "multilateral_conditional_pmf",
    "pearson_residuals",
    "pit_histogram",
    "information_criteria",
    "build_diagnostics",
    "read_grid",
    "write_grid",
    "StudyArm",
    "StudyResult",
    "parse_arm",
    "replication_seed",
    "run_study",
    "write_study_csv",
]

__version__ = "0.1.0"
