"""Vector time series with random coefficient matrices.

Simulation, theoretical moments, maximum-likelihood fitting and the
continuum limit of random matrix products.
"""

__version__ = "0.1.0"

from .ensembles import (MatrixDistribution, NoiseDistribution, RngStream, preset_goe,
                        preset_gue, sample_matrices, sample_matrix, sample_noise,
                        sample_noises, tied_matrix)
from .errors import (ConfigError, DegenerateLikelihoodError, DivergenceError,
                     InitializationError, InsufficientDataError, NumericalError, RmtsError,
                     SeriesParseError, ShapeError, SingularMatrixError,
                     UnsupportedEnsembleError)
from .likelihood import FitResult, Params, TyingScheme, fit, nll
from .model import (DrawLog, RmtsModel, SeriesData, closed_form_solution, closed_form_trajectory,
                    companion_draws,
                    companion_form, companion_initial, product_V, replay, simulate)
from .moments import MomentReport, convergence_report, mc_moments
from .optimize import OptimizeResult, nelder_mead, powell
from .rmde import RmexpConfig, rmexp_moment_check, rmexp_sample, rmexp_scalar_density

__all__ = [
    "ConfigError", "DegenerateLikelihoodError", "DivergenceError", "DrawLog", "FitResult",
    "InitializationError", "InsufficientDataError", "MatrixDistribution", "MomentReport",
    "NoiseDistribution", "NumericalError", "OptimizeResult", "Params", "RmexpConfig",
    "RmtsError", "RmtsModel", "RngStream", "SeriesData", "SeriesParseError", "ShapeError",
    "SingularMatrixError", "TyingScheme", "UnsupportedEnsembleError", "closed_form_solution", "closed_form_trajectory",
    "companion_draws", "companion_form", "companion_initial", "convergence_report", "fit",
    "mc_moments", "nelder_mead", "nll", "powell", "preset_goe", "preset_gue", "product_V",
    "replay", "rmexp_moment_check", "rmexp_sample", "rmexp_scalar_density", "sample_matrices",
    "sample_matrix", "sample_noise", "sample_noises", "simulate", "tied_matrix",
]
