"""Generalized autoregressive neural network models.

Generalized linear models for time series whose predictor is augmented by a
time-lagged single-hidden-layer network: exponential-family likelihoods,
analytic-score BFGS fitting, dispersion estimation, model selection,
recursive forecasting and simulation-based diagnostics.
"""

from .backend import BACKEND
from .exceptions import (ConfigError, DataError, DispersionOverflowError,
                         DomainError, FitError, GarnnError, SimulationError,
                         SupportError)
from .families import (Binomial, Family, Gamma, NegativeBinomial, Normal,
                       Poisson)
from .forecasting import (ForecastResult, StationarityReport,
                          StationarityThresholds,
                          calibrate_stationarity_thresholds, fitted_values,
                          forecast, simulate, stationarity_check)
from .io import (CovariateRecipe, Dataset, RunConfig, build_covariates,
                 design_from, load_series)
from .links import Identity, Link, Log, Logit, Reciprocal
from .model import (FitResult, GarnnSpec, ParamVector, SeriesFrame,
                    conditional_loglik, estimate_gamma_dispersion,
                    estimate_sigma2, eta_at, fit, profile_k, score)
from .network import (NetSpec, NetWeights, Standardizer, net_forward,
                      net_gradients, standardize)
from .optimize import (MinimizeResult, OptimizerControls, OptimizerTrace,
                       bfgs_minimize, finite_diff_grad)
from .selection import (DevianceTest, SelectionReport, aic, chisq_upper_tail,
                        deviance_chisq_test, deviance_f_test, f_upper_tail,
                        two_stage_select)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "GarnnError", "DomainError", "SupportError", "DataError", "ConfigError",
    "FitError", "SimulationError", "DispersionOverflowError",
    "Family", "Poisson", "Binomial", "NegativeBinomial", "Normal", "Gamma",
    "Link", "Log", "Logit", "Identity", "Reciprocal",
    "NetSpec", "NetWeights", "Standardizer", "standardize", "net_forward",
    "net_gradients",
    "GarnnSpec", "ParamVector", "SeriesFrame", "FitResult",
    "conditional_loglik", "score", "eta_at", "fit", "estimate_sigma2",
    "estimate_gamma_dispersion", "profile_k",
    "OptimizerControls", "OptimizerTrace", "MinimizeResult", "bfgs_minimize",
    "finite_diff_grad",
    "DevianceTest", "SelectionReport", "aic", "chisq_upper_tail",
    "f_upper_tail", "deviance_chisq_test", "deviance_f_test",
    "two_stage_select",
    "ForecastResult", "StationarityReport", "StationarityThresholds",
    "fitted_values", "forecast", "simulate", "stationarity_check",
    "calibrate_stationarity_thresholds",
    "CovariateRecipe", "Dataset", "RunConfig", "load_series",
    "build_covariates", "design_from",
]
