"""Supervised multi-view biclustering with exponential-family views."""

from .estimator import SupervisedBiclustering
from .exceptions import (BiclusterError, ConfigError, InvalidDataError, InvalidFamilyError,
                         NumericalError, SearchFailure, SelectionError, ShapeError)
from .expfam import BERNOULLI, GAUSSIAN, POISSON, Family, get_family
from .fit import FitConfig, fit, initialize, refit_beta
from .model import BiclusterResult, ModelParams, OutcomeSpec, ViewMatrix
from .predict import PredictionResult, predict
from .selection import SearchSpace, bic, ebic, random_search, select_k
from .simulation import SimConfig, generate

__version__ = "0.1.0"

__all__ = [
    "SupervisedBiclustering", "BiclusterError", "ConfigError", "InvalidDataError",
    "InvalidFamilyError", "NumericalError", "SearchFailure", "SelectionError", "ShapeError",
    "BERNOULLI", "GAUSSIAN", "POISSON", "Family", "get_family", "FitConfig", "fit",
    "initialize", "refit_beta", "BiclusterResult", "ModelParams", "OutcomeSpec",
    "ViewMatrix", "PredictionResult", "predict", "SearchSpace", "bic", "ebic",
    "random_search", "select_k", "SimConfig", "generate",
]
