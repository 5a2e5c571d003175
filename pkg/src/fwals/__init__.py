"""Focused weighted-average least squares and competing focused averaging estimators."""

from .errors import (
    CapacityError,
    ConfigError,
    DataError,
    DomainError,
    FwalsError,
    MissingColumnError,
    NearSingularityError,
    NumericError,
    ParseError,
    RankError,
)
from .model import Dataset, SubmodelSelection, enumerate_submodels, load_dataset, submodel_masks
from .ortho import OrthoTransform, semi_orthogonalize
from .estimators import CoreEstimates, fit_core, submodel_beta1, submodel_beta1_all, wals_beta1
from .focus import FocusSpec, custom, eval_focus, focus_gradient, irf, linear, parse_focus
from .amse import AmseQuadratic, amse_objective, as_quadratic, build_components
from .weights import fic_weights, minimize_box, minimize_simplex, scalar_optimal_weight
from .priors import PriorSpec, prior_weight, wals_prior_estimate
from .methods import METHODS, EstimateResult, FitContext, estimate

__version__ = "0.1.0"
