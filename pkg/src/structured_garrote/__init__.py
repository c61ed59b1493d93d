"""Structured nonnegative garrote with effect-heredity constraints."""

from .constraints import ConstraintSet, build, check_support
from .garrote import GarroteFit, InitialEstimate, SolutionPath, fit_initial, fit_lagrange, fit_path
from .glm import GlmFit, fit_glm_path, fit_mle, get_loss
from .ingest import Dataset, center, load_csv
from .terms import TermSet, dependence_sets, expand_quadratic, raw_coefficients
from .tuning import CvReport, cv_path, cv_paths, make_folds, select

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet", "CvReport", "Dataset", "GarroteFit", "GlmFit", "InitialEstimate",
    "SolutionPath", "TermSet", "build", "center", "check_support", "cv_path", "cv_paths",
    "dependence_sets", "expand_quadratic", "fit_glm_path", "fit_initial", "fit_lagrange",
    "fit_mle", "fit_path", "get_loss", "load_csv", "make_folds", "raw_coefficients", "select",
]
