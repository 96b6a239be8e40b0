"""Legendre-Galerkin collocation solver for a front-fixed prostate tumour growth model."""

__version__ = "0.1.0"

from .model import ModelParams, default_params  # noqa: E402
from .polybasis import TrialBasis, gauss_rule  # noqa: E402
from .stepper import TimeGrid, run, run_case  # noqa: E402

__all__ = ["ModelParams", "default_params", "TrialBasis", "gauss_rule", "TimeGrid", "run", "run_case", "__version__"]
