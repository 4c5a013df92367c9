"""Numerical laboratory for Bergman kernels of the punctured disc and of cusp forms."""

__version__ = "0.1.0"

from .logvalue import SignedLogValue
from .model_core import DomainError, ModelParams

__all__ = ["SignedLogValue", "DomainError", "ModelParams", "__version__"]
