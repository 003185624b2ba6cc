"""Coresets for low-dimensional k-median: constructions, exact audits and hard instances."""

from .core import CenterSet, CostParams, WeightedPointSet, cost, relative_error
from .oned import Sorted1D, baseline_coreset, coreset_1d_1median, exact_kmedian_1d

__all__ = [
    "CenterSet",
    "CostParams",
    "WeightedPointSet",
    "Sorted1D",
    "baseline_coreset",
    "coreset_1d_1median",
    "cost",
    "exact_kmedian_1d",
    "relative_error",
]
__version__ = "0.1.0"
