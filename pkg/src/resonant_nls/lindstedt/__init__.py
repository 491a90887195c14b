"""Lindstedt series engine: frequencies, recursion, tree oracle and scales."""
from .frequencies import FrequencyState
from .scales import ScaleAssignment, assign_scales, dyadic_scale, scale_threshold
from .series import (SeriesLadder, diagonal_propagator, ladder_lattice, measure_counterterms,
                     propagator, series_extend, series_ladder, series_start, series_sum,
                     signed_counterterms)
from .trees import (TreeNode, count_self_energies, detect_self_energy, enumerate_trees,
                    max_deviation, tree_coefficients, tree_oracle)

__all__ = [
    "FrequencyState", "ScaleAssignment", "assign_scales", "dyadic_scale", "scale_threshold",
    "SeriesLadder", "diagonal_propagator", "ladder_lattice", "measure_counterterms",
    "propagator", "series_extend", "series_ladder", "series_start", "series_sum",
    "signed_counterterms",
    "TreeNode", "count_self_energies", "detect_self_energy", "enumerate_trees",
    "max_deviation", "tree_coefficients", "tree_oracle",
]
