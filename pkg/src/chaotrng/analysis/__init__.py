"""Densities, Markov statistics and bifurcation sweeps."""
from .bifurcation import BifurcationResult, bifurcation_diagram, parameter_grid
from .density import (
    ConvergenceError,
    DensityHistogram,
    FourStepDensity,
    empirical_density,
    four_step_model,
    fp_fixed_point,
    ulam_matrix,
)
from .markov import (
    MarkovBitModel,
    MarkovModel,
    autocorrelation,
    bias_of,
    empirical_transition_counts,
    doubled_bias_of,
    simulate_markov_bits,
    transition_probs_analytic,
    transition_probs_numeric,
)

__all__ = [
    "BifurcationResult",
    "ConvergenceError",
    "DensityHistogram",
    "FourStepDensity",
    "MarkovBitModel",
    "MarkovModel",
    "autocorrelation",
    "bias_of",
    "bifurcation_diagram",
    "empirical_density",
    "empirical_transition_counts",
    "four_step_model",
    "fp_fixed_point",
    "doubled_bias_of",
    "parameter_grid",
    "simulate_markov_bits",
    "transition_probs_analytic",
    "transition_probs_numeric",
    "ulam_matrix",
]
