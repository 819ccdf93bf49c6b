"""Simulation and analysis of chaotic-map random bit generators."""
from __future__ import annotations

from .bitstream import BitStream, CorruptStream, read_bits
from .dynamics import ChaoticBitGenerator, OrbitEscape, SimConfig, run_pipeline, warmup_discard
from .maps import (
    MapKind,
    NonIdealParams,
    OutOfDomain,
    PiecewiseAffineMap,
    make_bernoulli,
    make_generalized_zigzag,
    make_nonideal,
    make_nonideal_zigzag,
    make_tent,
    make_zigzag,
)
from .postprocess import DebiasConfig, VonNeumannExtractor, XorDebiaser, choose_l, von_neumann, xor_debias
from .stats import bias_estimate, run_battery
from .variability import VariationScenario, sample_slope_deltas

__version__ = "0.1.0"

__all__ = [
    "BitStream",
    "ChaoticBitGenerator",
    "CorruptStream",
    "DebiasConfig",
    "MapKind",
    "NonIdealParams",
    "OrbitEscape",
    "OutOfDomain",
    "PiecewiseAffineMap",
    "SimConfig",
    "VariationScenario",
    "VonNeumannExtractor",
    "XorDebiaser",
    "bias_estimate",
    "choose_l",
    "make_bernoulli",
    "make_generalized_zigzag",
    "make_nonideal",
    "make_nonideal_zigzag",
    "make_tent",
    "make_zigzag",
    "read_bits",
    "run_battery",
    "run_pipeline",
    "sample_slope_deltas",
    "von_neumann",
    "warmup_discard",
    "xor_debias",
    "__version__",
]
