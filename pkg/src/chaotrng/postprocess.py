"""Bias and correlation removal for raw generator output.

Two extractors are provided:

* Von Neumann pairing (``01 -> 0``, ``10 -> 1``, equal pairs dropped), which
  trades a variable output rate for exact unbiasing of independent bits.
* The XOR shift-register scheme ``z[n] = d[n] ^ z[n-l]``. A first pass
  (debiasing) with ``l`` chosen from the estimated chain decorrelation, and a
  second pass (decorrelation) with a longer coprime length.

The XOR passes are invertible linear filters: the raw bias cannot vanish,
it moves onto the parity ``y[n] ^ y[n-l] ^ y[n-l2] ^ y[n-l-l2]``. The second
length is therefore chosen so that parity spans at least ``min_span`` bits,
wider than the pattern windows downstream tests look at.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .analysis.markov import MarkovBitModel, MarkovModel
from .validation import as_like, check_bits

__all__ = [
    "DebiasConfig",
    "von_neumann",
    "xor_debias",
    "choose_l",
    "choose_second_l",
    "VonNeumannExtractor",
    "XorDebiaser",
    "DEFAULT_EPSILON",
    "DEFAULT_MIN_SPAN",
]

DEFAULT_EPSILON = 1e-6
DEFAULT_MIN_SPAN = 32


@dataclass(frozen=True)
class DebiasConfig:
    l: int
    stages: int = 4

    def __post_init__(self):
        if self.l < 2:
            raise ValueError(f"shift register length must be >= 2, got {self.l}")
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if math.gcd(self.stages, self.l) != 1:
            raise ValueError(f"register length {self.l} must be coprime with {self.stages} stages")


def von_neumann(bits):
    """Pairwise Von Neumann extraction; output length depends on the data."""
    x = check_bits(bits)
    pairs = x[: x.size // 2 * 2].reshape(-1, 2)
    out = pairs[pairs[:, 0] != pairs[:, 1], 0].copy()
    return as_like(out, bits, von_neumann=True)


def xor_debias(bits, config: DebiasConfig):
    """``z[n] = d[n] ^ z[n-l]`` from an all-zero register, first ``l`` outputs dropped."""
    l = config.l
    x = check_bits(bits)
    if x.size < l + 1:
        raise ValueError(f"need more than l={l} input bits, got {x.size}")
    n = x.size
    padded = np.zeros(-(-n // l) * l, dtype=np.uint8)
    padded[:n] = x
    # each residue class mod l is an independent running XOR
    z = np.bitwise_xor.accumulate(padded.reshape(-1, l), axis=0).ravel()[:n]
    passes = list(getattr(bits, "meta", {}).get("xor_passes", []))
    return as_like(z[l:], bits, xor_passes=passes + [l])


def choose_l(model: MarkovModel | float, epsilon: float = DEFAULT_EPSILON, stages: int = 4) -> int:
    """Smallest ``l >= 2`` with ``lambda1**l < epsilon`` and ``gcd(stages, l) = 1``."""
    lam = model.lambda1 if isinstance(model, MarkovModel) else float(model)
    if not 0 <= lam < 1:
        raise ValueError(f"need lambda1 < 1, got {lam}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    l = 2 if lam == 0 else max(2, math.ceil(math.log(epsilon) / math.log(lam)))
    while lam ** l >= epsilon:
        l += 1
    while math.gcd(stages, l) != 1:
        l += 1
    return l


def choose_second_l(l: int, stages: int = 4, min_span: int = DEFAULT_MIN_SPAN) -> int:
    """Decorrelation length: coprime with ``stages`` and ``l``, above ``l``, and ``l + l2 >= min_span``."""
    l2 = max(l + 1, min_span - l)
    while math.gcd(l2, stages) != 1 or math.gcd(l2, l) != 1:
        l2 += 1
    return l2


class VonNeumannExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer wrapping :func:`von_neumann`."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return von_neumann(X)


class XorDebiaser(TransformerMixin, BaseEstimator):
    """Shift-register debiasing (and optional decorrelation) pass.

    Parameters
    ----------
    l : int or "auto"
        Register length. ``"auto"`` fits a two-state chain to the training
        bits and applies :func:`choose_l`.
    stages : int
        Pipeline stage count; every register length is kept coprime with it.
    epsilon : float
        Residual correlation target for the automatic choice.
    passes : {1, 2}
        Two passes add the decorrelation register.
    l2 : int or "auto"
        Second register length; ``"auto"`` uses :func:`choose_second_l`.
    min_span : int
        Minimum ``l + l2`` for the automatic second length.

    Attributes
    ----------
    l_, l2_ : int
        Lengths in use after fitting (``l2_`` is None for one pass).
    markov_ : MarkovBitModel or None
        The chain fitted when ``l="auto"``.
    """

    def __init__(self, l="auto", stages=4, epsilon=DEFAULT_EPSILON, passes=2, l2="auto",
                 min_span=DEFAULT_MIN_SPAN):
        self.l = l
        self.stages = stages
        self.epsilon = epsilon
        self.passes = passes
        self.l2 = l2
        self.min_span = min_span

    def fit(self, X, y=None):
        if self.passes not in (1, 2):
            raise ValueError("passes must be 1 or 2")
        if self.l == "auto":
            self.markov_ = MarkovBitModel().fit(X)
            self.l_ = choose_l(self.markov_.model_, self.epsilon, self.stages)
        else:
            self.markov_ = None
            self.l_ = DebiasConfig(int(self.l), self.stages).l
        if self.passes == 2:
            if self.l2 == "auto":
                self.l2_ = choose_second_l(self.l_, self.stages, self.min_span)
            else:
                self.l2_ = DebiasConfig(int(self.l2), self.stages).l
        else:
            self.l2_ = None
        return self

    def transform(self, X):
        check_is_fitted(self, "l_")
        out = xor_debias(X, DebiasConfig(self.l_, self.stages))
        if self.l2_ is not None:
            out = xor_debias(out, DebiasConfig(self.l2_, self.stages))
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(["bit"], dtype=object)
