"""Two-state Markov description of the bit stream."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..maps import NonIdealParams, PiecewiseAffineMap
from ..validation import check_bits
from .density import DensityHistogram

__all__ = [
    "MarkovModel",
    "transition_probs_numeric",
    "transition_probs_analytic",
    "bias_of",
    "doubled_bias_of",
    "autocorrelation",
    "simulate_markov_bits",
    "empirical_transition_counts",
    "MarkovBitModel",
]


@dataclass(frozen=True)
class MarkovModel:
    """Chain with ``p = P(0|0)`` and ``q = P(1|1)``.

    ``lambda1 = |p + q - 1|`` is the second eigenvalue and
    ``c = -log2(lambda1)`` the correlation exponent (``inf`` when the bits
    are uncorrelated). ``b`` is the stationary bias ``|1/2 - P(1)|``;
    ``b_doubled = |p - q| / (2 - p - q)`` is kept for side-by-side reporting.
    """

    p: float
    q: float
    b: float = field(init=False)
    b_doubled: float = field(init=False)
    lambda1: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (0 < p < 1 and 0 < q < 1):
            raise ValueError(f"transition probabilities must lie in (0, 1), got p={p}, q={q}")
        lam = abs(p + q - 1)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lambda1", lam)
        object.__setattr__(self, "c", -math.log2(lam) if lam > 0 else math.inf)
        object.__setattr__(self, "b", bias_of(self))
        object.__setattr__(self, "b_doubled", doubled_bias_of(self))

    @property
    def stationary(self) -> tuple[float, float]:
        """``(P(0), P(1))``."""
        p0 = (1 - self.q) / (2 - self.p - self.q)
        return p0, 1 - p0

    @property
    def transition_matrix(self) -> np.ndarray:
        return np.array([[self.p, 1 - self.p], [1 - self.q, self.q]])

    def lag_correlation(self, k: int) -> float:
        """Pearson correlation of bits ``k`` apart (signed)."""
        return (self.p + self.q - 1) ** k

    def to_dict(self) -> dict:
        return {
            "p": self.p, "q": self.q, "bias_exact": self.b, "bias_doubled": self.b_doubled,
            "lambda1": self.lambda1, "c": None if math.isinf(self.c) else self.c,
        }


def bias_of(model: MarkovModel) -> float:
    """Stationary bias ``|1/2 - (1-q)/(2-p-q)| = |p-q| / (2 (2-p-q))``."""
    denom = 2.0 - model.p - model.q
    if denom <= 0:
        raise ValueError("p + q = 2 is an absorbing chain with no unique stationary law")
    return abs(model.p - model.q) / (2.0 * denom)


def doubled_bias_of(model: MarkovModel) -> float:
    """``|p-q| / (2-p-q)``, twice the stationary bias."""
    denom = 2.0 - model.p - model.q
    if denom <= 0:
        raise ValueError("p + q = 2 is an absorbing chain with no unique stationary law")
    return abs(model.p - model.q) / denom


def transition_probs_numeric(fmap: PiecewiseAffineMap, params: NonIdealParams,
                             density: DensityHistogram, *, atol: float = 1e-6) -> MarkovModel:
    """Integrate ``density`` over the four preimage intervals of the bit partition.

    ``p`` is the mass of ``(0, x_t1)`` over that of ``(0, x_b)``; ``q`` the
    mass of ``(x_b, x_t2)`` over that of ``(x_b, 1)``.
    """
    edges = density.bin_edges
    if abs(edges[0]) > atol or abs(edges[-1] - 1) > atol:
        raise ValueError("density must live on (0, 1)")
    if abs(density.total_mass() - 1) > atol:
        raise ValueError(f"density integrates to {density.total_mass():.9f}, not 1")
    for x_t in (params.x_t1, params.x_t2):
        if abs(fmap(x_t) - params.x_b) > 1e-9:
            raise ValueError("params do not describe this map")
    m_t1 = density.mass(0.0, params.x_t1)
    m_b = density.mass(0.0, params.x_b)
    m_t2 = density.mass(params.x_b, params.x_t2)
    m_hi = density.mass(params.x_b, 1.0)
    return MarkovModel(m_t1 / m_b, m_t2 / m_hi)


def transition_probs_analytic(dg1: float, dg2: float) -> MarkovModel:
    """First-order ``p = 1/2 + 3/2 dg1 + 2 dg2`` and ``q = 1/2 - dg2/2``."""
    for d in (dg1, dg2):
        if abs(d) > 1 / 16:
            raise ValueError(f"slope deltas must satisfy |d| <= 1/16, got {d}")
    return MarkovModel(0.5 + 1.5 * dg1 + 2.0 * dg2, 0.5 - 0.5 * dg2)


def autocorrelation(bits, max_lag: int) -> np.ndarray:
    """Pearson autocorrelation of the +-1 mapped bits at lags ``1..max_lag``."""
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    x = check_bits(bits, min_length=100 * max_lag).astype(float) * 2 - 1
    out = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        a, b = x[:-k], x[k:]
        a = a - a.mean()
        b = b - b.mean()
        denom = math.sqrt(float(a @ a) * float(b @ b))
        out[k - 1] = float(a @ b) / denom if denom > 0 else 0.0
    return out


def simulate_markov_bits(p: float, q: float, n: int, seed=None) -> np.ndarray:
    """Sample ``n`` bits of the stationary two-state chain.

    Runs of zeros are geometric with stopping probability ``1-p``, runs of
    ones with ``1-q``; the first bit is drawn from the stationary law.
    """
    model = MarkovModel(p, q)
    rng = np.random.default_rng(seed)
    first = int(rng.random() < model.stationary[1])
    pieces = []
    total = 0
    state = first
    while total < n:
        k = max(16, int((n - total) / (1 / (1 - p) + 1 / (1 - q))) + 16)
        zeros = rng.geometric(1 - p, k)
        ones = rng.geometric(1 - q, k)
        lengths = np.empty(2 * k, dtype=np.int64)
        if state == 0:
            lengths[0::2], lengths[1::2] = zeros, ones
        else:
            lengths[0::2], lengths[1::2] = ones, zeros
        values = np.empty(2 * k, dtype=np.uint8)
        values[0::2], values[1::2] = state, 1 - state
        pieces.append(np.repeat(values, lengths))
        total += int(lengths.sum())
        # the batch has an even number of runs, so the next one restarts at `state`
    return np.concatenate(pieces)[:n]


def empirical_transition_counts(bits) -> np.ndarray:
    """2x2 matrix ``C[a, b]`` = number of ``a -> b`` transitions."""
    x = check_bits(bits, min_length=2)
    code = 2 * x[:-1].astype(np.int64) + x[1:]
    return np.bincount(code, minlength=4).reshape(2, 2)


class MarkovBitModel(BaseEstimator):
    """Fit a two-state chain to a bit sequence.

    After :meth:`fit`: ``p_``, ``q_``, ``model_`` (a :class:`MarkovModel`),
    ``counts_`` and the binomial standard errors ``p_sigma_``, ``q_sigma_``.
    """

    def fit(self, X, y=None):
        counts = empirical_transition_counts(X)
        n0, n1 = counts.sum(axis=1)
        if n0 == 0 or n1 == 0:
            raise ValueError("both bit values must occur to estimate transitions")
        self.counts_ = counts
        self.p_ = counts[0, 0] / n0
        self.q_ = counts[1, 1] / n1
        self.p_sigma_ = math.sqrt(self.p_ * (1 - self.p_) / n0)
        self.q_sigma_ = math.sqrt(self.q_ * (1 - self.q_) / n1)
        eps = 1.0 / (n0 + n1)
        self.model_ = MarkovModel(min(max(self.p_, eps), 1 - eps), min(max(self.q_, eps), 1 - eps))
        return self

    def sample(self, n: int, seed=None) -> np.ndarray:
        check_is_fitted(self, "model_")
        return simulate_markov_bits(self.model_.p, self.model_.q, n, seed)

    def score(self, X, y=None) -> float:
        """Mean log-likelihood per transition under the fitted chain."""
        check_is_fitted(self, "model_")
        counts = empirical_transition_counts(X)
        logT = np.log(self.model_.transition_matrix)
        return float((counts * logT).sum() / counts.sum())
