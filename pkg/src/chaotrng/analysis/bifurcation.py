"""Bifurcation sweeps of the generalized zigzag family."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import _kernels
from ..maps import make_generalized_zigzag

__all__ = ["BifurcationResult", "bifurcation_diagram", "parameter_grid"]


@dataclass(frozen=True, eq=False)
class BifurcationResult:
    """``states[i]`` holds the kept states for ``m[i]``; unstable rows are NaN."""

    m: np.ndarray
    states: np.ndarray
    unstable: np.ndarray

    def rows(self):
        for mi, row, bad in zip(self.m, self.states, self.unstable):
            if bad:
                yield float(mi), "unstable"
            else:
                for x in row:
                    yield float(mi), float(x)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "x"])
            for mi, x in self.rows():
                w.writerow([repr(mi), x if isinstance(x, str) else repr(x)])
        return path

    def select(self, lo: float, hi: float) -> np.ndarray:
        """Kept states of stable runs with ``lo < m < hi``, one row per m."""
        mask = (self.m > lo) & (self.m < hi) & ~self.unstable
        return self.states[mask]


def parameter_grid(m_lo: float, m_hi: float, n_m: int) -> np.ndarray:
    """``n_m`` equally spaced cell midpoints of ``[m_lo, m_hi]``.

    Midpoints keep the sweep off the closed ends, so ``[-3, 3]`` never
    evaluates the marginal ``|m| = 3`` maps.
    """
    step = (m_hi - m_lo) / n_m
    return m_lo + (np.arange(n_m) + 0.5) * step


def bifurcation_diagram(m_lo: float, m_hi: float, n_m: int, n_transient: int = 500,
                        n_keep: int = 200, x0: float = 1e-9, seed=None,
                        noise_std: float = 0.0) -> BifurcationResult:
    """Iterate the generalized zigzag for each ``m`` and keep post-transient states.

    Runs whose orbit leaves the guard band, and the degenerate ``m = 0``,
    are marked unstable rather than aborting the sweep.
    """
    if not -3 <= m_lo < m_hi <= 3:
        raise ValueError(f"sweep range must lie within [-3, 3] with m_lo < m_hi, got ({m_lo}, {m_hi})")
    if n_m < 1 or n_keep < 1:
        raise ValueError("n_m and n_keep must be positive")
    if n_transient < 500:
        raise ValueError("n_transient must be at least 500")
    ms = parameter_grid(m_lo, m_hi, n_m)
    rng = np.random.default_rng(seed)
    total = n_transient + n_keep
    states = np.full((n_m, n_keep), np.nan)
    unstable = np.zeros(n_m, dtype=bool)
    buf = np.empty(total)
    for i, m in enumerate(ms):
        noise = rng.normal(0.0, noise_std, total - 1) if noise_std > 0 else np.zeros(total - 1)
        if m == 0:
            unstable[i] = True
            continue
        fmap = make_generalized_zigzag(float(m))
        k = _kernels.orbit(fmap.uppers, fmap.slopes, fmap.intercepts, -1.0, 1.0, fmap.guard,
                           float(x0), noise, buf)
        if k >= 0:
            unstable[i] = True
        else:
            states[i] = buf[n_transient:]
    return BifurcationResult(ms, states, unstable)
