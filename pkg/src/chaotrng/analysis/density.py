"""Stationary densities of piecewise-affine maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..maps import PiecewiseAffineMap

__all__ = [
    "DensityHistogram",
    "FourStepDensity",
    "ConvergenceError",
    "empirical_density",
    "four_step_model",
    "ulam_matrix",
    "fp_fixed_point",
    "WARMUP_SAMPLES",
]

WARMUP_SAMPLES = 100


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"power iteration did not converge after {iterations} steps (L1 residual {residual:.3e})")


@dataclass(frozen=True, eq=False)
class DensityHistogram:
    """Piecewise-constant density: ``density[i]`` on ``[edges[i], edges[i+1])``."""

    bin_edges: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if edges.ndim != 1 or dens.shape != (edges.size - 1,):
            raise ValueError("need one density value per bin")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(dens < 0):
            raise ValueError("densities must be non-negative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "density", dens)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def total_mass(self) -> float:
        return float(np.sum(self.density * self.widths))

    def cdf(self, x):
        """Mass of the density below ``x`` (exact for the step function)."""
        cum = np.concatenate([[0.0], np.cumsum(self.density * self.widths)])
        return np.interp(x, self.bin_edges, cum)

    def mass(self, a: float, b: float) -> float:
        return float(self.cdf(b) - self.cdf(a))

    def to_csv(self, path) -> None:
        rows = np.column_stack([self.centers, self.density])
        np.savetxt(path, rows, delimiter=",", header="bin_center,density", comments="", fmt="%.10g")


def empirical_density(orbit, n_bins: int, domain: tuple[float, float] | None = None,
                      warmup: int = WARMUP_SAMPLES) -> DensityHistogram:
    """Normalized histogram of an orbit, skipping the first ``warmup`` samples.

    ``domain`` defaults to the range of the samples; pass the map domain to
    get comparable bins.
    """
    orbit = np.asarray(orbit, dtype=float)
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    if orbit.size < 10 * n_bins or orbit.size <= warmup:
        raise ValueError(f"need at least {10 * n_bins} samples (and more than the {warmup}-sample warm-up)")
    samples = orbit[warmup:]
    if domain is None:
        lo, hi = float(samples.min()), float(samples.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = domain
    counts, edges = np.histogram(samples, bins=n_bins, range=(lo, hi))
    if counts.sum() == 0:
        raise ValueError("no samples fall inside the domain")
    return DensityHistogram(edges, counts / (counts.sum() * np.diff(edges)))


@dataclass(frozen=True)
class FourStepDensity:
    """Four-level step approximation to the stationary density of the non-ideal map.

    Levels ``f0, f1, f2, f_u`` sit on ``(0,|d|), (|d|,2|d|), (2|d|,4|d|), (4|d|,1)``.
    """

    delta_o: float
    f0: float
    f1: float
    f2: float
    f_u: float

    @property
    def region_edges(self) -> tuple[float, float, float, float, float]:
        a = abs(self.delta_o)
        return (0.0, a, 2 * a, 4 * a, 1.0)

    @property
    def levels(self) -> tuple[float, float, float, float]:
        return (self.f0, self.f1, self.f2, self.f_u)

    def integral(self) -> float:
        e = self.region_edges
        return sum(h * (e[i + 1] - e[i]) for i, h in enumerate(self.levels))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.region_edges, x, side="right") - 1, 0, 3)
        out = np.asarray(self.levels)[idx]
        return np.where((x < 0) | (x > 1), 0.0, out)

    def as_histogram(self) -> DensityHistogram:
        return DensityHistogram(np.asarray(self.region_edges), np.asarray(self.levels))


def four_step_model(delta_o: float) -> FourStepDensity:
    """Step density for endpoint deviation ``delta_o`` (``0 < |delta_o| <= 1/16``).

    Positive ``delta_o`` leaves a gap at the bottom: levels ``0, f_u/2, 3f_u/4, f_u``
    with ``f_u = 1/(1 - 2 delta_o)``. Negative ``delta_o`` folds mass back:
    ``2f_u, 3f_u/2, 5f_u/4, f_u`` with ``f_u = 1/(1 + 2|delta_o|)`` from unit
    normalization.
    """
    d = float(delta_o)
    if d == 0 or abs(d) > 1 / 16:
        raise ValueError(f"four-step model needs 0 < |delta_o| <= 1/16, got {d}")
    if d > 0:
        fu = 1.0 / (1.0 - 2.0 * d)
        return FourStepDensity(d, 0.0, fu / 2, 0.75 * fu, fu)
    fu = 1.0 / (1.0 + 2.0 * abs(d))
    return FourStepDensity(d, 2.0 * fu, 1.5 * fu, 1.25 * fu, fu)


def ulam_matrix(fmap: PiecewiseAffineMap, n_bins: int) -> sparse.csr_matrix:
    """Column-stochastic Ulam approximation of the transfer operator.

    Column ``j`` spreads the mass of cell ``j`` over the cells covered by its
    affine image, proportionally to overlap length. Mass mapped outside the
    domain is dropped (columns then sum to less than one).
    """
    lo, hi = fmap.domain
    h = (hi - lo) / n_bins
    rows, cols, vals = [], [], []
    for j in range(n_bins):
        a0, a1 = lo + j * h, lo + (j + 1) * h
        for s_lo, s_hi, k, c in fmap.segments:
            u, v = max(a0, s_lo), min(a1, s_hi)
            if v <= u:
                continue
            y0, y1 = sorted((k * u + c, k * v + c))
            share = (v - u) / h
            span = y1 - y0
            i0 = max(int(np.floor((y0 - lo) / h)), 0)
            i1 = min(int(np.floor((y1 - lo) / h)), n_bins - 1)
            for i in range(i0, i1 + 1):
                overlap = min(y1, lo + (i + 1) * h) - max(y0, lo + i * h)
                if overlap > 0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(share * overlap / span)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n_bins, n_bins))


def fp_fixed_point(fmap: PiecewiseAffineMap, n_bins: int = 512, tol: float = 1e-10,
                   max_iter: int = 100_000) -> DensityHistogram:
    """Invariant density by power iteration of the Ulam matrix.

    Stops when successive iterates differ by less than ``tol`` in L1 (as
    probability vectors). Only expanding maps (every ``|slope| > 1``) are
    accepted.
    """
    if n_bins < 64:
        raise ValueError("n_bins must be at least 64")
    if np.any(np.abs(fmap.slopes) <= 1):
        raise ValueError("fp_fixed_point needs an expanding map (all |slopes| > 1)")
    P = ulam_matrix(fmap, n_bins)
    lo, hi = fmap.domain
    h = (hi - lo) / n_bins
    x = np.full(n_bins, 1.0 / n_bins)
    residual = np.inf
    for it in range(1, max_iter + 1):
        y = P @ x
        y /= y.sum()
        residual = float(np.abs(y - x).sum())
        x = y
        if residual < tol:
            break
    else:
        raise ConvergenceError(residual, max_iter)
    return DensityHistogram(np.linspace(lo, hi, n_bins + 1), x / h)
