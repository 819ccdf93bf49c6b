"""Noisy orbit iteration, bit extraction and the pipelined stage ring."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import _kernels
from .bitstream import BitStream
from .maps import (
    MapKind,
    NonIdealParams,
    OutOfDomain,
    PiecewiseAffineMap,
    check_shared_domain,
    map_from_name,
)
from .variability import sample_slope_deltas

__all__ = [
    "SimConfig",
    "OrbitEscape",
    "iterate_orbit",
    "escape_time",
    "extract_bit",
    "bit_rule",
    "run_pipeline",
    "warmup_discard",
    "ChaoticBitGenerator",
]

_CHUNK = 1 << 20


class OrbitEscape(OutOfDomain):
    """An orbit left the guard band.

    ``index`` is the position in the state sequence; pipelines also fill
    ``stage`` and ``clock``.
    """

    def __init__(self, x, domain, guard, index, stage=None, clock=None):
        self.stage = stage
        self.clock = clock
        super().__init__(x, domain, guard, index)
        if stage is not None:
            self.args = (f"{self.args[0]} (stage {stage}, clock {clock})",)


@dataclass(frozen=True)
class SimConfig:
    n_bits: int
    noise_std: float = 1e-6
    seed: int = 0
    stages: int = 4
    discard: int = 0
    x0: float | str = "auto"

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if not 0 <= self.discard <= 10**6:
            raise ValueError("discard must lie in [0, 1e6]")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if isinstance(self.x0, str) and self.x0 != "auto":
            raise ValueError("x0 must be a number or 'auto'")


def _map_arrays(fmap: PiecewiseAffineMap):
    return fmap.uppers, fmap.slopes, fmap.intercepts


def iterate_orbit(fmap: PiecewiseAffineMap, x0: float, n: int, noise_std: float = 0.0, seed=None) -> np.ndarray:
    """Return ``n`` states starting at ``x0``: ``x[k+1] = f(x[k]) + eta[k]``.

    ``eta`` is Gaussian with standard deviation ``noise_std`` drawn from
    ``numpy.random.default_rng(seed)``. Raises :class:`OrbitEscape` when a
    state leaves the guard band.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if noise_std < 0:
        raise ValueError("noise_std must be non-negative")
    noise = (
        np.random.default_rng(seed).normal(0.0, noise_std, n - 1)
        if noise_std > 0
        else np.zeros(max(n - 1, 0))
    )
    out = np.empty(n)
    lo, hi = fmap.domain
    k = _kernels.orbit(*_map_arrays(fmap), lo, hi, fmap.guard, float(x0), noise, out)
    if k >= 0:
        x = x0 if k == 0 else fmap(out[k - 1]) + noise[k - 1]
        raise OrbitEscape(x, fmap.domain, fmap.guard, k)
    return out


def escape_time(
    fmap: PiecewiseAffineMap,
    x0: float,
    n: int,
    noise_std: float = 0.0,
    seed=None,
    kick_steps: Sequence[int] = (),
    kick_to: float | None = None,
) -> int | None:
    """Step at which the orbit leaves the guard band, or None if it survives ``n`` steps.

    At each step in ``kick_steps`` the state is forced to ``kick_to``
    (default: 0.03 past the upper domain boundary) before the map is applied.
    States are not stored, so ``n`` can be large.
    """
    lo, hi = fmap.domain
    if kick_to is None:
        kick_to = hi + 0.03
    rng = np.random.default_rng(seed)
    kicks_all = np.asarray(sorted(kick_steps), dtype=np.int64)
    x = float(x0)
    arrays = _map_arrays(fmap)
    for start in range(0, n, _CHUNK):
        size = min(_CHUNK, n - start)
        noise = rng.normal(0.0, noise_std, size) if noise_std > 0 else np.zeros(size)
        kicks = np.zeros(size, dtype=np.uint8)
        sel = kicks_all[(kicks_all >= start) & (kicks_all < start + size)]
        kicks[sel - start] = 1
        k, x = _kernels.survive(*arrays, lo, hi, fmap.guard, x, noise, kicks, float(kick_to))
        if k >= 0:
            return start + k
    return None


def bit_rule(fmap: PiecewiseAffineMap) -> tuple[bool, float]:
    """``(use_abs, threshold)``: bit is 1 iff ``value >= threshold``."""
    if fmap.kind is MapKind.ZIGZAG or "m" in fmap.meta:
        return True, float(fmap.meta.get("x_b", 0.5))
    if fmap.kind is MapKind.NONIDEAL_SYMMETRIC:
        return False, fmap.segments[0][1]
    lo, hi = fmap.domain
    return False, 0.5 * (lo + hi)


def extract_bit(kind: MapKind | str, params: NonIdealParams | PiecewiseAffineMap | None, x: float) -> int:
    """Threshold one state into a bit.

    Zigzag maps compare ``|x|`` with 1/2 (or with ``x_b`` when non-ideal
    params are given); the non-ideal tent form compares ``x`` with ``x_b``;
    tent and Bernoulli compare ``x`` with the domain midpoint, which needs
    the map itself as ``params`` (defaults assume the unit tent and (-1, 1)
    Bernoulli).
    """
    kind = MapKind(kind)
    if kind is MapKind.ZIGZAG:
        thr = params.x_b if isinstance(params, NonIdealParams) else 0.5
        return int(abs(x) >= thr)
    if kind is MapKind.NONIDEAL_SYMMETRIC:
        if not isinstance(params, NonIdealParams):
            raise ValueError("non-ideal bit extraction needs NonIdealParams")
        return int(x >= params.x_b)
    if isinstance(params, PiecewiseAffineMap):
        use_abs, thr = bit_rule(params)
        return int((abs(x) if use_abs else x) >= thr)
    mid = {MapKind.TENT: 0.5, MapKind.BERNOULLI: 0.0}.get(kind)
    if mid is None:
        raise ValueError(f"pass the map to extract bits for kind {kind.value!r}")
    return int(x >= mid)


def _initial_state(x0, noise_std, rng) -> float:
    if x0 != "auto":
        return float(x0)
    # the noise floor sets the start: 0 plus one noise sample, on the positive side
    return abs(float(rng.normal(0.0, noise_std))) if noise_std > 0 else 0.0


def run_pipeline(stage_maps: Sequence[PiecewiseAffineMap], config: SimConfig) -> BitStream:
    """Run ``config.discard + config.n_bits`` stage visits around the ring.

    One state circulates stage 0 -> 1 -> ... -> S-1 -> 0, each visit applying
    the stage map plus fresh noise and emitting one bit. Within a clock the
    stage bits are emitted in stage order, then the warm-up prefix is dropped.
    """
    stage_maps = list(stage_maps)
    if len(stage_maps) != config.stages:
        raise ValueError(f"config asks for {config.stages} stages, got {len(stage_maps)} maps")
    lo, hi = check_shared_domain(stage_maps)
    guard = min(m.guard for m in stage_maps)
    width = max(len(m.segments) for m in stage_maps)
    S = len(stage_maps)
    uppers = np.full((S, width), np.inf)
    slopes = np.ones((S, width))
    intercepts = np.zeros((S, width))
    nsegs = np.empty(S, dtype=np.int64)
    use_abs = np.empty(S, dtype=np.bool_)
    thresholds = np.empty(S)
    for i, m in enumerate(stage_maps):
        k = len(m.segments)
        uppers[i, :k], slopes[i, :k], intercepts[i, :k] = _map_arrays(m)
        nsegs[i] = k
        use_abs[i], thresholds[i] = bit_rule(m)

    rng = np.random.default_rng(config.seed)
    x = _initial_state(config.x0, config.noise_std, rng)
    if config.noise_std == 0 and config.x0 == "auto":
        warnings.warn("zero noise with x0='auto' starts at 0: the stream is deterministic", RuntimeWarning)
    total = config.discard + config.n_bits
    bits = np.empty(total, dtype=np.uint8)
    for start in range(0, total, _CHUNK):
        size = min(_CHUNK, total - start)
        noise = rng.normal(0.0, config.noise_std, size) if config.noise_std > 0 else np.zeros(size)
        t, x = _kernels.ring(
            uppers, slopes, intercepts, nsegs, lo, hi, guard, use_abs, thresholds,
            x, noise, start % S, bits[start:start + size],
        )
        if t >= 0:
            visit = start + t
            raise OrbitEscape(x, (lo, hi), guard, visit, stage=visit % S, clock=visit // S)
    meta = {
        "map_kinds": [m.kind.value for m in stage_maps],
        "stage_params": [dict(m.meta) for m in stage_maps],
        "seed": int(config.seed),
        "stages": config.stages,
        "discard": config.discard,
        "noise_std": config.noise_std,
        "x0": config.x0,
    }
    return BitStream.from_bits(bits[config.discard:], meta)


def warmup_discard(A: float, pd_over_n: float) -> int:
    """Warm-up visits needed for gain ``A`` to lift the noise floor to detection.

    ``ceil(log_A(P_d / N))``, with ratios landing on an exact power of ``A``
    not rounded up by floating-point error.
    """
    if not A > 1:
        raise ValueError(f"open-loop gain must exceed 1, got {A}")
    if not pd_over_n > 1:
        raise ValueError(f"detect-to-noise ratio must exceed 1, got {pd_over_n}")
    r = math.log(pd_over_n) / math.log(A)
    return math.ceil(r - 1e-9 * max(1.0, r))


class ChaoticBitGenerator(BaseEstimator):
    """Bit source built from a ring of chaotic stages.

    Parameters
    ----------
    map : {"zigzag", "tent", "bernoulli", "nonideal"}
    m : float
        Bifurcation parameter for ``map="zigzag"``.
    dg1, dg2 : float
        Slope deltas shared by every stage for ``map="nonideal"``.
    sigma_device : float or None
        When set (non-ideal map only), per-stage deltas are drawn with
        :func:`~chaotrng.variability.sample_slope_deltas` using ``seed``.
    stages, noise_std, seed, x0 :
        As in :class:`SimConfig`.
    discard : int or "auto"
        ``"auto"`` uses :func:`warmup_discard` with ``A = 2**stages`` and
        ``P_d/N = noise_std**-2``.
    """

    def __init__(self, map="zigzag", m=-2.0, dg1=0.0, dg2=0.0, sigma_device=None,
                 stages=4, noise_std=1e-6, seed=0, discard=0, x0="auto"):
        self.map = map
        self.m = m
        self.dg1 = dg1
        self.dg2 = dg2
        self.sigma_device = sigma_device
        self.stages = stages
        self.noise_std = noise_std
        self.seed = seed
        self.discard = discard
        self.x0 = x0

    def scenario(self):
        if self.map != "nonideal" or self.sigma_device is None:
            return None
        return sample_slope_deltas(self.sigma_device, self.stages, self.seed)

    def stage_maps(self) -> list[PiecewiseAffineMap]:
        scen = self.scenario()
        if scen is not None:
            return scen.stage_maps()
        fmap = map_from_name(self.map, m=self.m, dg1=self.dg1, dg2=self.dg2)
        return [fmap] * self.stages

    def resolved_discard(self) -> int:
        if self.discard != "auto":
            return int(self.discard)
        if self.noise_std <= 0:
            raise ValueError("discard='auto' needs a positive noise_std")
        return warmup_discard(2.0 ** self.stages, self.noise_std ** -2)

    def generate(self, n_bits: int) -> BitStream:
        config = SimConfig(
            n_bits=n_bits, noise_std=self.noise_std, seed=self.seed, stages=self.stages,
            discard=self.resolved_discard(), x0=self.x0,
        )
        stream = run_pipeline(self.stage_maps(), config)
        extra = {"generator": self.get_params()}
        scen = self.scenario()
        if scen is not None:
            extra["scenario"] = scen.to_dict()
        return stream.with_meta(**extra)
