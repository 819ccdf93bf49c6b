"""Piecewise-affine chaotic maps.

Every map is a list of affine segments ``(lower, upper, slope, intercept)``
tiling its domain. A segment owns its upper endpoint, so ``x`` is handled by
the first segment with ``x <= upper``.

Points slightly outside the domain are pushed through the nearest boundary
segment (the guard band), which is what lets a simulation observe whether a
perturbed orbit falls back into the map or drifts away.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

__all__ = [
    "MapKind",
    "OutOfDomain",
    "PiecewiseAffineMap",
    "GeneralizedZigzagParams",
    "NonIdealParams",
    "make_generalized_zigzag",
    "make_zigzag",
    "make_tent",
    "make_bernoulli",
    "make_nonideal",
    "make_nonideal_zigzag",
    "evaluate",
    "MAX_SLOPE_DELTA",
]

#: First-order theory for slope deviations stops being meaningful past this.
MAX_SLOPE_DELTA = 0.25


class MapKind(str, Enum):
    ZIGZAG = "zigzag"
    TENT = "tent"
    BERNOULLI = "bernoulli"
    NONIDEAL_SYMMETRIC = "nonideal_symmetric"
    CUSTOM = "custom"


class OutOfDomain(ValueError):
    """Raised when a state lies beyond the guard band of a map."""

    def __init__(self, x: float, domain: tuple[float, float], guard: float, index: int | None = None):
        self.x = float(x)
        self.domain = domain
        self.guard = guard
        self.index = index
        where = "" if index is None else f" at step {index}"
        super().__init__(
            f"state {self.x!r}{where} is outside {domain} by more than the guard band {guard:g}"
        )


Segment = tuple[float, float, float, float]


@dataclass(frozen=True)
class PiecewiseAffineMap:
    """A chaotic map made of contiguous affine segments.

    Parameters
    ----------
    segments : sequence of (lower, upper, slope, intercept)
        Ordered, contiguous, covering ``domain`` exactly.
    domain : (lo, hi)
    kind : MapKind
    guard : float, optional
        Width of the extrapolation band on each side of the domain.
        Defaults to 10% of the domain width.
    meta : mapping
        Construction parameters (``m``, ``dg1``...) kept for provenance.
    """

    segments: tuple[Segment, ...]
    domain: tuple[float, float]
    kind: MapKind = MapKind.CUSTOM
    guard: float | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        segs = tuple(tuple(float(v) for v in s) for s in self.segments)
        lo, hi = (float(v) for v in self.domain)
        if not segs:
            raise ValueError("a map needs at least one segment")
        if not lo < hi:
            raise ValueError(f"empty domain {self.domain}")
        if segs[0][0] != lo or segs[-1][1] != hi:
            raise ValueError("segments must cover the domain exactly")
        for i, (a, b, k, _) in enumerate(segs):
            if not a < b:
                raise ValueError(f"segment {i} has non-positive width")
            if not math.isfinite(k) or k == 0:
                raise ValueError(f"segment {i} slope must be finite and nonzero")
            if i and segs[i - 1][1] != a:
                raise ValueError(f"segments {i - 1} and {i} are not contiguous")
        guard = 0.1 * (hi - lo) if self.guard is None else float(self.guard)
        if guard < 0:
            raise ValueError("guard band must be non-negative")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "kind", MapKind(self.kind))
        object.__setattr__(self, "guard", guard)
        object.__setattr__(self, "meta", dict(self.meta))

    # array views used by the compiled kernels
    @property
    def uppers(self) -> np.ndarray:
        return np.array([s[1] for s in self.segments])

    @property
    def slopes(self) -> np.ndarray:
        return np.array([s[2] for s in self.segments])

    @property
    def intercepts(self) -> np.ndarray:
        return np.array([s[3] for s in self.segments])

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([self.segments[0][0]] + [s[1] for s in self.segments])

    def __call__(self, x):
        return evaluate(self, x)

    def outside_distance(self, x):
        lo, hi = self.domain
        return np.maximum(lo - np.asarray(x, dtype=float), 0) + np.maximum(
            np.asarray(x, dtype=float) - hi, 0
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "domain": list(self.domain),
            "segments": [list(s) for s in self.segments],
            "guard": self.guard,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PiecewiseAffineMap":
        return cls(
            segments=tuple(tuple(s) for s in d["segments"]),
            domain=tuple(d["domain"]),
            kind=MapKind(d.get("kind", "custom")),
            guard=d.get("guard"),
            meta=d.get("meta", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseAffineMap":
        return cls.from_dict(json.loads(text))

    def same_segments(self, other: "PiecewiseAffineMap") -> bool:
        return self.domain == other.domain and self.segments == other.segments


def evaluate(fmap: PiecewiseAffineMap, x):
    """Apply ``fmap`` to a scalar or array.

    Raises :class:`OutOfDomain` for any point further than ``fmap.guard``
    from the domain.
    """
    arr = np.asarray(x, dtype=float)
    dist = fmap.outside_distance(arr)
    if np.any(dist > fmap.guard) or np.any(np.isnan(arr)):
        bad = arr[(dist > fmap.guard) | np.isnan(arr)] if arr.ndim else arr
        raise OutOfDomain(float(np.ravel(bad)[0]), fmap.domain, fmap.guard)
    uppers = fmap.uppers
    idx = np.minimum(np.searchsorted(uppers, arr, side="left"), len(uppers) - 1)
    y = fmap.slopes[idx] * arr + fmap.intercepts[idx]
    return float(y) if np.ndim(y) == 0 else y


@dataclass(frozen=True)
class GeneralizedZigzagParams:
    m: float

    def __post_init__(self):
        m = float(self.m)
        if not -3 < m < 3 or m == 0:
            raise ValueError(f"bifurcation parameter m must lie in (-3, 3) and be nonzero, got {m}")
        object.__setattr__(self, "m", m)


def make_generalized_zigzag(params: GeneralizedZigzagParams | float) -> PiecewiseAffineMap:
    """Three-branch zigzag family on (-1, 1] with bifurcation parameter ``m``.

    Outer branches ``-m(x -/+ 2/|m|)``, middle branch ``m x``; breakpoints at
    ``+-1/|m|``. For ``|m| <= 1`` the breakpoints fall outside the domain and
    only the middle branch remains. ``m = -2`` is the zigzag map.
    """
    if not isinstance(params, GeneralizedZigzagParams):
        params = GeneralizedZigzagParams(params)
    m = params.m
    a = 1.0 / abs(m)
    sgn = math.copysign(1.0, m)
    if a >= 1.0:
        segs = [(-1.0, 1.0, m, 0.0)]
    else:
        segs = [
            (-1.0, -a, -m, -2.0 * sgn),
            (-a, a, m, 0.0),
            (a, 1.0, -m, 2.0 * sgn),
        ]
    kind = MapKind.ZIGZAG if m == -2.0 else MapKind.CUSTOM
    return PiecewiseAffineMap(tuple(segs), (-1.0, 1.0), kind, meta={"m": m})


def make_zigzag() -> PiecewiseAffineMap:
    return make_generalized_zigzag(GeneralizedZigzagParams(-2.0))


def make_tent() -> PiecewiseAffineMap:
    return PiecewiseAffineMap(
        ((0.0, 0.5, 2.0, 0.0), (0.5, 1.0, -2.0, 2.0)), (0.0, 1.0), MapKind.TENT
    )


def make_bernoulli() -> PiecewiseAffineMap:
    # doubling shift on (-1, 1); the breakpoint 0 belongs to the left branch
    return PiecewiseAffineMap(
        ((-1.0, 0.0, 2.0, 1.0), (0.0, 1.0, 2.0, -1.0)), (-1.0, 1.0), MapKind.BERNOULLI
    )


@dataclass(frozen=True)
class NonIdealParams:
    """Geometry of the tent-form map with perturbed slopes.

    ``x_b`` is the exact rising/falling breakpoint ``1/(2(1+dg1))``;
    ``delta_o`` is the first-order endpoint ordinate ``-(dg1+dg2)``;
    ``x_t1`` and ``x_t2`` are the two preimages of ``x_b``.
    """

    dg1: float
    dg2: float
    x_b: float
    delta_o: float
    x_t1: float
    x_t2: float

    @classmethod
    def from_deltas(cls, dg1: float, dg2: float) -> "NonIdealParams":
        _check_delta(dg1, "dg1")
        _check_delta(dg2, "dg2")
        rise = 2.0 * (1.0 + dg1)
        fall = 2.0 * (1.0 + dg2)
        x_b = 1.0 / rise
        return cls(
            dg1=float(dg1),
            dg2=float(dg2),
            x_b=x_b,
            delta_o=-(dg1 + dg2),
            x_t1=x_b / rise,
            x_t2=x_b + (1.0 - x_b) / fall,
        )

    @property
    def endpoint(self) -> float:
        """Exact ordinate of the falling branch at ``x = 1``."""
        return 1.0 - 2.0 * (1.0 + self.dg2) * (1.0 - self.x_b)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("dg1", "dg2", "x_b", "delta_o", "x_t1", "x_t2")}


def _check_delta(d: float, name: str) -> None:
    if not abs(d) < MAX_SLOPE_DELTA:
        raise ValueError(f"|{name}| must be below {MAX_SLOPE_DELTA}, got {d}")


def make_nonideal(dg1: float, dg2: float) -> tuple[PiecewiseAffineMap, NonIdealParams]:
    """Tent-form map with rising slope ``2(1+dg1)`` and falling slope ``-2(1+dg2)``.

    When the falling branch crosses zero before ``x = 1`` (endpoint below 0)
    a third segment folds the negative part back, ``x -> |N(x)|``. That fold
    is exactly what the sign-alternating zigzag implementation does, and it
    keeps the map inside (0, 1). With ``dg1 = dg2 = 0`` the result equals
    :func:`make_tent` segment for segment.
    """
    params = NonIdealParams.from_deltas(dg1, dg2)
    rise = 2.0 * (1.0 + dg1)
    fall = 2.0 * (1.0 + dg2)
    x_b = params.x_b
    top = 1.0 + fall * x_b
    x_zero = top / fall
    if x_zero >= 1.0:
        segs = ((0.0, x_b, rise, 0.0), (x_b, 1.0, -fall, top))
    else:
        segs = ((0.0, x_b, rise, 0.0), (x_b, x_zero, -fall, top), (x_zero, 1.0, fall, -top))
    fmap = PiecewiseAffineMap(
        segs, (0.0, 1.0), MapKind.NONIDEAL_SYMMETRIC, meta={"dg1": float(dg1), "dg2": float(dg2)}
    )
    return fmap, params


def make_nonideal_zigzag(dg1: float, dg2: float) -> tuple[PiecewiseAffineMap, NonIdealParams]:
    """Sign-alternating counterpart of :func:`make_nonideal` on (-1, 1].

    ``z(x) = -sign(x) N(|x|)``, so ``|z|`` follows the folded tent-form map
    while the state itself never leaves the symmetric domain.
    """
    params = NonIdealParams.from_deltas(dg1, dg2)
    rise = 2.0 * (1.0 + dg1)
    fall = 2.0 * (1.0 + dg2)
    x_b = params.x_b
    top = 1.0 + fall * x_b
    segs = (
        (-1.0, -x_b, fall, top),
        (-x_b, x_b, -rise, 0.0),
        (x_b, 1.0, fall, -top),
    )
    fmap = PiecewiseAffineMap(
        segs, (-1.0, 1.0), MapKind.ZIGZAG, meta={"dg1": float(dg1), "dg2": float(dg2), "x_b": x_b}
    )
    return fmap, params


def map_from_name(name: str, **kw) -> PiecewiseAffineMap:
    """Build a map by CLI-style name (``zigzag``, ``tent``, ``bernoulli``, ``nonideal``)."""
    if name == "zigzag":
        return make_generalized_zigzag(kw.get("m", -2.0) if kw.get("m") is not None else -2.0)
    if name == "tent":
        return make_tent()
    if name == "bernoulli":
        return make_bernoulli()
    if name == "nonideal":
        return make_nonideal_zigzag(kw.get("dg1", 0.0), kw.get("dg2", 0.0))[0]
    raise ValueError(f"unknown map {name!r}")


def check_shared_domain(maps: Sequence[PiecewiseAffineMap]) -> tuple[float, float]:
    domains = {m.domain for m in maps}
    if len(domains) != 1:
        raise ValueError(f"stage maps must share a domain, got {sorted(domains)}")
    return domains.pop()
