"""Device mismatch to map-slope deviations, and Monte-Carlo scenarios."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .maps import MAX_SLOPE_DELTA, PiecewiseAffineMap, make_nonideal_zigzag

__all__ = [
    "DeviceVariation",
    "VariationScenario",
    "mirror_gain_factor",
    "sample_slope_deltas",
    "PIECE_SCALES",
    "TRUNCATE_SIGMAS",
]

#: Relative spread of the three linear pieces (first, second, third).
PIECE_SCALES = (1.0, 2.0, 0.5)
TRUNCATE_SIGMAS = 5.0
MAX_SIGMA_DEVICE = 0.1


@dataclass(frozen=True)
class DeviceVariation:
    """Relative device deviations entering the current-mirror gain.

    ``dVth_over_Vov`` is ``|dVth| / (Vgs - Vth)``; ``lam_dVds_term`` is
    ``lambda |dVds| / (1 + lambda Vds)``. Variation of lambda itself is
    neglected.
    """

    dW: float = 0.0
    dL: float = 0.0
    dVth_over_Vov: float = 0.0
    lam_dVds_term: float = 0.0

    def __post_init__(self):
        for name in ("dW", "dL", "dVth_over_Vov", "lam_dVds_term"):
            v = float(getattr(self, name))
            if not 0.0 <= v < 0.2:
                raise ValueError(f"{name} must lie in [0, 0.2), got {v}")
            object.__setattr__(self, name, v)


def mirror_gain_factor(v: DeviceVariation) -> float:
    """Worst-case multiplicative deviation of a mirror ratio from ``W2/W1``."""
    return 1.0 + 2.0 * v.dW + 2.0 * v.dL + 4.0 * v.dVth_over_Vov + 2.0 * v.lam_dVds_term


@dataclass(frozen=True)
class VariationScenario:
    """Per-stage slope deltas for one Monte-Carlo draw.

    ``deltas[i]`` is the ``(dg1, dg2)`` pair of stage ``i`` in tent form.
    ``third_piece`` keeps the draw for the outermost piece; the symmetric
    stage model mirrors the first piece onto it, so it is recorded for
    provenance only.
    """

    deltas: tuple[tuple[float, float], ...]
    sigma_device: float
    seed: int | None
    third_piece: tuple[float, ...] = field(default=())

    def __post_init__(self):
        deltas = tuple((float(a), float(b)) for a, b in self.deltas)
        for a, b in deltas:
            if abs(a) >= MAX_SLOPE_DELTA or abs(b) >= MAX_SLOPE_DELTA:
                raise ValueError(f"slope deltas must stay below {MAX_SLOPE_DELTA}")
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "third_piece", tuple(float(v) for v in self.third_piece))

    @property
    def stages(self) -> int:
        return len(self.deltas)

    def stage_maps(self) -> list[PiecewiseAffineMap]:
        return [make_nonideal_zigzag(a, b)[0] for a, b in self.deltas]

    def to_dict(self) -> dict:
        return {
            "deltas": [list(d) for d in self.deltas],
            "sigma_device": self.sigma_device,
            "seed": self.seed,
            "third_piece": list(self.third_piece),
        }

    @classmethod
    def from_dict(cls, d) -> "VariationScenario":
        return cls(
            deltas=tuple(tuple(x) for x in d["deltas"]),
            sigma_device=d["sigma_device"],
            seed=d.get("seed"),
            third_piece=tuple(d.get("third_piece", ())),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "VariationScenario":
        return cls.from_dict(json.loads(text))


def _truncated_normal(rng: np.random.Generator, scale: float, size: int) -> np.ndarray:
    out = rng.normal(0.0, scale, size)
    if scale == 0.0:
        return out
    bad = np.abs(out) > TRUNCATE_SIGMAS * scale
    while bad.any():
        out[bad] = rng.normal(0.0, scale, int(bad.sum()))
        bad = np.abs(out) > TRUNCATE_SIGMAS * scale
    return out


def sample_slope_deltas(
    sigma_device: float,
    stages: int,
    seed=None,
    scales: Sequence[float] = PIECE_SCALES,
) -> VariationScenario:
    """Draw independent zero-mean Gaussian slope deltas for every stage.

    Piece ``j`` gets standard deviation ``scales[j] * sigma_device``; draws
    beyond five standard deviations are redrawn.
    """
    sigma_device = float(sigma_device)
    if not 0.0 <= sigma_device <= MAX_SIGMA_DEVICE:
        raise ValueError(f"sigma_device must lie in [0, {MAX_SIGMA_DEVICE}], got {sigma_device}")
    if stages < 1:
        raise ValueError("stages must be positive")
    rng = np.random.default_rng(seed)
    pieces = [_truncated_normal(rng, s * sigma_device, stages) for s in scales]
    deltas = tuple(zip(pieces[0].tolist(), pieces[1].tolist()))
    third = tuple(pieces[2].tolist()) if len(pieces) > 2 else ()
    return VariationScenario(deltas, sigma_device, seed if seed is None else int(seed), third)
