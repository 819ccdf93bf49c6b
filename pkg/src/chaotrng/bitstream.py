"""Packed bit sequences and their on-disk formats.

Binary files hold the bits packed MSB-first with zero padding in the last
byte; a JSON sidecar (``<file>.json``) carries the bit count and generation
metadata. An ASCII ``01`` export exists for external test suites.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

__all__ = ["BitStream", "CorruptStream", "sidecar_path", "read_bits"]


class CorruptStream(ValueError):
    pass


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


@dataclass(frozen=True, eq=False)
class BitStream:
    packed: np.ndarray
    length: int
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        packed = np.ascontiguousarray(self.packed, dtype=np.uint8)
        length = int(self.length)
        if length < 0 or packed.size != (length + 7) // 8:
            raise CorruptStream(f"{packed.size} packed bytes cannot hold exactly {length} bits")
        tail = length % 8
        if tail and packed[-1] & ((1 << (8 - tail)) - 1):
            raise CorruptStream("padding bits in the final byte must be zero")
        packed.setflags(write=False)
        object.__setattr__(self, "packed", packed)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def from_bits(cls, bits, meta: Mapping[str, Any] | None = None) -> "BitStream":
        arr = np.asarray(bits)
        if arr.ndim != 1:
            arr = arr.ravel()
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise ValueError("bits must be 0 or 1")
        arr = arr.astype(np.uint8, copy=False)
        return cls(np.packbits(arr), arr.size, meta or {})

    def to_array(self) -> np.ndarray:
        return np.unpackbits(self.packed, count=self.length)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.packed, other.packed)

    __hash__ = None

    def with_meta(self, **extra) -> "BitStream":
        return BitStream(self.packed, self.length, {**self.meta, **extra})

    def fraction_ones(self) -> float:
        if not self.length:
            return float("nan")
        return float(self.to_array().mean())

    # --- files -----------------------------------------------------------

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.packed.tobytes())
        sidecar_path(path).write_text(
            json.dumps({"length": self.length, "meta": _jsonable(self.meta)}, indent=2, sort_keys=True)
        )
        return path

    @classmethod
    def load(cls, path: str | Path) -> "BitStream":
        path = Path(path)
        raw = np.frombuffer(path.read_bytes(), dtype=np.uint8)
        side = sidecar_path(path)
        if side.exists():
            info = json.loads(side.read_text())
            length, meta = int(info["length"]), info.get("meta", {})
        else:
            length, meta = raw.size * 8, {}
        if raw.size != (length + 7) // 8:
            raise CorruptStream(f"{path}: {raw.size} bytes on disk but sidecar says {length} bits")
        return cls(raw.copy(), length, meta)

    def save_ascii(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes((self.to_array() + ord("0")).tobytes())
        return path

    @classmethod
    def load_ascii(cls, path: str | Path, meta: Mapping[str, Any] | None = None) -> "BitStream":
        data = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
        data = data[(data == ord("0")) | (data == ord("1"))]
        return cls.from_bits(data - ord("0"), meta)


def read_bits(path: str | Path) -> BitStream:
    """Load either format: ``.txt``/``.ascii`` as ``01`` text, anything else as packed."""
    path = Path(path)
    if path.suffix.lower() in {".txt", ".ascii", ".asc"}:
        return BitStream.load_ascii(path)
    return BitStream.load(path)


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
