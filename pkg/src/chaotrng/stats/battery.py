"""Run the test list as one battery and format the report."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..bitstream import BitStream, _jsonable, read_bits
from ..validation import check_bits
from . import nist
from .nist import TestResult

__all__ = ["BiasEstimate", "TestReport", "bias_estimate", "run_battery", "BATTERY", "TABLE_ROWS"]

# (test function, row labels in report order)
BATTERY = (
    (nist.approximate_entropy, ("apen",)),
    (nist.block_frequency, ("Block frequency",)),
    (nist.cumulative_sums, ("Cumulative sums (forward)", "Cumulative sums (reverse)")),
    (nist.dft, ("FFT",)),
    (nist.frequency, ("Frequency",)),
    (nist.linear_complexity, ("Linear complexity",)),
    (nist.longest_run, ("Longest run",)),
    (nist.non_overlapping_template, ("Non-periodic templates",)),
    (nist.overlapping_template, ("Overlapping templates",)),
    (nist.matrix_rank, ("Rank",)),
    (nist.runs, ("Runs",)),
    (nist.serial, ("Serial (1)", "Serial (2)")),
)
TABLE_ROWS = tuple(label for _, labels in BATTERY for label in labels)


class BiasEstimate(NamedTuple):
    """``fraction = |ones/n - 1/2|``; ``percent`` is that times 100 and
    ``doubled_percent`` the ``|P(1) - P(0)|`` convention."""

    fraction: float
    percent: float
    doubled_percent: float
    n: int


def bias_estimate(bits) -> BiasEstimate:
    x = check_bits(bits, min_length=10_000)
    frac = abs(np.count_nonzero(x) / x.size - 0.5)
    return BiasEstimate(frac, 100 * frac, 200 * frac, int(x.size))


@dataclass(frozen=True)
class TestReport:
    results: tuple[TestResult, ...]
    alpha: float
    bias: BiasEstimate
    meta: dict = field(default_factory=dict)

    __test__ = False

    @property
    def n_bits(self) -> int:
        return self.bias.n

    @property
    def bias_percent(self) -> float:
        """``|ones/n - 1/2|`` doubled, in percent (the ``|P(1) - P(0)|`` row convention)."""
        return self.bias.doubled_percent

    def __getitem__(self, name: str) -> TestResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def executed(self) -> tuple[TestResult, ...]:
        return tuple(r for r in self.results if r.skipped is None)

    @property
    def pass_count(self) -> int:
        return sum(bool(r.passed) for r in self.executed)

    @property
    def failed(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.executed if not r.passed)

    @property
    def all_passed(self) -> bool:
        return not self.failed and len(self.executed) == len(self.results)

    def reported_p_values(self) -> list[float]:
        """One value per table row, in row order; NaN for skipped tests."""
        out = []
        for r, (_, labels) in zip(self.results, BATTERY):
            out.extend(r.p_values if r.skipped is None else [float("nan")] * len(labels))
        return out

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "n_bits": self.n_bits,
            "tests": [r.to_dict() for r in self.results],
            "pass_count": self.pass_count,
            "executed": len(self.executed),
            "all_passed": self.all_passed,
            "bias": {"fraction": self.bias.fraction, "percent": self.bias.percent,
                     "doubled_percent": self.bias.doubled_percent},
            "meta": _jsonable(self.meta),
        }

    def to_json(self, path=None, indent: int = 2) -> str:
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def to_text(self) -> str:
        """Plain table: test, p-value, Success/Failure, followed by the bias row."""
        lines = [f"{'Test':<28}{'P-value':>12}  Result", "-" * 48]
        for r, (_, labels) in zip(self.results, BATTERY):
            for i, label in enumerate(labels):
                if r.skipped is not None:
                    lines.append(f"{label:<28}{'-':>12}  skipped ({r.skipped})")
                    continue
                p = r.p_values[i]
                ok = "Success" if r.passed else "Failure"
                if r.name == "non_overlapping_template":
                    lines.append(f"{label:<28}{100 * p:>11.2f}%  {ok}")
                else:
                    lines.append(f"{label:<28}{p:>12.6f}  {ok}")
        lines.append(f"{'bias':<28}{self.bias.percent:>11.3f}%  "
                     f"(|P(1)-P(0)| = {self.bias.doubled_percent:.3f}%)")
        lines.append(f"{self.pass_count}/{len(self.executed)} tests passed at alpha = {self.alpha}, "
                     f"n = {self.n_bits}")
        return "\n".join(lines)


def run_battery(bits, alpha: float = 0.01, *, n_jobs: int = 1, **config) -> TestReport:
    """Run every test on ``bits`` (a BitStream, bit array, or stream file path).

    ``config`` maps a test name to keyword overrides, e.g.
    ``serial={"m": 8}``. A stream file whose sidecar length disagrees with
    its payload raises :class:`~chaotrng.bitstream.CorruptStream`.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if isinstance(bits, (str, Path)):
        bits = read_bits(bits)
    meta = dict(bits.meta) if isinstance(bits, BitStream) else {}
    x = np.ascontiguousarray(check_bits(bits, min_length=10_000))
    unknown = set(config) - {fn.__name__ for fn, _ in BATTERY}
    if unknown:
        raise ValueError(f"unknown tests in config: {sorted(unknown)}")

    def run(fn):
        return fn(x, alpha, **config.get(fn.__name__, {}))

    fns = [fn for fn, _ in BATTERY]
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            results = tuple(pool.map(run, fns))
    else:
        results = tuple(run(fn) for fn in fns)
    return TestReport(results, alpha, bias_estimate(x), meta)
