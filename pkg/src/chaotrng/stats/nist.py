"""NIST SP 800-22 tests used by the battery.

Each test takes a 1-D ``uint8`` array of zeros and ones and returns a
:class:`TestResult`. Parameters default to the SP 800-22 recommendations.
Inputs shorter than a test's minimum length give a skipped result rather
than an exception.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import erfc, gammaincc, ndtr

from . import _kernels

__all__ = [
    "TestResult",
    "frequency",
    "block_frequency",
    "cumulative_sums",
    "runs",
    "longest_run",
    "dft",
    "non_overlapping_template",
    "overlapping_template",
    "matrix_rank",
    "serial",
    "approximate_entropy",
    "linear_complexity",
    "aperiodic_templates",
    "rank_probabilities",
    "OVERLAPPING_PI",
    "LINEAR_COMPLEXITY_PI",
]


@dataclass(frozen=True)
class TestResult:
    """Outcome of one test.

    ``p_values`` are the values the battery reports (two for cumulative sums
    and serial). ``passed`` is None when the test was skipped. ``details``
    holds test-specific extras such as per-template p-values.
    """

    name: str
    p_values: tuple[float, ...] = ()
    passed: bool | None = None
    statistic: float | None = None
    skipped: str | None = None
    details: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        out = {"name": self.name, "p_values": list(self.p_values), "passed": self.passed,
               "statistic": self.statistic}
        if self.skipped:
            out["skipped"] = self.skipped
        out.update({k: v for k, v in self.details.items() if k != "template_p_values"})
        return out


def _clip(p: float) -> float:
    return float(min(max(p, 0.0), 1.0))


def _result(name, pvals, alpha, statistic=None, **details) -> TestResult:
    pvals = tuple(_clip(p) for p in pvals)
    return TestResult(name, pvals, all(p >= alpha for p in pvals), statistic, None, details)


def _skip(name, n, need) -> TestResult:
    return TestResult(name, skipped=f"insufficient data: {n} bits, need {need}")


def _cdiv(a: int, b: int) -> int:
    """Integer division truncating toward zero, as in C."""
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def frequency(bits, alpha: float = 0.01) -> TestResult:
    n = bits.size
    if n < 100:
        return _skip("frequency", n, 100)
    s = 2 * int(np.count_nonzero(bits)) - n
    s_obs = abs(s) / math.sqrt(n)
    return _result("frequency", [erfc(s_obs / math.sqrt(2))], alpha, s_obs)


def block_frequency(bits, alpha: float = 0.01, M: int = 128) -> TestResult:
    n = bits.size
    N = n // M
    if n < 100 or N < 1:
        return _skip("block_frequency", n, max(100, M))
    pi = bits[: N * M].reshape(N, M).mean(axis=1)
    chi2 = 4.0 * M * float(np.sum((pi - 0.5) ** 2))
    return _result("block_frequency", [gammaincc(N / 2, chi2 / 2)], alpha, chi2, M=M)


def _cusum_p(n: int, z: int) -> float:
    sq = math.sqrt(n)
    s1 = 0.0
    for k in range(_cdiv(-_cdiv(n, z) + 1, 4), _cdiv(_cdiv(n, z) - 1, 4) + 1):
        s1 += ndtr((4 * k + 1) * z / sq) - ndtr((4 * k - 1) * z / sq)
    s2 = 0.0
    for k in range(_cdiv(-_cdiv(n, z) - 3, 4), _cdiv(_cdiv(n, z) - 1, 4) + 1):
        s2 += ndtr((4 * k + 3) * z / sq) - ndtr((4 * k + 1) * z / sq)
    return 1.0 - s1 + s2


def cumulative_sums(bits, alpha: float = 0.01) -> TestResult:
    """Forward and reverse maximal excursions; two p-values."""
    n = bits.size
    if n < 100:
        return _skip("cumulative_sums", n, 100)
    x = 2 * bits.astype(np.int64) - 1
    s = np.cumsum(x)
    z_fwd = int(np.max(np.abs(s)))
    z_rev = int(np.max(np.abs(s[-1] - np.concatenate([[0], s[:-1]]))))
    return _result("cumulative_sums", [_cusum_p(n, z_fwd), _cusum_p(n, z_rev)], alpha,
                   None, z_forward=z_fwd, z_reverse=z_rev)


def runs(bits, alpha: float = 0.01) -> TestResult:
    n = bits.size
    if n < 100:
        return _skip("runs", n, 100)
    pi = np.count_nonzero(bits) / n
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        # frequency prerequisite fails; the standard assigns p = 0
        return _result("runs", [0.0], alpha, None, prerequisite_failed=True)
    v = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    num = abs(v - 2 * n * pi * (1 - pi))
    p = erfc(num / (2 * math.sqrt(2 * n) * pi * (1 - pi)))
    return _result("runs", [p], alpha, float(v))


_LONGEST_RUN_TABLES = (
    # (min n, M, smallest class, largest class, probabilities)
    (750_000, 10_000, 10, 16, (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6272, 128, 4, 9, (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, 1, 4, (0.2148, 0.3672, 0.2305, 0.1875)),
)


def _longest_runs_per_row(blocks: np.ndarray) -> np.ndarray:
    N, M = blocks.shape
    padded = np.zeros((N, M + 2), dtype=np.int8)
    padded[:, 1:-1] = blocks
    d = np.diff(padded.ravel())
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    out = np.zeros(N, dtype=np.int64)
    if starts.size:
        np.maximum.at(out, starts // (M + 2), ends - starts)
    return out


def longest_run(bits, alpha: float = 0.01) -> TestResult:
    """Longest run of ones within blocks, block size picked from the input length."""
    n = bits.size
    for min_n, M, lo, hi, pi in _LONGEST_RUN_TABLES:
        if n >= min_n:
            break
    else:
        return _skip("longest_run", n, 128)
    N = n // M
    longest = _longest_runs_per_row(bits[: N * M].reshape(N, M))
    nu = np.bincount(np.clip(longest, lo, hi) - lo, minlength=hi - lo + 1)
    exp = N * np.asarray(pi)
    chi2 = float(np.sum((nu - exp) ** 2 / exp))
    K = len(pi) - 1
    return _result("longest_run", [gammaincc(K / 2, chi2 / 2)], alpha, chi2, M=M)


def dft(bits, alpha: float = 0.01) -> TestResult:
    """Spectral test with the ``sqrt(n ln 20)`` peak threshold."""
    n = bits.size
    if n < 1000:
        return _skip("dft", n, 1000)
    x = 2.0 * bits - 1.0
    mod = np.abs(np.fft.rfft(x)[: n // 2])
    T = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2
    n1 = int(np.count_nonzero(mod < T))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4)
    return _result("dft", [erfc(abs(d) / math.sqrt(2))], alpha, d)


@lru_cache(maxsize=None)
def aperiodic_templates(m: int = 9) -> tuple[int, ...]:
    """All ``m``-bit words with no proper prefix equal to a suffix (MSB first)."""
    out = []
    for w in range(1 << m):
        s = format(w, f"0{m}b")
        if not any(s[:k] == s[m - k:] for k in range(1, m)):
            out.append(w)
    return tuple(out)


def _window_codes(bits: np.ndarray, m: int) -> np.ndarray:
    """Integer value of every length-``m`` window (MSB first), non-cyclic."""
    n = bits.size - m + 1
    codes = np.zeros(n, dtype=np.int64)
    for j in range(m):
        codes = (codes << 1) | bits[j:j + n]
    return codes


def non_overlapping_template(bits, alpha: float = 0.01, m: int = 9, N: int = 8,
                             threshold: float | None = None) -> TestResult:
    """All aperiodic ``m``-bit templates over ``N`` blocks.

    The reported value is the fraction of templates whose p-value is at
    least ``alpha``. Aperiodic words cannot overlap themselves, so the
    skip-on-match count equals the plain window count. ``threshold`` defaults
    to the binomial acceptance bound ``1 - a - 3 sqrt(a (1 - a) / T)`` for
    ``T`` templates.
    """
    n = bits.size
    M = n // N
    templates = np.asarray(aperiodic_templates(m))
    mu_min = 5
    need = N * (mu_min * (1 << m) + m - 1)
    if n < need:
        return _skip("non_overlapping_template", n, need)
    mu = (M - m + 1) / 2 ** m
    var = M * (1 / 2 ** m - (2 * m - 1) / 2 ** (2 * m))
    W = np.empty((N, templates.size))
    for j in range(N):
        codes = _window_codes(bits[j * M:(j + 1) * M], m)
        W[j] = np.bincount(codes, minlength=1 << m)[templates]
    chi2 = np.sum((W - mu) ** 2, axis=0) / var
    pvals = np.clip(gammaincc(N / 2, chi2 / 2), 0.0, 1.0)
    frac = float(np.mean(pvals >= alpha))
    T = templates.size
    if threshold is None:
        threshold = 1 - alpha - 3 * math.sqrt(alpha * (1 - alpha) / T)
    return TestResult("non_overlapping_template", (frac,), frac >= threshold, None, None,
                      {"pass_fraction": frac, "threshold": threshold, "templates": T,
                       "template_p_values": pvals.tolist()})


OVERLAPPING_PI = (0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865)


def overlapping_template(bits, alpha: float = 0.01, m: int = 9, M: int = 1032) -> TestResult:
    """Overlapping occurrences of the all-ones ``m``-bit word per ``M``-bit block."""
    n = bits.size
    pi = np.asarray(OVERLAPPING_PI)
    N = n // M
    need_blocks = math.ceil(5 / pi.min())
    if N < need_blocks:
        return _skip("overlapping_template", n, need_blocks * M)
    blocks = bits[: N * M].reshape(N, M).astype(np.int32)
    cs = np.zeros((N, M + 1), dtype=np.int32)
    np.cumsum(blocks, axis=1, out=cs[:, 1:])
    hits = np.count_nonzero(cs[:, m:] - cs[:, :-m] == m, axis=1)
    K = pi.size - 1
    nu = np.bincount(np.minimum(hits, K), minlength=K + 1)
    chi2 = float(np.sum((nu - N * pi) ** 2 / (N * pi)))
    return _result("overlapping_template", [gammaincc(K / 2, chi2 / 2)], alpha, chi2)


def rank_probabilities(rows: int = 32, cols: int = 32) -> tuple[float, float, float]:
    """``P(rank = full)``, ``P(rank = full - 1)`` and the remainder for random GF(2) matrices."""
    def prob(r):
        logp = (r * (rows + cols - r) - rows * cols) * math.log(2)
        for i in range(r):
            logp += math.log((1 - 2.0 ** (i - rows)) * (1 - 2.0 ** (i - cols)) / (1 - 2.0 ** (i - r)))
        return math.exp(logp)

    full = min(rows, cols)
    p_full, p_next = prob(full), prob(full - 1)
    return p_full, p_next, 1 - p_full - p_next


def matrix_rank(bits, alpha: float = 0.01, rows: int = 32, cols: int = 32) -> TestResult:
    n = bits.size
    size = rows * cols
    N = n // size
    if N < 38:
        return _skip("matrix_rank", n, 38 * size)
    packed = bits[: N * size].reshape(N * rows, cols)
    weights = np.left_shift(np.uint64(1), np.arange(cols - 1, -1, -1, dtype=np.uint64))
    words = (packed.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)
    ranks = _kernels.gf2_ranks(words, rows)
    full = min(rows, cols)
    f = np.array([np.count_nonzero(ranks == full), np.count_nonzero(ranks == full - 1), 0])
    f[2] = N - f[0] - f[1]
    exp = N * np.asarray(rank_probabilities(rows, cols))
    chi2 = float(np.sum((f - exp) ** 2 / exp))
    return _result("matrix_rank", [math.exp(-chi2 / 2)], alpha, chi2)


def _cyclic_counts(bits: np.ndarray, m: int) -> np.ndarray:
    ext = np.concatenate([bits, bits[: m - 1]]) if m > 1 else bits
    return np.bincount(_window_codes(ext, m), minlength=1 << m)


def _psi2(counts: np.ndarray, n: int) -> float:
    if counts.size == 1:
        return 0.0
    return counts.size / n * float(np.sum(counts.astype(np.float64) ** 2)) - n


def _serial_stats(bits: np.ndarray, m: int) -> tuple[float, float, float, float]:
    """``(del1, del2, p1, p2)`` without the length check."""
    n = bits.size
    c_m = _cyclic_counts(bits, m)
    # lower orders follow by summing out the last bit of the cyclic windows
    c_m1 = c_m.reshape(-1, 2).sum(axis=1)
    c_m2 = c_m1.reshape(-1, 2).sum(axis=1)
    psi = [_psi2(c, n) for c in (c_m, c_m1, c_m2)]
    del1 = psi[0] - psi[1]
    del2 = psi[0] - 2 * psi[1] + psi[2]
    return del1, del2, gammaincc(2 ** (m - 2), del1 / 2), gammaincc(2 ** (m - 3), del2 / 2)


def serial(bits, alpha: float = 0.01, m: int = 16) -> TestResult:
    """Generalized serial test; p-values for the first and second differences of psi^2."""
    n = bits.size
    if m < 3 or m >= int(math.log2(max(n, 1))) - 2:
        return _skip("serial", n, 2 ** (m + 3))
    del1, del2, p1, p2 = _serial_stats(bits, m)
    return _result("serial", [p1, p2], alpha, del1, m=m, del2=del2)


def _apen_stats(bits: np.ndarray, m: int) -> tuple[float, float, float]:
    """``(apen, chi2, p)`` without the length check."""
    n = bits.size

    def phi(k):
        c = _cyclic_counts(bits, k)
        c = c[c > 0] / n
        return float(np.sum(c * np.log(c)))

    apen = phi(m) - phi(m + 1)
    chi2 = 2 * n * (math.log(2) - apen)
    return apen, chi2, gammaincc(2 ** (m - 1), chi2 / 2)


def approximate_entropy(bits, alpha: float = 0.01, m: int = 10) -> TestResult:
    n = bits.size
    if m < 1 or m >= int(math.log2(max(n, 1))) - 5:
        return _skip("approximate_entropy", n, 2 ** (m + 6))
    apen, chi2, p = _apen_stats(bits, m)
    return _result("approximate_entropy", [p], alpha, chi2, m=m, apen=apen)


LINEAR_COMPLEXITY_PI = (0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833)


def linear_complexity(bits, alpha: float = 0.01, M: int = 500) -> TestResult:
    n = bits.size
    N = n // M
    if N < 200:
        return _skip("linear_complexity", n, 200 * M)
    L = _kernels.block_complexities(np.ascontiguousarray(bits[: N * M]), M)
    sign = -1.0 if M % 2 else 1.0
    mu = M / 2 + (9 + (-1) ** (M + 1)) / 36 - (M / 3 + 2 / 9) / 2 ** M
    T = sign * (L - mu) + 2 / 9
    nu = np.bincount(np.digitize(T, [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5], right=True), minlength=7)
    exp = N * np.asarray(LINEAR_COMPLEXITY_PI)
    chi2 = float(np.sum((nu - exp) ** 2 / exp))
    return _result("linear_complexity", [gammaincc(3, chi2 / 2)], alpha, chi2, M=M)
