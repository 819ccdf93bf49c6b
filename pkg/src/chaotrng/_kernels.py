"""Compiled inner loops for orbit iteration.

Segment lookup matches :func:`chaotrng.maps.evaluate`: the first segment
with ``x <= upper`` wins, anything past the last breakpoint uses the last
segment.
"""
from numba import njit


@njit(cache=True)
def _apply(uppers, slopes, intercepts, nseg, x):
    i = 0
    while i < nseg - 1 and x > uppers[i]:
        i += 1
    return slopes[i] * x + intercepts[i]


@njit(cache=True)
def orbit(uppers, slopes, intercepts, lo, hi, guard, x0, noise, out):
    """Fill ``out`` with the noisy orbit from ``x0``; return escape index or -1."""
    n = out.shape[0]
    nseg = uppers.shape[0]
    x = x0
    for k in range(n):
        if not (x >= lo - guard and x <= hi + guard):
            return k
        out[k] = x
        if k < n - 1:
            x = _apply(uppers, slopes, intercepts, nseg, x) + noise[k]
    return -1


@njit(cache=True)
def survive(uppers, slopes, intercepts, lo, hi, guard, x, noise, kicks, kick_to):
    """Iterate without storing states.

    Where ``kicks[k]`` is set the state is replaced by ``kick_to`` before the
    step. Returns ``(escape index or -1, final state)``.
    """
    nseg = uppers.shape[0]
    for k in range(noise.shape[0]):
        if kicks[k]:
            x = kick_to
        if not (x >= lo - guard and x <= hi + guard):
            return k, x
        x = _apply(uppers, slopes, intercepts, nseg, x) + noise[k]
    return -1, x


@njit(cache=True)
def ring(uppers, slopes, intercepts, nsegs, lo, hi, guard, use_abs, thresholds,
         x, noise, stage0, bits):
    """Circulate one state through the stage ring, one bit per stage visit.

    The bit comes from the state entering the stage, thresholded with that
    stage's rule. Returns ``(escape offset or -1, state after the chunk)``.
    """
    n_stages = nsegs.shape[0]
    for t in range(noise.shape[0]):
        s = (stage0 + t) % n_stages
        if not (x >= lo - guard and x <= hi + guard):
            return t, x
        v = abs(x) if use_abs[s] else x
        bits[t] = 1 if v >= thresholds[s] else 0
        x = _apply(uppers[s], slopes[s], intercepts[s], nsegs[s], x) + noise[t]
    return -1, x
