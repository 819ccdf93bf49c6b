"""Compiled loops for the block-wise tests."""
import numpy as np
from numba import njit


@njit(cache=True)
def linear_complexity(seq):
    """Berlekamp-Massey over GF(2): length of the shortest generating LFSR."""
    n = seq.size
    c = np.zeros(n + 1, dtype=np.uint8)
    b = np.zeros(n + 1, dtype=np.uint8)
    t = np.zeros(n + 1, dtype=np.uint8)
    c[0] = 1
    b[0] = 1
    L = 0
    m = -1
    for i in range(n):
        d = seq[i]
        for j in range(1, L + 1):
            d ^= c[j] & seq[i - j]
        if d:
            t[:] = c
            shift = i - m
            for j in range(n + 1 - shift):
                c[j + shift] ^= b[j]
            if L <= i // 2:
                L = i + 1 - L
                m = i
                b[:] = t
    return L


@njit(cache=True)
def _parity(v):
    v ^= v >> np.uint64(32)
    v ^= v >> np.uint64(16)
    v ^= v >> np.uint64(8)
    v ^= v >> np.uint64(4)
    v ^= v >> np.uint64(2)
    v ^= v >> np.uint64(1)
    return v & np.uint64(1)


@njit(cache=True)
def linear_complexity_packed(seq):
    """Berlekamp-Massey with the connection polynomial and the reversed
    history packed into 64-bit words, so each discrepancy is one AND and a
    parity per word."""
    n = seq.size
    nw = (n + 64) // 64
    c = np.zeros(nw, dtype=np.uint64)
    b = np.zeros(nw, dtype=np.uint64)
    t = np.zeros(nw, dtype=np.uint64)
    r = np.zeros(nw, dtype=np.uint64)  # bit j holds seq[i - j]
    one = np.uint64(1)
    c[0] = one
    b[0] = one
    L = 0
    m = -1
    for i in range(n):
        for k in range(nw - 1, 0, -1):
            r[k] = (r[k] << one) | (r[k - 1] >> np.uint64(63))
        r[0] = (r[0] << one) | np.uint64(seq[i])
        acc = np.uint64(0)
        for k in range(nw):
            acc ^= c[k] & r[k]
        if _parity(acc):
            t[:] = c
            shift = i - m
            ws = shift >> 6
            bs = np.uint64(shift & 63)
            for k in range(nw - 1, ws - 1, -1):
                v = b[k - ws] << bs
                if bs and k - ws - 1 >= 0:
                    v |= b[k - ws - 1] >> (np.uint64(64) - bs)
                c[k] ^= v
            if L <= i // 2:
                L = i + 1 - L
                m = i
                b[:] = t
    return L


@njit(cache=True)
def block_complexities(bits, M):
    nblocks = bits.size // M
    out = np.empty(nblocks, dtype=np.int64)
    for k in range(nblocks):
        out[k] = linear_complexity_packed(bits[k * M:(k + 1) * M])
    return out


@njit(cache=True)
def gf2_ranks(rows, nrows):
    """Rank of each ``nrows``-row matrix whose rows are packed into uint64 words."""
    nmat = rows.size // nrows
    out = np.empty(nmat, dtype=np.int64)
    work = np.empty(nrows, dtype=np.uint64)
    for k in range(nmat):
        for i in range(nrows):
            work[i] = rows[k * nrows + i]
        rank = 0
        for bit in range(63, -1, -1):
            mask = np.uint64(1) << np.uint64(bit)
            piv = -1
            for i in range(rank, nrows):
                if work[i] & mask:
                    piv = i
                    break
            if piv < 0:
                continue
            tmp = work[piv]
            work[piv] = work[rank]
            work[rank] = tmp
            for i in range(nrows):
                if i != rank and (work[i] & mask):
                    work[i] ^= tmp
            rank += 1
            if rank == nrows:
                break
        out[k] = rank
    return out
