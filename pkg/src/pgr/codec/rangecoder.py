"""Adaptive binary range coder for streams of 8-bit occupancy codes.

Each byte is coded MSB first as eight binary decisions. Decision ``b``
uses its own adaptive probability (11-bit, initialised to 1/2, updated
by a 1/32 exponential step), so there are exactly eight contexts. The
carry handling follows the classic LZMA range coder.
"""

import numpy as np
from numba import njit

PROB_BITS = 11
PROB_ONE = 1 << PROB_BITS
ADAPT_SHIFT = 5
TOP = 1 << 24
MASK32 = 0xFFFFFFFF


@njit(cache=True)
def _shift_low(out, pos, low, cache, cache_size):
    if low < 0xFF000000 or low > MASK32:
        carry = low >> 32
        temp = cache
        while True:
            out[pos] = (temp + carry) & 0xFF
            pos += 1
            temp = 0xFF
            cache_size -= 1
            if cache_size == 0:
                break
        cache = (low >> 24) & 0xFF
    cache_size += 1
    low = (low & 0x00FFFFFF) << 8
    return pos, low, cache, cache_size


@njit(cache=True)
def _encode(codes):
    n = codes.shape[0]
    # a decision costs at most ~6 bits at the probability floor
    out = np.empty(n * 8 + 16, dtype=np.uint8)
    probs = np.full(8, PROB_ONE // 2, dtype=np.int64)
    low = 0
    rng = MASK32
    cache = 0
    cache_size = 1
    pos = 0
    for i in range(n):
        c = codes[i]
        for b in range(8):
            bit = (c >> (7 - b)) & 1
            p = probs[b]
            bound = (rng >> PROB_BITS) * p
            if bit == 0:
                rng = bound
                probs[b] = p + ((PROB_ONE - p) >> ADAPT_SHIFT)
            else:
                low += bound
                rng -= bound
                probs[b] = p - (p >> ADAPT_SHIFT)
            while rng < TOP:
                rng = (rng << 8) & MASK32
                pos, low, cache, cache_size = _shift_low(out, pos, low, cache, cache_size)
    for _ in range(5):
        pos, low, cache, cache_size = _shift_low(out, pos, low, cache, cache_size)
    return out[:pos]


@njit(cache=True)
def _decode(data, n):
    out = np.empty(n, dtype=np.uint8)
    probs = np.full(8, PROB_ONE // 2, dtype=np.int64)
    size = data.shape[0]
    pos = 0
    code = 0
    rng = MASK32
    for _ in range(5):
        byte = data[pos] if pos < size else 0
        pos += 1
        code = ((code << 8) | byte) & MASK32
    for i in range(n):
        c = 0
        for b in range(8):
            p = probs[b]
            bound = (rng >> PROB_BITS) * p
            if code < bound:
                rng = bound
                probs[b] = p + ((PROB_ONE - p) >> ADAPT_SHIFT)
                c = c << 1
            else:
                code -= bound
                rng -= bound
                probs[b] = p - (p >> ADAPT_SHIFT)
                c = (c << 1) | 1
            while rng < TOP:
                rng = (rng << 8) & MASK32
                byte = data[pos] if pos < size else 0
                pos += 1
                code = ((code << 8) | byte) & MASK32
        out[i] = c
    return out, pos


def encode_bytes(codes) -> bytes:
    """Entropy-code a sequence of byte values."""
    codes = np.ascontiguousarray(codes, dtype=np.uint8)
    if codes.size == 0:
        return b""
    return _encode(codes.astype(np.int64)).tobytes()


def decode_bytes(data: bytes, n: int):
    """Inverse of :func:`encode_bytes`; returns ``(codes, bytes_consumed)``.

    Reading past the end of ``data`` yields zero bytes, so a truncated
    stream decodes to garbage rather than raising; callers check sizes.
    """
    if n == 0:
        return np.zeros(0, dtype=np.uint8), 0
    buf = np.frombuffer(data, dtype=np.uint8)
    return _decode(buf, n)
