"""Vectorised Philox4x32-10 counter-based generator.

Every random number in the package is a pure function of
``(seed, stream, trial, vertex, word)``, so any trial can be regenerated in
isolation and the result never depends on how trials are scheduled.

Counter layout (four 32-bit words): ``c0 = vertex``,
``c1 = (stream << 24) | (substream << 4) | block``, ``c2, c3 = trial lo / hi``.
``block`` indexes groups of four words, so a cell yields at most 64 words.
The key is the 64-bit seed split into two words.
"""
from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)

# stream tags
STREAM_CONFIG = 0
STREAM_TREE = 1
STREAM_EVENTS = 2

_STREAM_SHIFT = 24
_SUB_SHIFT = 4
MAX_SUBSTREAM = (1 << (_STREAM_SHIFT - _SUB_SHIFT)) - 1
_MAX_BLOCKS = 1 << _SUB_SHIFT


def philox4x32(c0, c1, c2, c3, k0, k1, rounds: int = 10):
    """Apply Philox4x32 to broadcastable counter words; returns four uint64 arrays of 32-bit values."""
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in (c0, c1, c2, c3))
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0 = np.uint64(int(k0) & 0xFFFFFFFF)
    k1 = np.uint64(int(k1) & 0xFFFFFFFF)
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        prod0 = _M0 * c0
        prod1 = _M1 * c2
        hi0, lo0 = prod0 >> _SHIFT, prod0 & _MASK32
        hi1, lo1 = prod1 >> _SHIFT, prod1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _split_seed(seed: int) -> tuple[int, int]:
    seed = int(seed) % (1 << 64)
    return seed & 0xFFFFFFFF, seed >> 32


def uniforms(seed: int, stream: int, trials, vertices, count: int, substream: int = 0) -> np.ndarray:
    """Doubles in (0, 1) on the 2^-32 grid, shape ``broadcast(trials, vertices) + (count,)``.

    ``trials`` and ``vertices`` are integer arrays broadcast against each
    other; the ``j``-th value of each (trial, vertex) cell is word ``j`` of
    that cell's stream, mapped to ``(w + 0.5) / 2^32``.
    """
    k0, k1 = _split_seed(seed)
    trials = np.asarray(trials, dtype=np.uint64)
    vertices = np.asarray(vertices, dtype=np.uint64)
    trials, vertices = np.broadcast_arrays(trials, vertices)
    n_blocks = (count + 3) // 4
    if n_blocks > _MAX_BLOCKS:
        raise ValueError("too many words per cell")
    if not 0 <= substream <= MAX_SUBSTREAM:
        raise ValueError("substream out of range")
    out = np.empty(trials.shape + (4 * n_blocks,), dtype=np.float64)
    t_lo = trials & _MASK32
    t_hi = trials >> _SHIFT
    for b in range(n_blocks):
        c1 = np.uint64((int(stream) << _STREAM_SHIFT) | (int(substream) << _SUB_SHIFT) | b)
        words = philox4x32(vertices, c1, t_lo, t_hi, k0, k1)
        for w in range(4):
            out[..., 4 * b + w] = words[w]
    out = out[..., :count]
    out += 0.5
    out *= 2.0**-32
    return out
