"""Vectorized Philox4x32-10 counter-based generator.

Every output block is a pure function of a 64-bit key and a 128-bit
counter, so lattice entries can be drawn at arbitrary coordinates without
generating anything in between.  Arrays broadcast; all arithmetic is done
in ``uint64`` with explicit 32-bit masking.
"""

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

ROUNDS = 10


def philox4x32(c0, c1, c2, c3, k0, k1, rounds=ROUNDS):
    """Return the four 32-bit output words (as ``uint64`` arrays).

    All inputs are broadcast against each other and must hold values
    below 2**32.
    """
    c0, c1, c2, c3, k0, k1 = np.broadcast_arrays(
        *(np.asarray(x, dtype=np.uint64) for x in (c0, c1, c2, c3, k0, k1))
    )
    c0, c1, c2, c3 = (x.copy() for x in (c0, c1, c2, c3))
    k0 = k0.copy()
    k1 = k1.copy()
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SHIFT32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SHIFT32
        lo1 = p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def uniform128(c0, c1, c2, c3, k0, k1):
    """128-bit uniform integers as a ``(hi, lo)`` pair of ``uint64`` arrays."""
    x0, x1, x2, x3 = philox4x32(c0, c1, c2, c3, k0, k1)
    return (x0 << _SHIFT32) | x1, (x2 << _SHIFT32) | x3


def uniform128_int(c0, c1, c2, c3, k0, k1):
    """Scalar variant returning one Python ``int`` in ``[0, 2**128)``."""
    hi, lo = uniform128(c0, c1, c2, c3, k0, k1)
    return (int(hi) << 64) | int(lo)


def splitmix64(x):
    """SplitMix64 finalizer, used to derive independent 64-bit keys."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def split_key(key):
    """Split 64-bit keys into the two 32-bit Philox key words."""
    key = np.asarray(key, dtype=np.uint64)
    return key & _MASK32, key >> _SHIFT32
