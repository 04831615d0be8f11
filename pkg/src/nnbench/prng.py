"""Deterministic parameter generation.

All synthetic data in the suite comes from a SplitMix64 stream, pinned
bit-exactly so that every artifact regenerates identically from its seed:

    state_k = (seed + k * 0x9E3779B97F4A7C15) mod 2^64,  k = 1, 2, ...
    mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
            z ^= z >> 27; z *= 0x94D049BB133111EB;
            z ^= z >> 31

Uniform floats in [-0.5, 0.5) take the top 53 bits: (mix >> 11) * 2^-53 - 0.5,
evaluated in float64 and cast to float32.

Substream seeds are derived by folding FNV-1a hashes of string tags into the
mix function, so each (seed, layer, role) gets an independent stream.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a python int (mod 2^64)."""
    z &= _MASK
    z = (z ^ (z >> 30)) * _MIX1 & _MASK
    z = (z ^ (z >> 27)) * _MIX2 & _MASK
    return z ^ (z >> 31)


def fnv1a(text: str) -> int:
    h = _FNV_OFFSET
    for b in text.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def derive_seed(seed: int, *tags) -> int:
    """Independent substream seed for (seed, *tags); tags are str or int."""
    h = seed & _MASK
    for tag in tags:
        t = fnv1a(tag) if isinstance(tag, str) else (int(tag) & _MASK)
        h = mix64((h + _GOLDEN) & _MASK ^ t)
    return h


def raw_stream(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """`count` SplitMix64 outputs starting at stream position `offset`."""
    if count == 0:
        return np.zeros(0, dtype=np.uint64)
    k = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK) + k * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def uniform(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """float32 uniforms in [-0.5, 0.5) from the pinned stream."""
    bits = raw_stream(seed, count, offset)
    u = (bits >> np.uint64(11)).astype(np.float64) * (2.0**-53) - 0.5
    return u.astype(np.float32)


def integers(seed: int, count: int, bound: int, offset: int = 0) -> np.ndarray:
    """int64 values in [0, bound) by modulo reduction of the pinned stream.

    Modulo bias is negligible for bound << 2^64 and irrelevant here: the
    contract is determinism, not statistical perfection.
    """
    bits = raw_stream(seed, count, offset)
    return (bits % np.uint64(bound)).astype(np.int64)
