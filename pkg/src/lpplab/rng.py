"""Counter-based random generation.

Every draw is a pure function of a (seed, stream, index...) key, so sampled
environments are identical no matter how the work is ordered or parallelized.
The mixer is the splitmix64 finalizer applied sponge-style over the key
words; scalar and vectorized paths share the same arithmetic bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U = np.uint64


@dataclass(frozen=True)
class RandomSource:
    """Seed plus stream id; equal sources give bit-identical draw sequences."""

    seed: int
    stream: int = 0

    def child(self, offset: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream + offset)


def _finalize(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def mix_key(*words: int) -> int:
    """Hash a tuple of integers to a 64-bit value."""
    h = _finalize(_GOLDEN)
    for i, w in enumerate(words):
        h = _finalize(h ^ _finalize((w + (i + 1) * _GOLDEN) & _MASK))
    return h


def uniform_from_key(*words: int) -> float:
    """Deterministic uniform in [0, 1) keyed by the given integers."""
    return (mix_key(*words) >> 11) * 2.0 ** -53


def _np_finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U(30))) * _U(_MIX1)
    z = (z ^ (z >> _U(27))) * _U(_MIX2)
    return z ^ (z >> _U(31))


def _as_u64(w) -> np.ndarray:
    arr = np.asarray(w, dtype=np.int64)
    return arr.view(np.uint64)


def np_mix_keys(words: list) -> np.ndarray:
    """Vectorized mix_key; entries of ``words`` broadcast against each other."""
    with np.errstate(over="ignore"):
        h = _np_finalize(np.asarray(_GOLDEN & _MASK, dtype=np.uint64))
        for i, w in enumerate(words):
            salt = _U(((i + 1) * _GOLDEN) & _MASK)
            h = _np_finalize(h ^ _np_finalize(_as_u64(w) + salt))
        return h


def np_uniforms(words: list) -> np.ndarray:
    """Vectorized uniforms in [0, 1) keyed per element."""
    return (np_mix_keys(words) >> _U(11)).astype(np.float64) * 2.0 ** -53


class UniformStream:
    """Sequential deterministic uniforms for step-by-step samplers."""

    def __init__(self, source: RandomSource, tag: int = 0):
        self._seed = source.seed
        self._stream = source.stream
        self._tag = tag
        self._n = 0

    def next(self) -> float:
        u = uniform_from_key(self._seed, self._stream, self._tag, self._n)
        self._n += 1
        return u
