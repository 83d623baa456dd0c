"""Finite-alphabet arithmetic for partial gradients.

Symbols live in Z_{2^k}; a gradient vector is a length-d ``numpy`` int64
array whose entries are all in ``[0, 2^k)``.  Arrays are treated as
immutable values by every caller in the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

MAX_SIZE_LOG2 = 32


@dataclass(frozen=True)
class Alphabet:
    size_log2: int

    def __post_init__(self):
        if (not isinstance(self.size_log2, (int, np.integer)) or isinstance(self.size_log2, bool)
                or not 1 <= self.size_log2 <= MAX_SIZE_LOG2):
            raise ConfigurationError(
                f"alphabet size_log2 must be an integer in [1, {MAX_SIZE_LOG2}], got {self.size_log2!r}"
            )

    @property
    def size(self) -> int:
        return 1 << self.size_log2

    @property
    def mask(self) -> int:
        return self.size - 1

    def zero(self, dim: int) -> np.ndarray:
        return np.zeros(dim, dtype=np.int64)

    def vector(self, values) -> np.ndarray:
        """Validate ``values`` and return them as a gradient vector."""
        vec = np.asarray(values, dtype=np.int64)
        if vec.ndim != 1:
            raise ConfigurationError(f"gradient vector must be 1-D, got shape {vec.shape}")
        if vec.size and (vec.min() < 0 or vec.max() > self.mask):
            raise ConfigurationError(f"symbol outside [0, {self.size}) in {vec.tolist()}")
        return vec

    def contains(self, symbol) -> bool:
        return isinstance(symbol, (int, np.integer)) and not isinstance(symbol, bool) and 0 <= symbol <= self.mask

    def add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if np.shape(a) != np.shape(b):
            raise ConfigurationError(f"length mismatch: {np.shape(a)} vs {np.shape(b)}")
        return (np.asarray(a, dtype=np.int64) + np.asarray(b, dtype=np.int64)) & self.mask

    def sub(self, a, b):
        """``a - b`` on vectors or on single symbols."""
        if np.ndim(a) == 0 and np.ndim(b) == 0:
            return (int(a) - int(b)) & self.mask
        if np.shape(a) != np.shape(b):
            raise ConfigurationError(f"length mismatch: {np.shape(a)} vs {np.shape(b)}")
        return (np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)) & self.mask

    def add_symbols(self, a: int, b: int) -> int:
        return (int(a) + int(b)) & self.mask


def add(a: np.ndarray, b: np.ndarray, alphabet: Alphabet) -> np.ndarray:
    return alphabet.add(a, b)


def bits_per_symbol(alphabet: Alphabet) -> int:
    # |A| = 2^k, so ceil(log2 |A|) is exactly k
    return alphabet.size_log2


def sum_range(vals: Sequence[np.ndarray], lo: int, hi: int, alphabet: Alphabet) -> np.ndarray:
    """Sum of ``vals[lo..hi]`` using 1-based closed indexing."""
    if lo > hi:
        raise ConfigurationError(f"empty range [{lo}, {hi}]")
    if lo < 1 or hi > len(vals):
        raise ConfigurationError(f"range [{lo}, {hi}] outside [1, {len(vals)}]")
    block = np.asarray(vals[lo - 1:hi], dtype=np.int64)
    return block.sum(axis=0) & alphabet.mask


class PrefixSums:
    """O(1) range sums over a fixed ``(count, d)`` block of symbols.

    Row ``i`` of the block holds the vector with 1-based index ``first + i``.
    """

    def __init__(self, block: np.ndarray, alphabet: Alphabet, first: int = 1):
        block = np.asarray(block, dtype=np.int64)
        self.alphabet = alphabet
        self.first = first
        self.count = block.shape[0]
        acc = np.zeros((self.count + 1, block.shape[1]), dtype=np.int64)
        # k <= 32 keeps cumulative sums well inside int64 for any realistic count
        np.cumsum(block, axis=0, out=acc[1:])
        acc &= alphabet.mask
        self._acc = acc

    def range_sum(self, lo: int, hi: int) -> np.ndarray:
        a, b = lo - self.first, hi - self.first + 1
        if a < 0 or b > self.count or a >= b:
            raise ConfigurationError(f"range [{lo}, {hi}] outside block starting at {self.first}")
        return (self._acc[b] - self._acc[a]) & self.alphabet.mask

    def range_sum_coord(self, lo: int, hi: int, coord: int) -> int:
        """Coordinate ``coord`` (1-based) of the range sum."""
        a, b = lo - self.first, hi - self.first + 1
        if a < 0 or b > self.count or a >= b:
            raise ConfigurationError(f"range [{lo}, {hi}] outside block starting at {self.first}")
        return int(self._acc[b, coord - 1] - self._acc[a, coord - 1]) & self.alphabet.mask
