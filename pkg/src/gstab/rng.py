"""Deterministic per-replicate random streams.

Replicate seeds are derived with SplitMix64 finalization so that any replicate
(split, bootstrap iteration, projection, ...) gets an independent, reproducible
stream addressable purely by its index. Results are therefore identical no
matter how replicates are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    """SplitMix64 finalizer."""
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def replicate_seed(base_seed: int, index: int) -> int:
    """Derive the seed for replicate ``index`` of a base stream.

    Pure function: identical ``(base_seed, index)`` always yields the same
    value, and distinct indices give independently usable streams.
    """
    return _mix((int(base_seed) & _MASK) ^ _mix(int(index) & _MASK))


@dataclass(frozen=True)
class RandomStream:
    """A base seed plus an index-addressed family of derived generators."""

    base_seed: int

    def generator(self) -> np.random.Generator:
        """Generator for the base stream itself."""
        return np.random.Generator(np.random.PCG64(self.base_seed & _MASK))

    def substream(self, index: int) -> np.random.Generator:
        """Independent generator for replicate ``index``."""
        return np.random.Generator(np.random.PCG64(replicate_seed(self.base_seed, index)))

    def derive(self, index: int) -> "RandomStream":
        """Child stream rooted at replicate ``index`` (for nested replication)."""
        return RandomStream(replicate_seed(self.base_seed, index))
