"""Reproducible seed derivation.

Repetition r of an experiment runs with ``mix64(base_seed, r)``, and each
consumer of randomness inside a run (arrival process, inspection service
times, ...) draws from its own stream keyed by a fixed tag.  Streams are
therefore reproducible individually: adding a consumer never perturbs the
draws of existing ones.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1

# Stream tags (arbitrary fixed constants, one per randomness consumer).
STREAM_ARRIVALS = 0xA1
STREAM_INSPECTION = 0x15

def splitmix64(x: int) -> int:
    """One round of the splitmix64 mixer; full 64-bit avalanche."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix64(seed: int, stream: int) -> int:
    """Derive an independent 64-bit seed for (seed, stream)."""
    return splitmix64((splitmix64(seed & _MASK) ^ stream) & _MASK)
