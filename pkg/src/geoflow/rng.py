"""Seeded xorshift64* generator for reproducible initial conditions.

All randomized initial data (perturbation seeds, verification samples) go
through this generator rather than numpy's RNG so that any implementation
of the same algorithm reproduces bit-identical experiment inputs.

Algorithm (xorshift64*, 64-bit state, Marsaglia/Vigna):

    s ^= s >> 12
    s ^= (s << 25) & 2**64-1
    s ^= s >> 27
    output = (s * 0x2545F4914F6CDD1D) mod 2**64

Doubles are produced from the top 53 bits: u = (output >> 11) * 2**-53.
Reference outputs for seed 1 (first three u64 values):

    0x47E4CE4B896CDD1D, 0xABCFA6A8E079651D, 0xB9D10D8FEB731F57

The frozen vector is asserted in tests/test_rng.py.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


class XorShift64Star:
    """Deterministic 64-bit xorshift* stream."""

    def __init__(self, seed: int):
        s = int(seed) & _MASK
        if s == 0:
            # zero state is a fixed point of xorshift; remap like splitmix
            s = 0x9E3779B97F4A7C15
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        s ^= s >> 12
        s = (s ^ (s << 25)) & _MASK
        s ^= s >> 27
        self._s = s
        return (s * _MULT) & _MASK

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_signed(self) -> float:
        """Uniform double in [-1, 1)."""
        return 2.0 * self.uniform() - 1.0
