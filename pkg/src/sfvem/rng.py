"""Deterministic random numbers for mesh generation.

Meshes must be bit-reproducible from their seed, independent of numpy
version or platform RNG state, so this module carries its own generator
instead of wrapping ``numpy.random``.

Algorithm (parameters are part of the mesh format contract, do not change):

* seeding: one splitmix64 step on the scrambled seed,
  ``z = (seed ^ 0x9E3779B97F4A7C15) + 0x9E3779B97F4A7C15``,
  ``z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9``,
  ``z = (z ^ (z >> 27)) * 0x94D049BB133111EB``,
  ``state = z ^ (z >> 31)`` (replaced by 0x9E3779B97F4A7C15 if zero);
* stream: xorshift64* with shifts (12, 25, 27) and output multiplier
  0x2545F4914F6CDD1D;
* doubles: top 53 bits of the output word, uniform on [0, 1).

All arithmetic is modulo 2^64.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class XorShift:
    """xorshift64* stream seeded through splitmix64."""

    def __init__(self, seed: int):
        z = ((int(seed) ^ _GOLDEN) + _GOLDEN) & _MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z = z ^ (z >> 31)
        self._state = z if z != 0 else _GOLDEN

    def next_word(self) -> int:
        s = self._state
        s ^= s >> 12
        s ^= (s << 25) & _MASK
        s ^= s >> 27
        self._state = s
        return (s * 0x2545F4914F6CDD1D) & _MASK

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_word() >> 11) / 9007199254740992.0

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()
