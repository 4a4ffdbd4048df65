"""Seeded Laplace noise.

Each player owns a counter-based stream: Philox4x64-10 (numpy's
``np.random.Philox``) keyed by ``SeedSequence([seed, player]).generate_state(2)``.
The uniform for iteration ``l`` is the first 64-bit word of Philox block
``l``, so any ``(seed, player, l)`` can be regenerated without replaying the
stream, and changing one player's index touches only that player's key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["NoiseStream", "laplace_from_uniform", "sample_laplace", "noise_vector",
           "make_streams", "uniform_from_bits"]

_TWO_NEG_52 = 2.0 ** -52


def uniform_from_bits(bits) -> np.ndarray:
    """Map 64-bit words to the open interval ``(-1/2, 1/2)``.

    The top 52 bits give ``k``; ``(k + 1/2) * 2**-52 - 1/2`` is exact in
    double precision, so the endpoints are never produced.
    """
    bits = np.asarray(bits, dtype=np.uint64)
    return ((bits >> np.uint64(12)).astype(float) + 0.5) * _TWO_NEG_52 - 0.5


def laplace_from_uniform(u, b):
    """Inverse CDF of ``Lap(b)`` at ``u + 1/2``: ``-b * sign(u) * ln(1 - 2|u|)``."""
    u = np.asarray(u, dtype=float)
    out = -b * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class NoiseStream:
    """Counter-based uniform source for one player."""

    seed: int
    player: int
    key: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence([int(self.seed) & (2 ** 64 - 1), int(self.player)])
        object.__setattr__(self, "key", ss.generate_state(2, np.uint64))

    def bits(self, start: int, count: int = 1) -> np.ndarray:
        """Raw words for iterations ``start .. start+count-1``."""
        if start < 0:
            raise ValueError("iteration must be non-negative")
        gen = np.random.Philox(key=self.key, counter=start)
        return gen.random_raw(4 * count)[::4]

    def uniform(self, l: int) -> float:
        return float(uniform_from_bits(self.bits(l, 1))[0])

    def uniforms(self, start: int, count: int) -> np.ndarray:
        return uniform_from_bits(self.bits(start, count))


def make_streams(seed: int, n: int) -> list[NoiseStream]:
    """One stream per player, players numbered ``0..n-1``."""
    return [NoiseStream(seed, i) for i in range(n)]


def sample_laplace(stream: NoiseStream, b, l: int = 0, size: int | None = None):
    """Draw ``Lap(b)`` at iteration ``l`` (or ``size`` consecutive iterations from ``l``)."""
    if np.any(np.asarray(b) <= 0):
        raise ValueError(f"Laplace scale must be positive, got {b}")
    if size is None:
        return laplace_from_uniform(stream.uniform(l), b)
    return laplace_from_uniform(stream.uniforms(l, size), b)


def noise_vector(streams, schedules, l: int, zero_noise: bool = False) -> np.ndarray:
    """``eps_i(l) ~ Lap(b_i(l))`` for every player; zeros when the mechanism is off."""
    if l < 0:
        raise ValueError("iteration must be non-negative")
    if zero_noise:
        return np.zeros(len(streams))
    b = schedules.b_at(l)
    return np.array([sample_laplace(s, bi, l) for s, bi in zip(streams, b)])
