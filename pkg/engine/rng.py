"""
SplitMix64 pseudo-random stream.

The simulation draws every stochastic choice from one stream, consumed in
dispatch order, so a run depends only on its seed and scenario. The pure
``rng_*`` functions take and return the state word; ``SplitMix64`` advances
the same stream in place for the engine.
"""
import math

from core.utils import MASK64, US_PER_SECOND
from engine.exceptions import NonPositiveRate

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
# 53 significant bits, so the quotient is rounded down and stays below 1
TWO_POW_MINUS_53 = 2.0 ** -53


def rng_next(state):
    """
    One SplitMix64 step.

    Returns:
        tuple: ``(value, next_state)``, both 64-bit
    """
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31), state


def rng_uniform01(state):
    """Real in [0, 1) from one step: ``value / 2**64`` truncated to 53 bits."""
    value, state = rng_next(state)
    return (value >> 11) * TWO_POW_MINUS_53, state


def exponential_us(u, rate):
    """
    Exponential gap for a uniform draw ``u`` and a rate in events per second.

    The result is in whole microseconds, rounded half up, never below 1.

    Raises:
        NonPositiveRate: If ``rate <= 0``
    """
    if rate <= 0:
        raise NonPositiveRate(f"Exponential rate must be positive, got {rate}")
    gap = -math.log1p(-u) / rate * US_PER_SECOND
    return max(1, math.floor(gap + 0.5))


def rng_exponential(state, rate):
    """Exponential gap in microseconds; returns ``(gap, next_state)``."""
    u, state = rng_uniform01(state)
    return exponential_us(u, rate), state


class SplitMix64:
    """
    Mutable stream used by the engine; ``state`` is the raw 64-bit word.

    The methods run the same step as ``rng_next`` in place and yield the
    same values as the ``rng_*`` functions.
    """

    __slots__ = ('state',)

    def __init__(self, seed=0):
        self.state = seed & MASK64

    def next_u64(self):
        state = self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = ((state ^ (state >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform01(self):
        return (self.next_u64() >> 11) * TWO_POW_MINUS_53

    def below(self, bound):
        """Integer in [0, bound) from one draw: ``(value * bound) >> 64``."""
        return (self.next_u64() * bound) >> 64

    def exponential(self, rate):
        """Same gap as ``exponential_us`` over the next uniform draw."""
        if rate <= 0:
            raise NonPositiveRate(f"Exponential rate must be positive, got {rate}")
        gap = -math.log1p(-((self.next_u64() >> 11) * TWO_POW_MINUS_53)) / rate * US_PER_SECOND
        return max(1, math.floor(gap + 0.5))
