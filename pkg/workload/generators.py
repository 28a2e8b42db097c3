"""
Request stream generators.

Every draw comes from the simulation's single ``SplitMix64`` stream. For one
arrival the draws happen in a fixed order: request kind, then key, then the
gap to the next arrival.
"""
from bisect import bisect_right
from functools import lru_cache

import numpy as np
from django.conf import settings

from core.utils import fnv1a_64, u64_le
from topology.exceptions import InvalidValue
from workload.models import ArrivalKind, KeyDistributionKind, Request


def next_arrival(spec, rng, t):
    """
    Time of the arrival following one at ``t``.

    Args:
        spec (WorkloadSpec): Workload being generated
        rng (SplitMix64): Simulation stream, advanced in place
        t (int): Current arrival time (or the workload start)

    Returns:
        int or None: Next arrival time, or ``None`` when it falls at or past
        the end of the workload window
    """
    if spec.arrival.kind is ArrivalKind.POISSON:
        following = t + rng.exponential(spec.arrival.rate)
    else:
        following = t + spec.arrival.interval
    if following >= spec.start + spec.duration:
        return None
    return following


def make_request(spec, rng, t, request_id):
    """
    Draw the request arriving at ``t``.

    The kind is read when a uniform draw falls below ``read_fraction``; the
    key follows the workload's key distribution.
    """
    write = not rng.uniform01() < spec.read_fraction
    key = draw_key(spec, rng, request_id)
    demand = spec.write_demand if write else spec.service_demand
    return Request(request_id, key, write, t, t + spec.deadline, demand, spec.name)


def draw_key(spec, rng, request_id):
    kind = spec.key_dist.kind
    if kind is KeyDistributionKind.UNIFORM:
        return rng.below(spec.key_space)
    if kind is KeyDistributionKind.SEQUENTIAL:
        return request_id % spec.key_space
    return zipf_table(spec.key_space, spec.key_dist.exponent).sample(rng.uniform01())


class ZipfTable:
    """
    Exact inverse-CDF sampler over ranks 1..K with weights ``1 / k**s``.

    Rank ``k`` maps to key ``k - 1``.
    """

    def __init__(self, key_space, exponent):
        limit = getattr(settings, 'FARMSIM_MAX_ZIPF_KEYS', 1 << 20)
        if key_space > limit:
            raise InvalidValue(
                f"Zipf key space {key_space} exceeds the supported maximum of {limit}",
                element='keys',
            )
        weights = 1.0 / np.power(np.arange(1, key_space + 1, dtype=np.float64), exponent)
        cumulative = np.cumsum(weights)
        self.cdf = cumulative / cumulative[-1]
        # bisect_right over the floats matches searchsorted(side="right")
        self._bounds = self.cdf.tolist()
        self.key_space = key_space

    def sample(self, u):
        index = bisect_right(self._bounds, u)
        return min(index, self.key_space - 1)


@lru_cache(maxsize=32)
def zipf_table(key_space, exponent):
    return ZipfTable(key_space, exponent)


@lru_cache(maxsize=1 << 18)
def key_to_bucket(key, bucket_count):
    """FNV-1a 64 over the key's 8-byte little-endian encoding, mod ``bucket_count``."""
    if bucket_count == 1:
        return 0
    return fnv1a_64(u64_le(key)) % bucket_count
