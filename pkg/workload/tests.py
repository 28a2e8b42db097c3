from collections import Counter

import numpy as np
from django.test import SimpleTestCase, override_settings

from core.test_factories import SequentialWorkloadSpecFactory, WorkloadSpecFactory
from core.utils import fnv1a_64
from engine.rng import SplitMix64
from topology.exceptions import InvalidValue
from workload.generators import ZipfTable, key_to_bucket, make_request, next_arrival
from workload.models import ArrivalKind, ArrivalProcess, KeyDistribution, KeyDistributionKind, RequestKind


class NextArrivalTestCase(SimpleTestCase):
    """Test cases for arrival generation."""

    def test_fixed_interval(self):
        """Test fixed arrivals 1000 µs apart from t=0."""
        spec = WorkloadSpecFactory()
        rng = SplitMix64(0)
        times = []
        t = 0
        for _ in range(3):
            t = next_arrival(spec, rng, t)
            times.append(t)
        self.assertEqual(times, [1_000, 2_000, 3_000])

    def test_window_end(self):
        """Test that no arrival is produced at or past the window end."""
        spec = WorkloadSpecFactory(duration=10_000)
        self.assertIsNone(next_arrival(spec, SplitMix64(0), 9_000))
        self.assertEqual(next_arrival(spec, SplitMix64(0), 8_000), 9_000)

    def test_window_start_offsets_end(self):
        """Test that a late start moves the end of the window."""
        spec = WorkloadSpecFactory(start=5_000, duration=2_000)
        self.assertEqual(spec.end, 7_000)
        self.assertEqual(next_arrival(spec, SplitMix64(0), 5_000), 6_000)
        self.assertIsNone(next_arrival(spec, SplitMix64(0), 6_000))

    def test_poisson_gap(self):
        """Test that Poisson gaps come from the exponential draw."""
        spec = WorkloadSpecFactory(arrival=ArrivalProcess(ArrivalKind.POISSON, rate=100.0))
        rng, reference = SplitMix64(4), SplitMix64(4)
        self.assertEqual(next_arrival(spec, rng, 500), 500 + reference.exponential(100.0))

    def test_poisson_mean_count(self):
        """Test that Poisson arrival counts match the rate within 4 sigma."""
        spec = WorkloadSpecFactory(arrival=ArrivalProcess(ArrivalKind.POISSON, rate=200.0), duration=10_000_000)
        counts = []
        for seed in range(20):
            rng = SplitMix64(seed)
            count, t = 0, 0
            while True:
                t = next_arrival(spec, rng, t)
                if t is None:
                    break
                count += 1
            counts.append(count)
        mean = sum(counts) / len(counts)
        # 2000 expected per run; sigma of the mean over 20 runs is 10
        self.assertLess(abs(mean - 2_000), 40)


class MakeRequestTestCase(SimpleTestCase):
    """Test cases for request kinds and keys."""

    def test_read_only(self):
        """Test that read_fraction=1 always reads."""
        spec = WorkloadSpecFactory(read_fraction=1.0)
        rng = SplitMix64(1)
        self.assertTrue(all(not make_request(spec, rng, 0, n).write for n in range(500)))

    def test_write_only(self):
        """Test that read_fraction=0 always writes, with the write demand."""
        spec = WorkloadSpecFactory(read_fraction=0.0, write_demand=300)
        rng = SplitMix64(1)
        requests = [make_request(spec, rng, 0, n) for n in range(500)]
        self.assertTrue(all(request.write for request in requests))
        self.assertEqual(requests[0].kind, RequestKind.WRITE)
        self.assertEqual(requests[0].demand, 300)

    def test_deadline_is_absolute(self):
        """Test that the deadline is counted from the arrival."""
        request = make_request(WorkloadSpecFactory(deadline=50_000), SplitMix64(0), 1_000, 7)
        self.assertEqual(request.deadline_abs, 51_000)
        self.assertEqual(request.id, 7)

    def test_uniform_keys(self):
        """Test uniform key frequencies within 1% of 1/K."""
        spec = WorkloadSpecFactory(key_space=4)
        rng = SplitMix64(2)
        counts = Counter(make_request(spec, rng, 0, n).key for n in range(100_000))
        self.assertEqual(set(counts), {0, 1, 2, 3})
        for count in counts.values():
            self.assertLess(abs(count / 100_000 - 0.25), 0.01)

    def test_sequential_keys(self):
        """Test that sequential keys cycle with the request id."""
        spec = SequentialWorkloadSpecFactory(key_space=4)
        rng = SplitMix64(0)
        self.assertEqual([make_request(spec, rng, 0, n).key for n in range(6)], [0, 1, 2, 3, 0, 1])

    def test_zipf_keys_favor_low_ranks(self):
        """Test that Zipf keys concentrate on the first ranks."""
        spec = WorkloadSpecFactory(key_space=1_000, key_dist=KeyDistribution(KeyDistributionKind.ZIPF, 1.0))
        rng = SplitMix64(5)
        counts = Counter(make_request(spec, rng, 0, n).key for n in range(20_000))
        self.assertGreater(counts[0], counts[1])
        self.assertGreater(counts[1], counts[10])
        self.assertTrue(all(0 <= key < 1_000 for key in counts))


class ZipfTableTestCase(SimpleTestCase):
    """Test cases for the Zipf sampler."""

    def test_inverse_cdf(self):
        """Test that draws map onto the cumulative weights."""
        table = ZipfTable(2, 1.0)
        # Weights 1 and 1/2: the first key holds two thirds of the mass
        self.assertEqual(table.sample(0.0), 0)
        self.assertEqual(table.sample(0.6), 0)
        self.assertEqual(table.sample(0.7), 1)
        self.assertEqual(table.sample(0.999999), 1)

    def test_matches_searchsorted(self):
        """Test that sampling agrees with numpy's right-sided search of the CDF."""
        table = ZipfTable(1_000, 0.8)
        rng = SplitMix64(5)
        for _ in range(2_000):
            u = rng.uniform01()
            expected = min(int(np.searchsorted(table.cdf, u, side='right')), 999)
            self.assertEqual(table.sample(u), expected)
        self.assertEqual(table.sample(float(table.cdf[0])), 1)

    @override_settings(FARMSIM_MAX_ZIPF_KEYS=100)
    def test_key_space_limit(self):
        """Test that oversized Zipf key spaces are refused."""
        with self.assertRaises(InvalidValue):
            ZipfTable(101, 1.0)


class KeyToBucketTestCase(SimpleTestCase):
    """Test cases for bucket hashing."""

    def test_single_bucket(self):
        """Test that B=1 always gives bucket 0."""
        self.assertEqual({key_to_bucket(key, 1) for key in range(100)}, {0})

    def test_zero_key(self):
        """Test key 0 hashing as eight zero bytes."""
        self.assertEqual(key_to_bucket(0, 64), fnv1a_64(bytes(8)) % 64)

    def test_stable(self):
        """Test that a key always lands in the same bucket."""
        self.assertEqual(key_to_bucket(123_456, 64), key_to_bucket(123_456, 64))

    def test_low_keys_cover_every_bucket(self):
        """Test that keys 0..B-1 hit distinct buckets for a power-of-two B."""
        self.assertEqual(sorted(key_to_bucket(key, 4) for key in range(4)), [0, 1, 2, 3])

    def test_uniform_draws_spread_evenly(self):
        """Test that no bucket takes more than 2/B of 10^5 uniform keys."""
        draws = 100_000
        rng = SplitMix64(2024)
        keys = [rng.below(65_536) for _ in range(draws)]
        for buckets in (4, 16, 64, 256):
            with self.subTest(buckets=buckets):
                counts = Counter(key_to_bucket(key, buckets) for key in keys)
                self.assertEqual(len(counts), buckets)
                self.assertLessEqual(max(counts.values()), 2 * draws // buckets)


class WorkloadSpecTestCase(SimpleTestCase):
    """Test cases for workload validation."""

    def test_bad_values(self):
        """Test that impossible workloads are rejected."""
        with self.assertRaises(InvalidValue):
            WorkloadSpecFactory(read_fraction=1.5)
        with self.assertRaises(InvalidValue):
            WorkloadSpecFactory(deadline=0)
        with self.assertRaises(InvalidValue):
            WorkloadSpecFactory(arrival=ArrivalProcess(ArrivalKind.FIXED, interval=0))
        with self.assertRaises(InvalidValue):
            WorkloadSpecFactory(key_dist=KeyDistribution(KeyDistributionKind.ZIPF, 0.0))

    @override_settings(FARMSIM_MAX_ZIPF_KEYS=100)
    def test_zipf_key_space_limit(self):
        """Test that a Zipf workload over the key-space maximum is refused up front."""
        zipf = KeyDistribution(KeyDistributionKind.ZIPF, 1.0)
        with self.assertRaises(InvalidValue):
            WorkloadSpecFactory(key_space=101, key_dist=zipf)
        self.assertEqual(WorkloadSpecFactory(key_space=100, key_dist=zipf).key_space, 100)
        self.assertEqual(WorkloadSpecFactory(key_space=101).key_space, 101)

    def test_geoplex_target(self):
        """Test one-segment targets route across the geoplex."""
        spec = WorkloadSpecFactory(target=('web',))
        self.assertTrue(spec.is_geoplex_target)
        self.assertEqual(spec.service_name, 'web')
