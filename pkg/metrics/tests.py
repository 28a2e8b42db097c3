import json
from array import array
from dataclasses import replace
from fractions import Fraction

from django.test import SimpleTestCase

from core.exceptions import MetricsError
from engine.trace import TraceRecord
from metrics.audit import audit_bucket_ownership
from metrics.emitters import REPORT_COLUMNS, UnknownFormat, emit_report, render_table, scope_row
from metrics.exceptions import EmptySample, NoTraffic, NoWrites
from metrics.models import NodeReport, Outcome, RequestOutcome, RunReport, ScopeReport
from metrics.statistics import (
    availability,
    format_ratio,
    merge_reports,
    percentile,
    throughput,
    utilization,
    write_amplification,
)
from workload.models import Request


def make_report(duration_us=10_000_000, **scopes):
    scopes.setdefault('total', ScopeReport('total'))
    for name, scope in scopes.items():
        scopes[name] = replace(scope, scope=name)
    return RunReport(seed=1, duration_us=duration_us, scopes=scopes)


def nine_of_ten():
    return ScopeReport(
        'total', presented=10, in_deadline=9, failed=1,
        latencies=array('q', [100, 200, 300, 400, 500, 600, 700, 800, 900]),
        series={0: 5, 1: 4},
    )


class AvailabilityTestCase(SimpleTestCase):
    """Test cases for availability and throughput."""

    def test_nine_of_ten(self):
        """Test that 9 of 10 in deadline renders as 0.900000."""
        report = make_report(total=nine_of_ten())
        self.assertEqual(availability(report, 'total'), Fraction(9, 10))
        self.assertEqual(format_ratio(availability(report, 'total')), '0.900000')

    def test_no_traffic(self):
        """Test that an idle or unknown scope has no availability."""
        report = make_report()
        with self.assertRaises(NoTraffic):
            availability(report, 'total')
        with self.assertRaises(NoTraffic):
            availability(report, 'elsewhere')

    def test_late_requests_count_against(self):
        """Test that late completions are not available."""
        report = make_report(total=ScopeReport('total', presented=4, in_deadline=3, late=1))
        self.assertEqual(availability(report, 'total'), Fraction(3, 4))

    def test_format_rounds_half_up(self):
        """Test six-decimal rounding of exact ratios."""
        self.assertEqual(format_ratio(Fraction(1, 3)), '0.333333')
        self.assertEqual(format_ratio(Fraction(2, 3)), '0.666667')
        self.assertEqual(format_ratio(Fraction(1, 2_000_000)), '0.000001')
        self.assertEqual(format_ratio(Fraction(1)), '1.000000')

    def test_throughput(self):
        """Test completions per simulated second."""
        report = make_report(duration_us=2_000_000, total=nine_of_ten())
        self.assertEqual(throughput(report, 'total'), Fraction(9, 2))
        self.assertEqual(throughput(make_report(duration_us=0, total=nine_of_ten()), 'total'), 0)

    def test_utilization_is_capped(self):
        """Test that busy time over the duration never exceeds one."""
        self.assertEqual(utilization(500, 1_000), Fraction(1, 2))
        self.assertEqual(utilization(1_500, 1_000), 1)
        self.assertEqual(utilization(10, 0), 0)


class PercentileTestCase(SimpleTestCase):
    """Test cases for nearest-rank percentiles."""

    def test_nearest_rank(self):
        """Test p50 and p99 of four latencies."""
        latencies = [10, 20, 30, 40]
        self.assertEqual(percentile(latencies, 50), 20)
        self.assertEqual(percentile(latencies, 99), 40)
        self.assertEqual(percentile(latencies, 100), 40)
        self.assertEqual(percentile(latencies, 25), 10)

    def test_unsorted_input(self):
        """Test that the input order does not matter."""
        self.assertEqual(percentile(array('q', [40, 10, 30, 20]), 75), 30)

    def test_empty_sample(self):
        """Test that an empty sample has no percentile."""
        with self.assertRaises(EmptySample):
            percentile([], 50)

    def test_out_of_range(self):
        """Test that p must be in (0, 100]."""
        with self.assertRaises(MetricsError):
            percentile([1], 0)
        with self.assertRaises(MetricsError):
            percentile([1], 101)


class WriteAmplificationTestCase(SimpleTestCase):
    """Test cases for write amplification."""

    def test_three_clones(self):
        """Test that each write running on three clones amplifies by 3."""
        report = make_report(**{'f/s': ScopeReport('f/s', presented=5, client_writes=5, node_writes=15)})
        self.assertEqual(write_amplification(report, 'f/s'), 3)

    def test_partitioned(self):
        """Test that a partitioned write runs once."""
        report = make_report(**{'f/s': ScopeReport('f/s', presented=5, client_writes=5, node_writes=5)})
        self.assertEqual(write_amplification(report, 'f/s'), 1)

    def test_no_writes(self):
        """Test that a read-only service has no write amplification."""
        report = make_report(**{'f/s': ScopeReport('f/s', presented=5)})
        with self.assertRaises(NoWrites):
            write_amplification(report, 'f/s')


class RequestOutcomeTestCase(SimpleTestCase):
    """Test cases for per-request outcomes."""

    def test_serviced_in_and_out_of_deadline(self):
        """Test that the outcome depends on the completion against the deadline."""
        request = Request(3, 0, False, 1_000, 2_000, 100)
        on_time = RequestOutcome.serviced(request, 'total', 2_000)
        late = RequestOutcome.serviced(request, 'total', 2_001)
        self.assertEqual(on_time.outcome, Outcome.SERVICED_IN_DEADLINE)
        self.assertEqual(on_time.latency, 1_000)
        self.assertEqual(late.outcome, Outcome.SERVICED_LATE)

    def test_failed_has_no_latency(self):
        """Test that a failed outcome carrying a latency is refused."""
        with self.assertRaises(ValueError):
            RequestOutcome(1, 'total', Outcome.FAILED, latency=5)


class EmitReportTestCase(SimpleTestCase):
    """Test cases for report emission."""

    def test_header_only(self):
        """Test that a run without traffic gives only the header."""
        report = make_report()
        self.assertEqual(emit_report(report, 'csv'), (','.join(REPORT_COLUMNS) + '\n').encode())
        self.assertEqual(emit_report(report, 'json'), b'{}\n')

    def test_csv_row(self):
        """Test the values of one scope row."""
        lines = emit_report(make_report(total=nine_of_ten()), 'csv').decode().splitlines()
        self.assertEqual(lines[1], 'total,10,9,0,1,0,0.900000,500,900,900,')

    def test_json_matches_csv(self):
        """Test that the JSON summary carries the same values."""
        summary = json.loads(emit_report(make_report(total=nine_of_ten()), 'json'))
        self.assertEqual(summary['total']['availability'], 0.9)
        self.assertEqual(summary['total']['p95_us'], 900)
        self.assertIsNone(summary['total']['write_amp'])

    def test_deterministic(self):
        """Test that emitting twice gives identical bytes."""
        report = make_report(total=nine_of_ten(), **{'f/s': nine_of_ten()})
        for fmt in ('csv', 'json', 'nodes', 'series'):
            self.assertEqual(emit_report(report, fmt), emit_report(report, fmt))

    def test_scopes_sorted(self):
        """Test that rows are ordered by scope name."""
        report = make_report(total=nine_of_ten(), **{'f': nine_of_ten(), 'f/s': nine_of_ten()})
        rows = emit_report(report, 'csv').decode().splitlines()[1:]
        self.assertEqual([row.split(',')[0] for row in rows], ['f', 'f/s', 'total'])

    def test_nodes_and_series(self):
        """Test the per-node and per-window files."""
        node = NodeReport('f/s/n0', busy_us=2_500_000, utilization=Fraction(1, 4), writes=3,
                          downtime_us=0, queue_samples=array('q', [0, 4, 1]))
        report = RunReport(seed=1, duration_us=10_000_000, scopes={'total': nine_of_ten()}, nodes={node.path: node})
        self.assertEqual(
            emit_report(report, 'nodes').decode().splitlines()[1], 'f/s/n0,2500000,0.250000,3,0,4',
        )
        self.assertEqual(
            emit_report(report, 'series').decode().splitlines()[1:], ['total,0,5', 'total,1000000,4'],
        )

    def test_unknown_format(self):
        """Test that an unknown format is refused."""
        with self.assertRaises(UnknownFormat):
            emit_report(make_report(), 'xml')

    def test_render_table(self):
        """Test the text table of a JSON summary."""
        summary = json.loads(emit_report(make_report(total=nine_of_ten()), 'json'))
        lines = render_table(summary).splitlines()
        self.assertTrue(lines[0].startswith('scope'))
        self.assertTrue(lines[2].startswith('total'))
        self.assertIn('0.900000', lines[2])
        self.assertTrue(lines[2].endswith('-'))

    def test_scope_row_without_latencies(self):
        """Test that a scope where everything failed has no percentiles."""
        report = make_report(total=ScopeReport('total', presented=2, failed=2))
        row = scope_row(report, 'total')
        self.assertEqual(row['availability'], '0.000000')
        self.assertIsNone(row['p50_us'])


class MergeReportsTestCase(SimpleTestCase):
    """Test cases for folding a seed sweep."""

    def test_counters_add_up(self):
        """Test pooled counters, latencies and durations."""
        first = make_report(total=nine_of_ten())
        second = make_report(total=ScopeReport('total', presented=10, in_deadline=10,
                                               latencies=array('q', [50] * 10), series={0: 10}))
        merged = merge_reports([first, second])
        total = merged.scope('total')
        self.assertEqual(total.presented, 20)
        self.assertEqual(availability(merged, 'total'), Fraction(19, 20))
        self.assertEqual(merged.duration_us, 20_000_000)
        self.assertEqual(list(total.latencies[:10]), [50] * 10)
        self.assertEqual(total.series, {0: 15, 1: 4})
        self.assertIsNone(merged.seed)

    def test_single_report(self):
        """Test that one report merges to itself."""
        report = make_report(total=nine_of_ten())
        self.assertIs(merge_reports([report]), report)

    def test_nothing_to_merge(self):
        """Test that an empty sweep is refused."""
        with self.assertRaises(MetricsError):
            merge_reports([])


class AuditBucketOwnershipTestCase(SimpleTestCase):
    """Test cases for the partition affinity audit."""

    def setUp(self):
        """Set up two partitions over two buckets."""
        self.records = [
            TraceRecord(0, 'Owner', 'f/s', 'p0 n0'),
            TraceRecord(0, 'Owner', 'f/s', 'p1 n1'),
            TraceRecord(0, 'Bucket', 'f/s', 'b0 p0'),
            TraceRecord(0, 'Bucket', 'f/s', 'b1 p1'),
        ]

    def test_clean_trace(self):
        """Test that correct routes give no violation."""
        self.records.append(TraceRecord(5, 'Route', 'f/s', 'req=0 b0 p0 n0'))
        self.records.append(TraceRecord(6, 'Route', 'f/web', 'req=0 n3'))
        self.assertEqual(audit_bucket_ownership(self.records), [])

    def test_wrong_partition(self):
        """Test that a bucket routed to another partition is reported."""
        self.records.append(TraceRecord(5, 'Route', 'f/s', 'req=0 b0 p1 n1'))
        self.assertEqual(len(audit_bucket_ownership(self.records)), 1)

    def test_owner_moved(self):
        """Test that routing to a former owner is reported."""
        self.records.append(TraceRecord(4, 'Owner', 'f/s', 'p0 n2'))
        self.records.append(TraceRecord(5, 'Route', 'f/s', 'req=7 b0 p0 n0'))
        violations = audit_bucket_ownership(self.records)
        self.assertEqual(violations, ["5 f/s req=7: p0 is owned by n2, routed to n0"])

    def test_rendered_text(self):
        """Test that the audit reads a rendered trace."""
        text = '\n'.join(record.render() for record in self.records) + '\n5 Route f/s req=1 b1 p1 n1\n'
        self.assertEqual(audit_bucket_ownership(text), [])
