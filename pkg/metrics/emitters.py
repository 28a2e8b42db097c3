"""
Report emitters: CSV and JSON summaries, per-node and throughput-series
CSV files, and the plain-text table of ``farmsim report``.

Emission is deterministic: scopes sorted by name, sorted JSON keys, six
decimals on every ratio.
"""
import csv
import io
import json
from decimal import Decimal

from metrics.statistics import availability, format_ratio, percentile, write_amplification

REPORT_COLUMNS = (
    'scope', 'presented', 'in_deadline', 'late', 'failed', 'in_flight',
    'availability', 'p50_us', 'p95_us', 'p99_us', 'write_amp',
)

NODE_COLUMNS = ('node', 'busy_us', 'utilization', 'writes', 'downtime_us', 'max_queue')

SERIES_COLUMNS = ('scope', 'window_start_us', 'completions')

PERCENTILES = (('p50_us', 50), ('p95_us', 95), ('p99_us', 99))


class UnknownFormat(ValueError):
    pass


def scope_row(report, scope):
    """
    One scope's summary values, keyed by the report columns.

    Ratios are strings with six decimals; measures without data (no
    latency sample, no client write) are ``None``.
    """
    counters = report.scopes[scope]
    row = {
        'scope': scope,
        'presented': counters.presented,
        'in_deadline': counters.in_deadline,
        'late': counters.late,
        'failed': counters.failed,
        'in_flight': counters.in_flight,
        'availability': format_ratio(availability(report, scope)),
    }
    for column, p in PERCENTILES:
        row[column] = percentile(counters.latencies, p) if counters.latencies else None
    row['write_amp'] = (
        format_ratio(write_amplification(report, scope)) if counters.client_writes else None
    )
    return row


def report_rows(report):
    """Rows of every scope that saw traffic, sorted by scope name."""
    return [
        scope_row(report, scope)
        for scope in sorted(report.scopes)
        if report.scopes[scope].presented > 0
    ]


def _csv(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow(['' if value is None else value for value in row])
    return buffer.getvalue().encode('utf-8')


def _emit_csv(report):
    rows = report_rows(report)
    return _csv(REPORT_COLUMNS, ([row[column] for column in REPORT_COLUMNS] for row in rows))


def _emit_json(report):
    summary = {}
    for row in report_rows(report):
        values = {key: value for key, value in row.items() if key != 'scope'}
        for key in ('availability', 'write_amp'):
            if values[key] is not None:
                values[key] = float(Decimal(values[key]))
        summary[row['scope']] = values
    return (json.dumps(summary, sort_keys=True, indent=2) + '\n').encode('utf-8')


def _emit_nodes(report):
    rows = []
    for path in sorted(report.nodes):
        node = report.nodes[path]
        rows.append([
            path,
            node.busy_us,
            format_ratio(node.utilization),
            node.writes,
            node.downtime_us,
            max(node.queue_samples) if node.queue_samples else 0,
        ])
    return _csv(NODE_COLUMNS, rows)


def _emit_series(report):
    rows = []
    for scope in sorted(report.scopes):
        for window, completions in sorted(report.scopes[scope].series.items()):
            rows.append([scope, window * report.window_us, completions])
    return _csv(SERIES_COLUMNS, rows)


EMITTERS = {
    'csv': _emit_csv,
    'json': _emit_json,
    'nodes': _emit_nodes,
    'series': _emit_series,
}


def emit_report(report, fmt='csv'):
    """
    Serialize a finalized report.

    Args:
        report (RunReport): Finished run or merged sweep
        fmt (str): ``csv``, ``json``, ``nodes`` or ``series``

    Returns:
        bytes: UTF-8 text; a run without traffic gives a header-only CSV
        and an empty JSON object
    """
    try:
        emitter = EMITTERS[fmt]
    except KeyError:
        raise UnknownFormat(f"Unknown report format '{fmt}'; expected one of: {', '.join(EMITTERS)}")
    return emitter(report)


def render_table(summary):
    """
    Human-readable table of a JSON summary as written by ``emit_report``.

    Args:
        summary (dict): Scope -> values, as loaded from ``report.json``

    Returns:
        str: Fixed-width table, one line per scope
    """
    rows = [list(REPORT_COLUMNS)]
    for scope in sorted(summary):
        values = summary[scope]
        row = [scope]
        for column in REPORT_COLUMNS[1:]:
            value = values.get(column)
            if value is None:
                row.append('-')
            elif column in ('availability', 'write_amp'):
                row.append(f"{value:.6f}")
            else:
                row.append(str(value))
        rows.append(row)

    widths = [max(len(row[index]) for row in rows) for index in range(len(REPORT_COLUMNS))]
    lines = []
    for number, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [cell.rjust(width) for cell, width in zip(row[1:], widths[1:])]
        lines.append('  '.join(cells).rstrip())
        if number == 0:
            lines.append('  '.join('-' * width for width in widths))
    return '\n'.join(lines) + '\n'
