"""
Trace audit of partition affinity.
"""
import re

from engine.trace import TraceLog

_OWNER = re.compile(r'^p(\d+) (n\d+|-)$')
_BUCKET = re.compile(r'^b(\d+) p(\d+)$')
_ROUTE = re.compile(r'^req=(\d+) b(\d+) p(\d+) (n\d+)$')


def audit_bucket_ownership(records):
    """
    Replay ownership and bucket records and check every partitioned route.

    A ``Route`` record is correct when its bucket belongs to the partition
    it names and that partition's single owner at that instant is the node
    it names. Routes of cloned services carry no bucket and are skipped.

    Args:
        records: ``TraceRecord`` iterable, or rendered trace text

    Returns:
        list: One message per violation; empty when the trace is clean
    """
    if isinstance(records, str):
        records = TraceLog.parse(records)

    owners = {}
    buckets = {}
    violations = []
    for record in records:
        if record.kind == 'Owner':
            match = _OWNER.match(record.detail)
            if match:
                partition, node = match.groups()
                owners[(record.subject, int(partition))] = None if node == '-' else node
        elif record.kind == 'Bucket':
            match = _BUCKET.match(record.detail)
            if match:
                bucket, partition = map(int, match.groups())
                buckets[(record.subject, bucket)] = partition
        elif record.kind == 'Route':
            match = _ROUTE.match(record.detail)
            if not match:
                continue
            request, bucket, partition, node = match.groups()
            bucket, partition = int(bucket), int(partition)
            assigned = buckets.get((record.subject, bucket))
            owner = owners.get((record.subject, partition))
            if assigned != partition:
                violations.append(
                    f"{record.time} {record.subject} req={request}: bucket {bucket} "
                    f"belongs to p{assigned}, routed to p{partition}"
                )
            elif owner != node:
                violations.append(
                    f"{record.time} {record.subject} req={request}: p{partition} "
                    f"is owned by {owner or 'nobody'}, routed to {node}"
                )
    return violations
