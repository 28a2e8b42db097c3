"""
Initial bucket layout of partitioned services.
"""
from topology.exceptions import InvalidCounts
from topology.models import PartitionMap


def partition_map_init(bucket_count, partition_count):
    """
    Round-robin bucket assignment: bucket ``b`` goes to partition ``b mod P``.

    Per-partition bucket counts differ by at most one.

    Raises:
        InvalidCounts: If ``partition_count < 1`` or ``bucket_count < partition_count``
    """
    if partition_count < 1 or bucket_count < partition_count:
        raise InvalidCounts(
            f"Cannot spread {bucket_count} buckets over {partition_count} partitions",
            element=f"B={bucket_count},P={partition_count}",
        )
    assignment = tuple(bucket % partition_count for bucket in range(bucket_count))
    return PartitionMap(bucket_count=bucket_count, assignment=assignment)
