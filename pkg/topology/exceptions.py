"""
Topology validation errors. Each names the offending element.
"""
from core.exceptions import FarmValidationError


class DuplicateId(FarmValidationError):
    default_code = 'duplicate_id'


class DanglingForward(FarmValidationError):
    default_code = 'dangling_forward'


class ForwardCycle(FarmValidationError):
    default_code = 'forward_cycle'


class EmptyPack(FarmValidationError):
    default_code = 'empty_pack'


class EmptyService(FarmValidationError):
    default_code = 'empty_service'


class SharedDiskWithoutStore(FarmValidationError):
    default_code = 'shared_disk_without_store'


class InvalidCounts(FarmValidationError):
    default_code = 'invalid_counts'


class PartitionHosting(FarmValidationError):
    default_code = 'partition_hosting'


class GeoplexTooSmall(FarmValidationError):
    default_code = 'geoplex_too_small'


class UnknownFarm(FarmValidationError):
    default_code = 'unknown_farm'


class InvalidValue(FarmValidationError):
    default_code = 'invalid_value'
