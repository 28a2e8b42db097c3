"""
Scenario syntax tree.

Every node carries the ``line`` and ``column`` it was parsed from. Positions
do not take part in equality, so a tree parsed from canonical text equals
the tree it was serialized from.
"""
from dataclasses import dataclass, field
from decimal import Decimal


def position():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Quantity:
    """A dimensioned literal such as ``500 ms`` or ``10 GB``."""

    value: Decimal
    unit: str
    line: int = position()
    column: int = position()

    def __str__(self):
        return f"{format_number(self.value)} {self.unit}"


def format_number(value):
    """Shortest plain rendering of a ``Decimal``: ``100``, ``0.5``."""
    return format(value.normalize(), 'f')


@dataclass(frozen=True)
class NodeBlock:
    rate: Quantity
    disk: Quantity
    raid: str = None
    degraded: Decimal = None
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class StorageBlock:
    variant: str
    invalidate: Quantity = None
    store: NodeBlock = None
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class PackBlock:
    size: int
    mode: str
    storage: str
    hosts: int = None
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class BalancerBlock:
    policy: str
    detect: Quantity = None
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class ServiceBlock:
    """
    One ``service`` block. Attributes left out of the text are ``None``;
    ``nodes`` keeps every ``node`` block in order.
    """

    name: str
    kind: str
    storage: StorageBlock = None
    clones: int = None
    partitions: int = None
    buckets: int = None
    nodes: tuple = ()
    pack: PackBlock = None
    balancer: BalancerBlock = None
    forward: str = None
    state_size: Quantity = None
    passthrough: bool = None
    retry: bool = None
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class FarmBlock:
    name: str
    services: tuple = ()
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class GeoplexBlock:
    mode: str
    farms: tuple
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class ArrivalBlock:
    kind: str
    value: Quantity


@dataclass(frozen=True)
class WorkloadBlock:
    name: str
    target: tuple
    arrival: ArrivalBlock
    read: Decimal
    write: Decimal
    deadline: Quantity
    demand: Quantity
    duration: Quantity
    write_demand: Quantity = None
    keys: int = None
    key_dist: str = None
    zipf_exponent: Decimal = None
    start: Quantity = None
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class InjectAction:
    """``at <time>: <action> <path>``."""

    at: Quantity
    action: str
    path: tuple
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class InjectBlock:
    actions: tuple = ()
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class DefaultsBlock:
    seed: int = None
    detect: Quantity = None
    takeover: Quantity = None
    copy_rate: Quantity = None
    provision: Quantity = None
    geoplex_detect: Quantity = None
    failback: str = None
    retry: bool = None
    until: Quantity = None
    line: int = position()
    column: int = position()


@dataclass(frozen=True)
class ScenarioAst:
    """Top-level blocks in declaration order."""

    blocks: tuple = ()

    def _of(self, kind):
        return tuple(block for block in self.blocks if isinstance(block, kind))

    @property
    def farms(self):
        return self._of(FarmBlock)

    @property
    def workloads(self):
        return self._of(WorkloadBlock)

    @property
    def injects(self):
        return self._of(InjectBlock)

    @property
    def actions(self):
        return tuple(action for inject in self.injects for action in inject.actions)

    @property
    def geoplex(self):
        found = self._of(GeoplexBlock)
        return found[0] if found else None

    @property
    def defaults(self):
        found = self._of(DefaultsBlock)
        return found[0] if found else None
