"""
Mutable runtime state of a simulation, built from an immutable topology.

Each node keeps its FIFO queue of jobs and the history of its lifecycle
transitions; each service keeps its balancer view, its partition tables and
its packs; the geoplex keeps the farms it believes live.
"""
from array import array
from bisect import bisect_right, insort
from collections import deque

from lifecycle.models import FailbackMode, NodeState, PackRuntime
from routing.models import BalancerCursor
from topology.models import GeoplexMode, node_name


class Job:
    """One unit of node work on behalf of a visit."""

    __slots__ = ('visit', 'demand', 'write', 'store')

    def __init__(self, visit, demand, write=False, store=False):
        self.visit = visit
        self.demand = demand
        self.write = write
        self.store = store


class NodeRuntime:
    """A node during a run; the shared store of a service is one too."""

    __slots__ = (
        'spec', 'id', 'farm', 'service', 'path', 'state', 'up', 'times', 'states',
        'queue', 'current', 'busy_since', 'busy_time', 'epoch', 'fail_seq',
        'disk_faults', 'cause', 'down_since', 'downtime', 'writes', 'samples',
        'scale', 'fixed_cost', 'base_rate',
    )

    def __init__(self, spec, farm, service, base_rate, state=NodeState.HEALTHY, at=0, fixed_cost=False):
        self.spec = spec
        self.id = spec.id
        self.farm = farm
        self.service = service
        self.path = f"{farm}/{service}/{node_name(spec.id)}"
        self.state = state
        self.up = state.is_serving
        self.times = [at]
        self.states = [state]
        self.queue = deque()
        self.current = None
        self.busy_since = 0
        self.busy_time = 0
        self.epoch = 0
        self.fail_seq = 0
        self.disk_faults = 0
        self.cause = None
        self.down_since = None
        self.downtime = 0
        self.writes = 0
        self.samples = array('q')
        self.fixed_cost = fixed_cost
        self.base_rate = base_rate
        self.scale = 1.0
        self.rescale()

    def __repr__(self):
        return f"<NodeRuntime {self.path} {self.state.value}>"

    @property
    def name(self):
        return node_name(self.id)

    @property
    def queue_length(self):
        """Jobs waiting plus the one in service."""
        return len(self.queue) + (self.current is not None)

    def rescale(self):
        """Recompute the demand multiplier after a rate change."""
        if self.fixed_cost:
            self.scale = 1.0
            return
        factor = self.spec.degraded_rate_factor if self.state is NodeState.DEGRADED else 1.0
        self.scale = self.base_rate / (self.spec.service_rate * factor)

    def service_time(self, demand):
        """Microseconds this node needs for ``demand`` (round half up, at least 1)."""
        if self.scale == 1.0:
            return demand if demand > 0 else 1
        return max(1, int(demand * self.scale + 0.5))

    def set_state(self, state, at):
        """Record a transition; legality is checked by the lifecycle controller."""
        self.state = state
        self.up = state.is_serving
        self.times.append(at)
        self.states.append(state)
        self.rescale()

    def state_at(self, t):
        """Lifecycle state at time ``t``; ``None`` before the node existed."""
        index = bisect_right(self.times, t) - 1
        if index < 0:
            return None
        return self.states[index]


class ServiceRuntime:
    """A service during a run."""

    def __init__(self, spec, farm, partition_map=None):
        self.spec = spec
        self.farm = farm
        self.name = spec.name
        self.path = f"{farm}/{spec.name}"
        self.counters = None
        self.farm_counters = None
        self.cursor = BalancerCursor()
        self.next_service = None
        self.terminal = spec.forwards_to is None
        base_rate = spec.base_rate
        self.nodes = {
            node.id: NodeRuntime(node, farm, spec.name, base_rate)
            for node in spec.all_nodes
        }
        self.store = None
        if spec.storage.shared_store is not None:
            self.store = NodeRuntime(
                spec.storage.shared_store, farm, spec.name, base_rate, fixed_cost=True,
            )
        self.view = sorted(self.nodes) if spec.is_racs else []
        self.bucket_count = 0
        self.assignment = []
        self.target_assignment = []
        self.serving = {}
        self.packs = []
        self.pack_of_partition = {}
        self.pack_of_node = {}
        if partition_map is not None:
            self.bucket_count = partition_map.bucket_count
            self.assignment = list(partition_map.assignment)
            self.target_assignment = list(partition_map.assignment)
            self.serving = {partition: member for partition, (_, member) in partition_map.serving.items()}

    def __repr__(self):
        return f"<ServiceRuntime {self.path}>"

    @property
    def is_raps(self):
        return self.spec.is_raps

    @property
    def detection_delay(self):
        return self.spec.balancer.detection_delay

    @property
    def partition_count(self):
        return len(self.serving)

    def add_pack(self, pack_spec, takeover_time, failback):
        members = {member.id: self.nodes[member.id] for member in pack_spec.members}
        pack = PackRuntime(
            spec=pack_spec,
            members=members,
            serving=self.serving,
            hosted=list(pack_spec.partitions_hosted),
            home={partition: self.serving[partition] for partition in pack_spec.partitions_hosted},
            detection_delay=self.detection_delay,
            takeover_time=takeover_time,
            failback=failback,
        )
        self.packs.append(pack)
        for partition in pack.hosted:
            self.pack_of_partition[partition] = pack
        for node_id in members:
            self.pack_of_node[node_id] = pack
        return pack

    def add_node(self, node):
        self.nodes[node.id] = node

    def queue_length_of(self, node_id):
        return self.nodes[node_id].queue_length

    def admit(self, node_id):
        """Put a node back into the balancer view."""
        if self.spec.is_racs and node_id not in self.view:
            insort(self.view, node_id)

    def evict(self, node_id):
        """Drop a node from the balancer view."""
        if node_id in self.view:
            self.view.remove(node_id)

    def all_node_runtimes(self):
        nodes = [self.nodes[node_id] for node_id in sorted(self.nodes)]
        if self.store is not None:
            nodes.append(self.store)
        return nodes


class FarmRuntime:
    def __init__(self, spec):
        self.spec = spec
        self.name = spec.name
        self.services = {}
        self.site_failed = False
        self.site_epoch = 0
        self.counters = None

    def __repr__(self):
        return f"<FarmRuntime {self.name}>"


class SimulationState:
    """
    Everything that changes during a run.

    ``geoplex_view`` is the ordered list of replica farms the geoplex
    router believes live.
    """

    def __init__(self, topology, takeover_time=2_000_000, failback=FailbackMode.NONE):
        self.topology = topology
        geoplex = topology.geoplex
        self.mode = geoplex.mode
        self.replicas = list(geoplex.replicas)
        self.geoplex_view = list(geoplex.replicas)
        self.geoplex_detect = geoplex.detection_delay
        self.farms = {}
        for farm_spec in topology.farms:
            farm = FarmRuntime(farm_spec)
            for service_spec in farm_spec.services:
                partition_map = topology.partition_map(farm_spec.name, service_spec.name)
                service = ServiceRuntime(service_spec, farm_spec.name, partition_map)
                for pack_spec in service_spec.packs:
                    service.add_pack(pack_spec, takeover_time, failback)
                farm.services[service_spec.name] = service
            for service in farm.services.values():
                if service.spec.forwards_to is not None:
                    service.next_service = farm.services[service.spec.forwards_to]
            self.farms[farm_spec.name] = farm

    @property
    def is_geoplex(self):
        return self.mode is not GeoplexMode.NONE

    def farm(self, name):
        return self.farms.get(name)

    def service(self, farm_name, service_name):
        farm = self.farms.get(farm_name)
        return farm.services.get(service_name) if farm else None

    def services(self):
        for farm in self.farms.values():
            yield from farm.services.values()

    def nodes(self):
        """Every node runtime, stores included, in declaration order."""
        for service in self.services():
            yield from service.all_node_runtimes()

    def admit_farm(self, name):
        if name in self.replicas and name not in self.geoplex_view:
            self.geoplex_view.append(name)
            self.geoplex_view.sort(key=self.replicas.index)

    def evict_farm(self, name):
        if name in self.geoplex_view:
            self.geoplex_view.remove(name)
