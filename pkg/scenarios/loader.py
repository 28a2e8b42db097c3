"""
Scenario loading: from a parsed ``ScenarioAst`` to everything a
``Simulation`` needs.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from django.conf import settings

from core.utils import to_base_units
from engine.models import RunSettings
from lifecycle.models import FailbackMode, ScenarioAction, ScenarioEvent
from routing.models import BalancerPolicy, BalancerVariant
from scenarios.exceptions import UnresolvedReference
from topology.builder import build_topology
from topology.exceptions import InvalidValue
from topology.models import (
    STORE_ID,
    STORE_NAME,
    FarmSpec,
    GeoplexMode,
    GeoplexSpec,
    NodeSpec,
    PackMode,
    PackSpec,
    RaidLevel,
    ServiceKind,
    ServiceSpec,
    StorageModel,
    StorageVariant,
)
from workload.models import ArrivalKind, ArrivalProcess, KeyDistribution, KeyDistributionKind, WorkloadSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoadedScenario:
    """A validated scenario, ready to run."""

    topology: object
    workloads: tuple
    events: tuple
    settings: RunSettings

    @property
    def node_count(self):
        return self.topology.node_count


def _us(quantity):
    return to_base_units(quantity.value, quantity.unit, 'time', quantity.line, quantity.column)


def _bytes(quantity, dimension='size'):
    return to_base_units(quantity.value, quantity.unit, dimension, quantity.line, quantity.column)


def _rate(quantity):
    return to_base_units(quantity.value, quantity.unit, 'rate', quantity.line, quantity.column)


def run_settings(defaults, **overrides):
    """
    Run settings from the ``FARMSIM_*`` settings, then the scenario's
    ``defaults`` block, then ``overrides`` (CLI flags; ``None`` is ignored).
    """
    values = {}
    if defaults is not None:
        if defaults.seed is not None:
            values['seed'] = defaults.seed
        if defaults.until is not None:
            values['until'] = _us(defaults.until)
        if defaults.takeover is not None:
            values['takeover_time'] = _us(defaults.takeover)
        if defaults.geoplex_detect is not None:
            values['geoplex_detect'] = _us(defaults.geoplex_detect)
        if defaults.provision is not None:
            values['provision_time'] = _us(defaults.provision)
        if defaults.copy_rate is not None:
            values['copy_rate'] = _bytes(defaults.copy_rate, 'bandwidth')
        if defaults.failback is not None:
            values['failback'] = FailbackMode(defaults.failback)
    values.update({key: value for key, value in overrides.items() if value is not None})
    return RunSettings.from_settings(**values)


def _node_spec(node_id, block):
    return NodeSpec(
        id=node_id,
        service_rate=_rate(block.rate),
        disk_capacity=_bytes(block.disk),
        raid_level=RaidLevel(block.raid) if block.raid is not None else RaidLevel.NONE,
        degraded_rate_factor=float(block.degraded) if block.degraded is not None else 1.0,
    )


def _clone_specs(path, block):
    """Clone set of a cloned service; with ``clones N`` the node blocks repeat cyclically."""
    templates = block.nodes
    if block.clones is None:
        return tuple(_node_spec(index, template) for index, template in enumerate(templates))
    if block.clones > 0 and not templates:
        raise InvalidValue(f"Service '{path}' declares clones but no node", element=path)
    return tuple(_node_spec(index, templates[index % len(templates)]) for index in range(block.clones))


def _pack_specs(path, block, storage_variant):
    """
    Packs of a partitioned service.

    A pack template hosts ``hosts`` partitions per pack (one for
    active-passive packs, one per member for active-active packs by
    default). Without a template every partition is a bare node.
    """
    templates = block.nodes
    if not templates:
        return ()
    partitions = block.partitions if block.partitions is not None else len(templates)
    if partitions < 1:
        raise InvalidValue(f"Service '{path}' needs at least one partition", element=path)

    if block.pack is None:
        return tuple(
            PackSpec(
                id=partition,
                members=(_node_spec(partition, templates[partition % len(templates)]),),
                mode=PackMode.ACTIVE_PASSIVE,
                storage_variant=storage_variant,
                partitions_hosted=(partition,),
            )
            for partition in range(partitions)
        )

    template = block.pack
    mode = PackMode(template.mode)
    if template.size < 1:
        raise InvalidValue(f"Pack of '{path}' needs at least one member", element=path)
    hosts = template.hosts
    if hosts is None:
        hosts = 1 if mode is PackMode.ACTIVE_PASSIVE else template.size
    if hosts < 1:
        raise InvalidValue(f"Pack of '{path}' must host at least one partition", element=path)

    packs = []
    for pack_id in range(math.ceil(partitions / hosts)):
        first = pack_id * template.size
        members = tuple(
            _node_spec(node_id, templates[node_id % len(templates)])
            for node_id in range(first, first + template.size)
        )
        hosted = tuple(range(pack_id * hosts, min(partitions, (pack_id + 1) * hosts)))
        packs.append(PackSpec(
            id=pack_id,
            members=members,
            mode=mode,
            storage_variant=StorageVariant(template.storage),
            partitions_hosted=hosted,
        ))
    return tuple(packs)


def declared_node_count(block):
    """Nodes a service block lays out, shared store excluded."""
    if block.kind == ServiceKind.RACS.value:
        return block.clones if block.clones is not None else len(block.nodes)
    if not block.nodes:
        return 0
    partitions = block.partitions if block.partitions is not None else len(block.nodes)
    if block.pack is None:
        return partitions
    hosts = block.pack.hosts or (1 if block.pack.mode == PackMode.ACTIVE_PASSIVE.value else block.pack.size)
    return math.ceil(partitions / hosts) * block.pack.size


def _service_spec(farm_name, block, defaults):
    path = f"{farm_name}/{block.name}"
    kind = ServiceKind(block.kind)

    storage = StorageModel()
    if block.storage is not None:
        storage = StorageModel(
            variant=StorageVariant(block.storage.variant),
            shared_store=_node_spec(STORE_ID, block.storage.store) if block.storage.store is not None else None,
            invalidation_cost=_us(block.storage.invalidate) if block.storage.invalidate is not None else 0,
        )

    detect = getattr(settings, 'FARMSIM_DETECT_DELAY_US', 500_000)
    if defaults is not None and defaults.detect is not None:
        detect = _us(defaults.detect)
    variant = BalancerVariant.SPRAYER_ROUND_ROBIN
    if block.balancer is not None:
        variant = BalancerVariant(block.balancer.policy)
        if block.balancer.detect is not None:
            detect = _us(block.balancer.detect)

    retry = block.retry
    if retry is None:
        retry = bool(defaults is not None and defaults.retry)

    nodes = ()
    packs = ()
    bucket_count = 0
    if kind is ServiceKind.RACS:
        nodes = _clone_specs(path, block)
    else:
        packs = _pack_specs(path, block, storage.variant)
        partitions = sum(len(pack.partitions_hosted) for pack in packs)
        if block.buckets is not None:
            bucket_count = block.buckets
        else:
            bucket_count = max(getattr(settings, 'FARMSIM_DEFAULT_BUCKETS', 64), partitions)

    return ServiceSpec(
        name=block.name,
        kind=kind,
        storage=storage,
        balancer=BalancerPolicy(variant, detect),
        nodes=nodes,
        packs=packs,
        bucket_count=bucket_count,
        state_size=_bytes(block.state_size) if block.state_size is not None else 0,
        forwards_to=block.forward,
        deadline_passthrough=block.passthrough if block.passthrough is not None else True,
        retry=retry,
    )


def _geoplex_spec(ast, run):
    farms = tuple(
        FarmSpec(farm.name, tuple(_service_spec(farm.name, service, ast.defaults) for service in farm.services))
        for farm in ast.farms
    )
    if ast.geoplex is None:
        return GeoplexSpec(farms=farms, detection_delay=run.geoplex_detect)
    return GeoplexSpec(
        farms=farms,
        mode=GeoplexMode(ast.geoplex.mode),
        replicas=tuple(ast.geoplex.farms),
        detection_delay=run.geoplex_detect,
    )


def _workload_spec(block, geoplex):
    element = f"workload '{block.name}'"
    target = block.target
    if len(target) == 2:
        farm = geoplex.farm(target[0])
        if farm is None or farm.service(target[1]) is None:
            raise UnresolvedReference(f"{element} targets unknown service '{'/'.join(target)}'", element=block.name)
    elif len(target) == 1:
        if geoplex.mode is GeoplexMode.NONE:
            raise UnresolvedReference(
                f"{element} targets '{target[0]}' across a geoplex, but no geoplex is declared",
                element=block.name,
            )
        for name in geoplex.replicas:
            farm = geoplex.farm(name)
            if farm is None or farm.service(target[0]) is None:
                raise UnresolvedReference(f"Farm '{name}' has no service '{target[0]}' for {element}", element=block.name)
    else:
        raise UnresolvedReference(f"{element} target must be \"farm\"/\"service\" or \"service\"", element=block.name)

    if block.arrival.kind == ArrivalKind.POISSON.value:
        arrival = ArrivalProcess(ArrivalKind.POISSON, rate=_rate(block.arrival.value))
    else:
        arrival = ArrivalProcess(ArrivalKind.FIXED, interval=_us(block.arrival.value))

    weight = block.read + block.write
    if weight <= 0:
        raise InvalidValue(f"Mix of {element} needs a positive read or write weight", element=block.name)

    key_dist = KeyDistribution()
    if block.key_dist is not None:
        exponent = float(block.zipf_exponent) if block.zipf_exponent is not None else 0.0
        key_dist = KeyDistribution(KeyDistributionKind(block.key_dist), exponent)
    demand = _us(block.demand)

    return WorkloadSpec(
        name=block.name,
        target=tuple(target),
        arrival=arrival,
        read_fraction=float(Fraction(block.read) / Fraction(weight)),
        key_space=block.keys if block.keys is not None else getattr(settings, 'FARMSIM_DEFAULT_KEY_SPACE', 65_536),
        deadline=_us(block.deadline),
        service_demand=demand,
        write_demand=_us(block.write_demand) if block.write_demand is not None else demand,
        duration=_us(block.duration),
        start=_us(block.start) if block.start is not None else 0,
        key_dist=key_dist,
    )


def _scenario_event(action, geoplex, scaled):
    kind = ScenarioAction(action.action)
    path = action.path
    where = f"line {action.line}" if action.line is not None else 'inject'
    if len(path) != kind.path_depth:
        raise UnresolvedReference(
            f"{kind.value} at {where} needs a path of {kind.path_depth} segment(s), got '{'/'.join(path)}'",
            element='/'.join(path),
        )

    farm = geoplex.farm(path[0])
    if farm is None:
        raise UnresolvedReference(f"{kind.value} at {where} names unknown farm '{path[0]}'", element=path[0])
    if len(path) >= 2:
        service = farm.service(path[1])
        if service is None:
            raise UnresolvedReference(f"{kind.value} at {where} names unknown service '{'/'.join(path[:2])}'",
                                      element='/'.join(path[:2]))
        if kind is ScenarioAction.ADD_CLONE and not service.is_racs:
            raise UnresolvedReference(f"add_clone at {where} needs a cloned service", element='/'.join(path))
        if kind is ScenarioAction.ADD_PARTITION and not service.is_raps:
            raise UnresolvedReference(f"add_partition at {where} needs a partitioned service", element='/'.join(path))
    if len(path) == 3:
        _check_node_name(kind, where, service, path, scaled)

    return ScenarioEvent(at=_us(action.at), action=kind, path=tuple(path))


def _check_node_name(kind, where, service, path, scaled):
    name = path[2]
    if name == STORE_NAME:
        if service.storage.shared_store is None:
            raise UnresolvedReference(f"{kind.value} at {where}: '{path[1]}' has no shared store", element=name)
        return
    if not (name.startswith('n') and name[1:].isdigit()):
        raise UnresolvedReference(f"{kind.value} at {where}: '{name}' is not a node name", element=name)
    # Nodes created by scaling steps are only known at run time
    if int(name[1:]) not in {node.id for node in service.all_nodes} and (path[0], path[1]) not in scaled:
        raise UnresolvedReference(f"{kind.value} at {where} names unknown node '{'/'.join(path)}'",
                                  element='/'.join(path))


def load_scenario(ast, **overrides):
    """
    Resolve a parsed scenario into a validated topology, workloads, the
    scripted events and the run settings.

    Args:
        ast (ScenarioAst): Parsed scenario
        **overrides: ``RunSettings`` fields set from the command line

    Returns:
        LoadedScenario

    Raises:
        FarmValidationError: Unit, reference or topology problems
    """
    run = run_settings(ast.defaults, **overrides)
    geoplex = _geoplex_spec(ast, run)
    topology = build_topology(geoplex)
    workloads = tuple(_workload_spec(block, geoplex) for block in ast.workloads)

    scaled = {
        tuple(action.path[:2]) for action in ast.actions
        if action.action in (ScenarioAction.ADD_CLONE.value, ScenarioAction.ADD_PARTITION.value)
    }
    events = tuple(_scenario_event(action, geoplex, scaled) for action in ast.actions)

    logger.info("Loaded scenario: %d farms, %d nodes, %d workloads, %d events",
                len(geoplex.farms), topology.node_count, len(workloads), len(events))
    return LoadedScenario(topology=topology, workloads=workloads, events=events, settings=run)
