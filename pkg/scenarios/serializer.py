"""
Canonical scenario text.

Two-space indentation, top-level blocks in declaration order separated by a
blank line, one attribute per line in a fixed order. Node bodies stay on a
single line. Serializing a parsed canonical text gives the same bytes.
"""
from scenarios.models import (
    DefaultsBlock,
    FarmBlock,
    GeoplexBlock,
    InjectBlock,
    WorkloadBlock,
    format_number,
)

INDENT = '  '


def _quote(name):
    return f'"{name}"'


def _path(path):
    return '/'.join(_quote(segment) for segment in path)


def _switch(value):
    return 'on' if value else 'off'


def _node_body(node):
    parts = [f"rate {node.rate}", f"disk {node.disk}"]
    if node.raid is not None:
        parts.append(f"raid {node.raid}")
    if node.degraded is not None:
        parts.append(f"degraded {format_number(node.degraded)}")
    return '{ ' + ' '.join(parts) + ' }'


def _block(header, lines, depth=0):
    pad = INDENT * depth
    body = [f"{pad}{INDENT}{line}" for line in lines]
    return '\n'.join([f"{pad}{header} {{", *body, f"{pad}}}"])


def _service_lines(service):
    lines = [f"kind {service.kind}"]
    storage = service.storage
    if storage is not None:
        line = f"storage {storage.variant}"
        if storage.invalidate is not None:
            line += f" invalidate {storage.invalidate}"
        if storage.store is not None:
            line += f" store {_node_body(storage.store)}"
        lines.append(line)
    for attribute in ('clones', 'partitions', 'buckets'):
        value = getattr(service, attribute)
        if value is not None:
            lines.append(f"{attribute} {value}")
    lines.extend(f"node {_node_body(node)}" for node in service.nodes)
    if service.pack is not None:
        pack = service.pack
        line = f"pack {{ size {pack.size} mode {pack.mode} storage {pack.storage}"
        if pack.hosts is not None:
            line += f" hosts {pack.hosts}"
        lines.append(line + ' }')
    if service.balancer is not None:
        line = f"balancer {service.balancer.policy}"
        if service.balancer.detect is not None:
            line += f" detect {service.balancer.detect}"
        lines.append(line)
    if service.forward is not None:
        lines.append(f"forward {_quote(service.forward)}")
    if service.state_size is not None:
        lines.append(f"state_size {service.state_size}")
    if service.passthrough is not None:
        lines.append(f"passthrough {_switch(service.passthrough)}")
    if service.retry is not None:
        lines.append(f"retry {_switch(service.retry)}")
    return lines


def _farm(farm):
    services = [
        _block(f"service {_quote(service.name)}", _service_lines(service), depth=1)
        for service in farm.services
    ]
    return '\n'.join([f"farm {_quote(farm.name)} {{", *services, '}'])


def _geoplex(geoplex):
    farms = ', '.join(_quote(name) for name in geoplex.farms)
    return _block('geoplex', [f"mode {geoplex.mode}", f"farms {farms}"])


def _workload(workload):
    lines = [
        f"target {_path(workload.target)}",
        f"arrival {workload.arrival.kind} {workload.arrival.value}",
        f"mix read {format_number(workload.read)} write {format_number(workload.write)}",
        f"deadline {workload.deadline}",
        f"demand {workload.demand}",
    ]
    if workload.write_demand is not None:
        lines.append(f"write_demand {workload.write_demand}")
    if workload.keys is not None:
        line = f"keys {workload.keys}"
        if workload.key_dist == 'zipf':
            line += f" zipf {format_number(workload.zipf_exponent)}"
        elif workload.key_dist is not None:
            line += f" {workload.key_dist}"
        lines.append(line)
    if workload.start is not None:
        lines.append(f"start {workload.start}")
    lines.append(f"duration {workload.duration}")
    return _block(f"workload {_quote(workload.name)}", lines)


_ACTION_WORDS = {
    'fail_node': 'fail node',
    'repair_node': 'repair node',
    'fail_disk': 'fail disk',
    'repair_disk': 'repair disk',
    'fail_site': 'fail site',
    'repair_site': 'repair site',
    'add_clone': 'add_clone',
    'add_partition': 'add_partition',
}


def _inject(inject):
    lines = [
        f"at {action.at}: {_ACTION_WORDS[action.action]} {_path(action.path)}"
        for action in inject.actions
    ]
    return _block('inject', lines)


_DEFAULT_ORDER = (
    'seed', 'detect', 'takeover', 'copy_rate', 'provision', 'geoplex_detect', 'failback', 'retry', 'until',
)


def _defaults(defaults):
    lines = []
    for name in _DEFAULT_ORDER:
        value = getattr(defaults, name)
        if value is None:
            continue
        if name == 'retry':
            value = _switch(value)
        lines.append(f"{name} {value}")
    return _block('defaults', lines)


_WRITERS = {
    GeoplexBlock: _geoplex,
    FarmBlock: _farm,
    WorkloadBlock: _workload,
    InjectBlock: _inject,
    DefaultsBlock: _defaults,
}


def serialize_scenario(ast):
    """
    Canonical text of a scenario; an empty scenario gives ``''``.
    """
    if not ast.blocks:
        return ''
    return '\n\n'.join(_WRITERS[type(block)](block) for block in ast.blocks) + '\n'
