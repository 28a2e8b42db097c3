"""
Scenario DSL parser.

The grammar lives in ``grammar.lark``. Parsing is LALR with the contextual
lexer; the parse tree is then transformed into the ``scenarios.models``
syntax tree. The first error aborts with its line and column.
"""
import logging
from decimal import Decimal
from functools import lru_cache
from pathlib import Path

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from core.exceptions import FarmValidationError
from core.utils import DIMENSIONS, UnknownUnit
from scenarios.exceptions import DuplicateBlockName, ScenarioSyntaxError
from scenarios.models import (
    ArrivalBlock,
    BalancerBlock,
    DefaultsBlock,
    FarmBlock,
    GeoplexBlock,
    InjectAction,
    InjectBlock,
    NodeBlock,
    PackBlock,
    Quantity,
    ScenarioAst,
    ServiceBlock,
    StorageBlock,
    WorkloadBlock,
)

logger = logging.getLogger(__name__)

GRAMMAR = Path(__file__).with_name('grammar.lark')

BUNDLED = Path(__file__).with_name('bundled')


@lru_cache(maxsize=None)
def scenario_parser():
    return Lark.open(
        str(GRAMMAR),
        parser='lalr',
        lexer='contextual',
        propagate_positions=True,
        maybe_placeholders=True,
    )


def _string(token):
    return str(token)[1:-1]


def _integer(token):
    text = str(token)
    if not text.isdigit():
        raise ScenarioSyntaxError(token.line, token.column, message=f"expected an integer, got '{text}'")
    return int(text)


def _checked(quantity, dimension):
    if quantity.unit not in DIMENSIONS[dimension]:
        raise UnknownUnit(quantity.unit, dimension, quantity.line, quantity.column)
    return quantity


def _collect(block, entries, repeatable=()):
    """Fold ``(name, value, line, column)`` entries into keyword arguments."""
    values = {}
    for name, value, line, column in entries:
        if name in repeatable:
            values.setdefault(name, []).append(value)
            continue
        if name in values:
            raise ScenarioSyntaxError(line, column, message=f"duplicate '{name}' in {block}")
        values[name] = value
    for name in repeatable:
        values[name] = tuple(values.get(name, ()))
    return values


def _keyword(self, meta, children):
    return str(children[0])


def _attribute(name, dimension=None, convert=None):
    """Callback for ``keyword <value>`` rules that become one block attribute."""

    def build(self, meta, children):
        value = children[0]
        if dimension is not None:
            value = _checked(value, dimension)
        elif convert is not None:
            value = convert(value)
        return name, value, meta.line, meta.column

    return build


def _action(name):
    def build(self, meta, children):
        return name, children[0]

    return build


@v_args(meta=True)
class ScenarioBuilder(Transformer):
    """Parse tree -> ``ScenarioAst``."""

    def start(self, meta, children):
        return ScenarioAst(tuple(children))

    # Literals

    def quantity(self, meta, children):
        number, unit = children
        return Quantity(Decimal(str(number)), str(unit), meta.line, meta.column)

    def path(self, meta, children):
        return tuple(_string(token) for token in children)

    namelist = path

    def switch(self, meta, children):
        return str(children[0]) == 'on'

    geoplex_mode = _keyword
    service_kind = _keyword
    storage_variant = _keyword
    raid_level = _keyword
    pack_mode = _keyword
    balancer_policy = _keyword
    failback_mode = _keyword

    # Geoplex and farms

    def geoplex(self, meta, children):
        mode, farms = children
        return GeoplexBlock(mode, farms, meta.line, meta.column)

    def farm(self, meta, children):
        name, *services = children
        return FarmBlock(_string(name), tuple(services), meta.line, meta.column)

    def service(self, meta, children):
        name, kind, *attributes = children
        name = _string(name)
        values = _collect(f"service '{name}'", attributes, repeatable=('nodes',))
        return ServiceBlock(name=name, kind=kind, line=meta.line, column=meta.column, **values)

    def storage(self, meta, children):
        variant, invalidate, store = children
        block = StorageBlock(variant, invalidate, store, meta.line, meta.column)
        return 'storage', block, meta.line, meta.column

    def invalidate(self, meta, children):
        return _checked(children[0], 'time')

    def store(self, meta, children):
        return children[0]

    clones = _attribute('clones', convert=_integer)
    partitions = _attribute('partitions', convert=_integer)
    buckets = _attribute('buckets', convert=_integer)
    node = _attribute('nodes')
    forward = _attribute('forward', convert=_string)
    state_size = _attribute('state_size', dimension='size')
    passthrough = _attribute('passthrough')
    retry = _attribute('retry')

    def node_body(self, meta, children):
        rate, disk, raid, degraded = children
        return NodeBlock(_checked(rate, 'rate'), _checked(disk, 'size'), raid, degraded, meta.line, meta.column)

    def raid(self, meta, children):
        return children[0]

    def degraded(self, meta, children):
        return Decimal(str(children[0]))

    def pack(self, meta, children):
        size, mode, storage, hosts = children
        block = PackBlock(_integer(size), mode, storage, hosts, meta.line, meta.column)
        return 'pack', block, meta.line, meta.column

    def hosts(self, meta, children):
        return _integer(children[0])

    def balancer(self, meta, children):
        policy, detect = children
        return 'balancer', BalancerBlock(policy, detect, meta.line, meta.column), meta.line, meta.column

    def detect(self, meta, children):
        return _checked(children[0], 'time')

    # Workloads

    def workload(self, meta, children):
        name, target, arrival, mix, deadline, demand, write_demand, keys, start, duration = children
        read, write = mix
        key_space, (key_dist, exponent) = keys if keys is not None else (None, (None, None))
        return WorkloadBlock(
            name=_string(name),
            target=target,
            arrival=arrival,
            read=read,
            write=write,
            deadline=_checked(deadline, 'time'),
            demand=_checked(demand, 'time'),
            duration=_checked(duration, 'time'),
            write_demand=write_demand,
            keys=key_space,
            key_dist=key_dist,
            zipf_exponent=exponent,
            start=start,
            line=meta.line,
            column=meta.column,
        )

    def poisson(self, meta, children):
        return ArrivalBlock('poisson', _checked(children[0], 'rate'))

    def fixed(self, meta, children):
        return ArrivalBlock('fixed', _checked(children[0], 'time'))

    def mix(self, meta, children):
        return tuple(Decimal(str(token)) for token in children)

    def write_demand(self, meta, children):
        return _checked(children[0], 'time')

    def keys(self, meta, children):
        count, dist = children
        return _integer(count), dist if dist is not None else (None, None)

    def uniform_keys(self, meta, children):
        return 'uniform', None

    def zipf_keys(self, meta, children):
        return 'zipf', Decimal(str(children[0]))

    def sequential_keys(self, meta, children):
        return 'sequential', None

    def window_start(self, meta, children):
        return _checked(children[0], 'time')

    # Inject

    def inject(self, meta, children):
        return InjectBlock(tuple(children), meta.line, meta.column)

    def inject_item(self, meta, children):
        at, (action, path) = children
        return InjectAction(_checked(at, 'time'), action, path, meta.line, meta.column)

    fail_node = _action('fail_node')
    repair_node = _action('repair_node')
    fail_disk = _action('fail_disk')
    repair_disk = _action('repair_disk')
    fail_site = _action('fail_site')
    repair_site = _action('repair_site')
    add_clone = _action('add_clone')
    add_partition = _action('add_partition')

    # Defaults

    def defaults(self, meta, children):
        values = _collect('defaults', children)
        return DefaultsBlock(line=meta.line, column=meta.column, **values)

    seed_setting = _attribute('seed', convert=_integer)
    detect_setting = _attribute('detect', dimension='time')
    takeover_setting = _attribute('takeover', dimension='time')
    copy_rate_setting = _attribute('copy_rate', dimension='bandwidth')
    provision_setting = _attribute('provision', dimension='time')
    geoplex_detect_setting = _attribute('geoplex_detect', dimension='time')
    failback_setting = _attribute('failback')
    retry_setting = _attribute('retry')
    until_setting = _attribute('until', dimension='time')


def _check_block_names(ast):
    for kind, blocks in (('farm', ast.farms), ('workload', ast.workloads)):
        seen = set()
        for block in blocks:
            if block.name in seen:
                raise DuplicateBlockName(
                    f"{kind.capitalize()} '{block.name}' is declared twice (line {block.line})",
                    element=block.name,
                )
            seen.add(block.name)
    for kind in (GeoplexBlock, DefaultsBlock):
        found = [block for block in ast.blocks if isinstance(block, kind)]
        if len(found) > 1:
            keyword = 'geoplex' if kind is GeoplexBlock else 'defaults'
            raise DuplicateBlockName(
                f"At most one '{keyword}' block is allowed (second at line {found[1].line})",
                element=keyword,
            )


def parse_scenario(text):
    """
    Parse scenario text into a ``ScenarioAst``.

    Only syntax, units and block names are checked here; references and
    topology rules are checked by ``scenarios.loader``.

    Raises:
        ScenarioSyntaxError: At the first token the grammar does not accept
        UnknownUnit: If a literal's unit does not fit its dimension
        DuplicateBlockName: If farm or workload names repeat
    """
    try:
        tree = scenario_parser().parse(text)
    except UnexpectedInput as error:
        expected = getattr(error, 'expected', None) or getattr(error, 'allowed', None) or ()
        raise ScenarioSyntaxError(error.line, error.column, expected) from None

    try:
        ast = ScenarioBuilder().transform(tree)
    except VisitError as error:
        if isinstance(error.orig_exc, FarmValidationError):
            raise error.orig_exc from None
        raise

    _check_block_names(ast)
    logger.debug("Parsed scenario: %d blocks", len(ast.blocks))
    return ast


def parse_scenario_file(path):
    return parse_scenario(Path(path).read_text(encoding='utf-8'))


def bundled_scenarios():
    """Names of the scenarios shipped with the package, sorted."""
    return sorted(path.stem for path in BUNDLED.glob('*.farm'))


def resolve_scenario_path(name):
    """
    Path of a scenario file. A name that is not an existing file but names
    a bundled scenario (``msft1997``) resolves to the bundled copy.
    """
    path = Path(name)
    if path.exists() or path.suffix:
        return path
    bundled = BUNDLED / f"{name}.farm"
    return bundled if bundled.exists() else path
