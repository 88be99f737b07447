# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Schema manipulation operations and the audit trail.

Each operation (create, drop, rename, change, split, union) is compiled
into a rewriting rule with a matching and an optional propagation
relation. Schema rewrites are recorded in an :class:`AuditTrail` whose
replay from the origin schema reproduces the current schema; the trail is
what lets cloned schema nodes be read back as inheritance.
"""
from dataclasses import dataclass, field
from typing import (
    Any, Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional,
    Tuple, Union
)
import enum
import logging

from pgse.common import (
    AmbiguousOriginError,
    InvalidPayloadError,
    PgseError,
    ReplayMismatchError,
    UnknownLabelError,
    UnknownTargetError,
    UnsupportedHistoryError,
    invert_map,
)
from pgse.ddl import GraphType, TypeIndex, graph_type_to_schema, parse_ddl
from pgse.graph import (
    DATA_TYPES,
    ObjectId,
    PropertyDictionary,
    PropertyGraph,
    Value,
    ValueMode,
    as_values,
    graph_from_json,
    graph_to_json,
    type_token,
)
from pgse.hom import Homomorphism, check_homomorphism, compose
from pgse.propagation import (
    PropagationRelation,
    induced_schema_rule,
    propagate_to_instance,
    propagate_to_schema,
    relax_mandatory,
)
from pgse.rewrite import (
    Rule,
    RewriteResult,
    apply_rule,
    derive_actions,
    matching_violations,
)

module_logger = logging.getLogger(__name__)


class SmoKind(enum.Enum):
    """Schema manipulation operations."""
    CREATE = 'create'
    DROP = 'drop'
    RENAME = 'rename'
    CHANGE = 'change'
    SPLIT = 'split'
    UNION = 'union'


class Direction(enum.Enum):
    """Which side is rewritten and which side follows."""
    SCHEMA_TO_DATA = 'schema-to-data'
    """Prescriptive: the schema is rewritten, the instance follows."""
    DATA_TO_SCHEMA = 'data-to-schema'
    """Descriptive: the instance is rewritten, the schema follows."""


@dataclass
class SchemaManipulation:
    """One schema manipulation operation.

    The target holds schema labels in the schema-to-data direction and
    instance node ids in the data-to-schema direction. Payload keys by
    kind:

    * create: ``properties``, ``mandatory``; ``from`` and ``to`` for an
      edge type; ``edges`` for new instance nodes.
    * drop: ``from`` and ``to`` for an edge type.
    * rename: ``to``, plus ``key`` when renaming a property key.
    * change: ``add``, ``remove``, ``retype``, ``mandatory``.
    * split: ``into``, ``select``, ``drop``, ``loops`` (horizontal) or
      ``into`` and ``partition`` (vertical).
    * union: ``into``, ``vertical``.

    Property specs map keys to a data type name, a literal or a list of
    literals.
    """
    kind: SmoKind
    target: Union[str, List[str]]
    payload: Dict[str, Any] = field(default_factory=dict)
    direction: Direction = Direction.SCHEMA_TO_DATA
    relation: PropagationRelation = field(
        default_factory=PropagationRelation
    )

    def targets(self) -> List[str]:
        """Returns the target as a list."""
        if isinstance(self.target, (list, tuple)):
            return [str(t) for t in self.target]
        return [str(self.target)]

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form."""
        res = {
            'kind': self.kind.value,
            'target': self.target,
            'direction': self.direction.value,
            **self.payload,
        }
        if not self.relation.is_empty():
            res['relation'] = self.relation.to_json()
        return res

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> 'SchemaManipulation':
        """Parses the interchange form.

        Raises:
            InvalidPayloadError: The document is malformed.
        """
        try:
            payload = {
                k: v for k, v in obj.items()
                if k not in ('kind', 'target', 'direction', 'relation')
            }
            return cls(
                SmoKind(obj['kind']),
                obj['target'],
                payload,
                Direction(obj.get('direction', 'schema-to-data')),
                PropagationRelation.from_json(obj.get('relation')),
            )
        except (KeyError, ValueError, AttributeError, TypeError) as e:
            raise InvalidPayloadError(f'Malformed operation: {e}') from e


@dataclass
class CompiledSmo:
    """Rule, matching and bookkeeping produced by :func:`compile_smo`.

    Attributes:
        labels: Labels of new elements, keyed by ``R`` element id.
    """
    rule: Optional[Rule]
    matching: Dict[ObjectId, ObjectId]
    relation: PropagationRelation
    labels: Dict[ObjectId, str] = field(default_factory=dict)
    key_renames: List[Tuple[ObjectId, str, str]] = field(
        default_factory=list
    )
    label_renames: Dict[str, str] = field(default_factory=dict)


def _property_values(
        given: Any,
        literal: bool,
        mode: ValueMode
) -> FrozenSet[Value]:
    if not literal and isinstance(given, str) and given in DATA_TYPES:
        if mode is ValueMode.SYMBOLIC:
            return frozenset([type_token(given)])
        return frozenset()
    if not isinstance(given, (list, tuple, set, frozenset)):
        given = [given]
    try:
        return as_values([
            Value.from_json(v) if isinstance(v, Mapping) else v for v in given
        ])
    except PgseError as e:
        raise InvalidPayloadError(f'Bad property value {given!r}') from e


def _property_specs(
        specs: Mapping[str, Any],
        literal: bool,
        mode: ValueMode
) -> PropertyDictionary:
    if not isinstance(specs, Mapping):
        raise InvalidPayloadError(f'Expected key map, got {specs!r}')
    return {
        str(k): _property_values(v, literal, mode)
        for k, v in specs.items()
    }


def _node_pattern(
        g: PropertyGraph,
        x: ObjectId,
        keys: Iterable[str]
) -> Tuple[PropertyDictionary, FrozenSet[str]]:
    """Extracts the listed keys of ``x`` with their values and marks."""
    keys = [k for k in keys if g.has_key(x, k)]
    return (
        {k: g.values(x, k) for k in keys},
        frozenset(k for k in keys if g.is_mandatory(x, k))
    )


class _Compiler:
    """Compiles one operation against one graph."""

    def __init__(
            self,
            smo: SchemaManipulation,
            graph: PropertyGraph,
            index: Optional[TypeIndex],
            mode: ValueMode
    ):
        """Initialize."""
        self.smo = smo
        self.graph = graph
        self.index = index
        self.mode = mode
        self.schema_side = smo.direction is Direction.SCHEMA_TO_DATA
        self.payload = smo.payload

    def node(self, target: str) -> ObjectId:
        if self.schema_side:
            try:
                return (self.index or TypeIndex()).resolve(
                    target, self.graph
                )
            except UnknownLabelError as e:
                raise UnknownTargetError(str(e)) from e
        if not self.graph.has_node(target):
            raise UnknownTargetError(f'Unknown node {target!r}')
        return target

    def edge(self, label: str) -> Tuple[ObjectId, ObjectId, ObjectId]:
        try:
            a = self.node(self.payload['from'])
            b = self.node(self.payload['to'])
        except KeyError as e:
            raise InvalidPayloadError(f'Missing edge endpoint {e}') from e
        e = self.graph.edge_between(a, b)
        if e is None or (
                self.schema_side and self.index is not None
                and self.index.label(e) != label
        ):
            raise UnknownTargetError(
                f'No {label} edge from {self.payload["from"]} to '
                f'{self.payload["to"]}'
            )
        return a, b, e

    def props(self, key: str) -> PropertyDictionary:
        return _property_specs(
            self.payload.get(key, {}), not self.schema_side, self.mode
        )

    def compile(self) -> CompiledSmo:
        handler = getattr(self, f'compile_{self.smo.kind.value}')
        res = handler()
        res.relation = self.smo.relation
        return res

    def compile_create(self) -> CompiledSmo:
        label = self.smo.targets()[0]
        props = self.props('properties')
        mandatory = list(self.payload.get('mandatory', []))
        if not set(mandatory) <= set(props):
            raise InvalidPayloadError('Mandatory keys need properties')
        p = PropertyGraph(simple=self.graph.simple)
        if 'from' in self.payload:
            try:
                a = self.node(self.payload['from'])
                b = self.node(self.payload['to'])
            except KeyError as e:
                raise InvalidPayloadError(f'Missing endpoint {e}') from e
            if self.graph.simple and self.graph.edge_between(a, b):
                raise InvalidPayloadError(
                    f'An edge from {a} to {b} already exists'
                )
            for n in sorted({a, b}):
                p.add_node(n)
            r = p.copy()
            eid = f'{a}-{label}->{b}' if self.schema_side else label
            r.add_edge(a, b, eid, props, mandatory)
            rule = Rule.expansive(p, r, {n: n for n in p.nodes()},
                                  f'create {label}')
            return CompiledSmo(rule, {n: n for n in p.nodes()},
                               self.smo.relation, {eid: label})

        r = PropertyGraph(simple=self.graph.simple)
        nid = label
        if self.graph.has_element(nid):
            if not self.schema_side:
                raise InvalidPayloadError(f'Id {nid!r} is already used')
            nid = self.graph.fresh_id(f'{label}_', start=1)
        extra_edges = []
        for extra in self.payload.get('edges', []):
            ends = []
            for end in (extra.get('from'), extra.get('to')):
                if end == label:
                    ends.append(nid)
                    continue
                ends.append(self.node(str(end)))
                if not p.has_node(ends[-1]):
                    p.add_node(ends[-1])
            extra_edges.append((ends, extra))
        for n in p.nodes():
            r.add_node(n)
        r.add_node(nid, props, mandatory)
        for (a, b), extra in extra_edges:
            r.add_edge(a, b, extra.get('id'), _property_specs(
                extra.get('properties', {}), not self.schema_side, self.mode
            ))
        rule = Rule.expansive(p, r, {n: n for n in p.nodes()},
                              f'create {label}')
        return CompiledSmo(rule, {n: n for n in p.nodes()},
                           self.smo.relation, {nid: label})

    def compile_drop(self) -> CompiledSmo:
        label = self.smo.targets()[0]
        lhs = PropertyGraph(simple=self.graph.simple)
        p = PropertyGraph(simple=self.graph.simple)
        if 'from' in self.payload:
            a, b, e = self.edge(label)
            for n in sorted({a, b}):
                lhs.add_node(n)
                p.add_node(n)
            lhs.add_edge(a, b, e)
        elif not self.schema_side and self.graph.has_edge(label):
            a, b = self.graph.endpoints(label)
            for n in sorted({a, b}):
                lhs.add_node(n)
                p.add_node(n)
            lhs.add_edge(a, b, label)
        else:
            lhs.add_node(self.node(label))
        rule = Rule.restrictive(lhs, p, {n: n for n in p.nodes()},
                                f'drop {label}')
        return CompiledSmo(rule, {n: n for n in lhs.nodes()},
                           self.smo.relation)

    def compile_rename(self) -> CompiledSmo:
        label = self.smo.targets()[0]
        if 'to' not in self.payload:
            raise InvalidPayloadError('Rename needs "to"')
        new = str(self.payload['to'])
        if 'key' not in self.payload:
            if not self.schema_side:
                raise InvalidPayloadError('Labels live in the schema only')
            index = self.index or TypeIndex()
            if label not in index.nodes.values() \
                    and label not in index.edges.values():
                raise UnknownTargetError(f'Unknown label {label!r}')
            return CompiledSmo(None, {}, self.smo.relation,
                               label_renames={label: new})
        key = str(self.payload['key'])
        if self.schema_side:
            index = self.index or TypeIndex()
            elements = [
                x for x in self.graph.elements()
                if index.label(x) == label
            ]
        else:
            elements = [x for x in self.smo.targets()
                        if self.graph.has_element(x)]
        elements = [x for x in elements if self.graph.has_key(x, key)]
        if not elements:
            raise UnknownTargetError(f'No {label} element has key {key!r}')
        return CompiledSmo(
            None, {}, self.smo.relation,
            key_renames=[(x, key, new) for x in elements]
        )

    def compile_change(self) -> CompiledSmo:
        add = self.props('add')
        retype = self.props('retype')
        remove = [str(k) for k in self.payload.get('remove', [])]
        mandatory = set(self.payload.get('mandatory', []))
        if not add and not retype and not remove:
            raise InvalidPayloadError('Change needs add, remove or retype')
        if not mandatory <= set(add):
            raise InvalidPayloadError('Mandatory keys need an addition')
        lhs = PropertyGraph(simple=self.graph.simple)
        p = PropertyGraph(simple=self.graph.simple)
        r = PropertyGraph(simple=self.graph.simple)
        gone = list(remove) + list(retype)
        for target in self.smo.targets():
            x = self.node(target)
            missing = [k for k in gone if not self.graph.has_key(x, k)]
            if missing:
                raise UnknownTargetError(
                    f'{target} has no key {missing[0]!r}'
                )
            props, marks = _node_pattern(self.graph, x, gone)
            lhs.add_node(x, props, marks)
            p.add_node(x)
            new = dict(add)
            new.update(retype)
            r.add_node(x, new, (mandatory | (marks & set(retype))))
        if not gone:
            lhs = p
        if not add and not retype:
            r = p
        ids = {n: n for n in p.nodes()}
        rule = Rule.build(lhs, p, r, ids, ids, f'change {self.smo.target}')
        return CompiledSmo(rule, {n: n for n in lhs.nodes()},
                           self.smo.relation)

    def compile_split(self) -> CompiledSmo:
        label = self.smo.targets()[0]
        into = [str(lb) for lb in self.payload.get('into', [])]
        if len(into) < 2 or len(set(into)) != len(into):
            raise InvalidPayloadError('Split needs two or more new labels')
        x = self.node(label)
        select = self.payload.get('select', {})
        drop = self.payload.get('drop', {})
        partition = self.payload.get('partition')
        if partition is not None:
            if set(partition) != set(into):
                raise InvalidPayloadError('Partition must cover every part')
            keys = sorted({k for ks in partition.values() for k in ks})
            drop = {
                lb: [k for k in keys if k not in partition[lb]]
                for lb in into
            }
            select = {}
        unknown = (set(select) | set(drop)) - set(into)
        if unknown:
            raise InvalidPayloadError(f'Unknown parts {sorted(unknown)}')
        keys = sorted(
            {k for ks in select.values() for k in ks}
            | {k for ks in drop.values() for k in ks}
        )
        missing = [k for k in keys if not self.graph.has_key(x, k)]
        if missing:
            raise UnknownTargetError(f'{label} has no key {missing[0]!r}')
        props, marks = _node_pattern(self.graph, x, keys)

        lhs = PropertyGraph(simple=self.graph.simple)
        lhs.add_node(x, props, marks)
        p = PropertyGraph(simple=self.graph.simple)
        for lb in into:
            d = dict(props)
            for k, vs in _property_specs(
                    select.get(lb, {}), True, self.mode).items():
                if not vs <= d[k]:
                    raise InvalidPayloadError(
                        f'Selected values of {k!r} for {lb} are not '
                        f'values of {label}'
                    )
                d[k] = vs
            for k in drop.get(lb, []):
                d.pop(k, None)
            p.add_node(lb, d, [k for k in marks if k in d])
        loop = self.graph.edge_between(x, x)
        if loop is not None:
            lhs.add_edge(x, x, loop)
            pairs = self.payload.get('loops')
            if pairs is None:
                pairs = [(a, b) for a in into for b in into]
            for a, b in pairs:
                if a not in into or b not in into:
                    raise InvalidPayloadError(f'Bad loop pair {a}->{b}')
                p.add_edge(a, b, f'{loop}:{a}->{b}')
        rule = Rule.restrictive(lhs, p, {lb: x for lb in into},
                                f'split {label}')
        return CompiledSmo(rule, {x: x}, self.smo.relation,
                           {lb: lb for lb in into})

    def compile_union(self) -> CompiledSmo:
        targets = self.smo.targets()
        if len(targets) < 2:
            raise InvalidPayloadError('Union needs two or more targets')
        into = str(self.payload.get('into', '_'.join(targets)))
        nodes = sorted({self.node(t) for t in targets})
        if len(nodes) < 2:
            raise InvalidPayloadError('Union targets resolve to one node')
        p = PropertyGraph(simple=self.graph.simple)
        for n in nodes:
            p.add_node(n)
        r = PropertyGraph(simple=self.graph.simple)
        r.add_node(into)
        rule = Rule.expansive(p, r, {n: into for n in nodes},
                              f'union {into}')
        labels = {into: into} if self.schema_side else {}
        return CompiledSmo(rule, {n: n for n in nodes}, self.smo.relation,
                           labels)


def compile_smo(
        smo: SchemaManipulation,
        graph: PropertyGraph,
        type_index: Optional[TypeIndex] = None,
        mode: ValueMode = ValueMode.SYMBOLIC
) -> CompiledSmo:
    """Compiles an operation into a rule and a matching.

    Args:
        smo: Operation.
        graph: Graph the rule applies to: the schema for schema-to-data
            operations, the instance otherwise.
        type_index: Labels of the schema.
        mode: Value mode used for data type names in property specs.

    Raises:
        UnknownTargetError: A target does not resolve.
        InvalidPayloadError: The payload does not fit the kind.
    """
    return _Compiler(smo, graph, type_index, mode).compile()


def rename_key(g: PropertyGraph, x: ObjectId, old: str, new: str) -> None:
    """Renames a property key of one element, keeping its mandatory mark.

    Raises:
        InvalidPayloadError: The new key is already used.
    """
    if g.has_key(x, new):
        raise InvalidPayloadError(f'{x} already has key {new!r}')
    values = g.values(x, old)
    mandatory = g.is_mandatory(x, old)
    g.unset_property(x, old)
    g.set_property(x, new, values)
    if mandatory:
        g.mark_mandatory(x, new)


def update_index(
        index: TypeIndex,
        old: PropertyGraph,
        result: RewriteResult,
        labels: Optional[Mapping[ObjectId, str]] = None
) -> TypeIndex:
    """Carries schema labels across a rewrite.

    Nodes keep the label of their origin (the smallest one after a
    merge); edges keep their own label or that of the edge joining the
    origins of their endpoints.

    Args:
        index: Labels before the rewrite.
        old: Schema before the rewrite.
        result: Rewrite of ``old``.
        labels: Optional; Labels keyed by ``R`` element id that override
            the inherited ones.
    """
    g = result.graph
    back = result.back_map.node_map
    origins = invert_map(result.fwd_map.node_map)
    res = TypeIndex()

    def node_origins(y):
        return [back[x] for x in origins.get(y, [])]

    for y in g.nodes():
        pre = node_origins(y)
        res.nodes[y] = index.label(pre[0]) if pre else y
    for e in g.edges():
        if e in index.edges and old.has_edge(e):
            res.edges[e] = index.edges[e]
            continue
        a, b = g.endpoints(e)
        found = None
        for oa in node_origins(a):
            for ob in node_origins(b):
                oe = old.edge_between(oa, ob)
                if oe is not None and found is None:
                    found = oe
        res.edges[e] = index.label(found) if found is not None else e
    for x, lb in (labels or {}).items():
        y = result.matching(x) if result.matching.source.has_element(x) \
            else None
        if y is None:
            continue
        if g.has_node(y):
            res.nodes[y] = lb
        else:
            res.edges[y] = lb
    return res


@dataclass
class TrailEntry:
    """One recorded schema rewrite.

    Attributes:
        rule: Rule applied to the schema, or None for pure renames.
        matching: Node map from the rule's left-hand side into the
            schema the entry applies to.
        labels: Labels of new elements, keyed by ``R`` element id.
        relaxed: Schema keys unmarked mandatory after the rewrite.
    """
    rule: Optional[Rule]
    matching: Dict[ObjectId, ObjectId] = field(default_factory=dict)
    direction: Direction = Direction.SCHEMA_TO_DATA
    relation: PropagationRelation = field(
        default_factory=PropagationRelation
    )
    labels: Dict[ObjectId, str] = field(default_factory=dict)
    relaxed: List[Tuple[ObjectId, str]] = field(default_factory=list)
    key_renames: List[Tuple[ObjectId, str, str]] = field(
        default_factory=list
    )
    label_renames: Dict[str, str] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form."""
        return {
            'rule': self.rule.to_json() if self.rule is not None else None,
            'matching': dict(sorted(self.matching.items())),
            'direction': self.direction.value,
            'relation': self.relation.to_json(),
            'labels': dict(sorted(self.labels.items())),
            'relaxed': [list(p) for p in self.relaxed],
            'key_renames': [list(t) for t in self.key_renames],
            'label_renames': dict(sorted(self.label_renames.items())),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> 'TrailEntry':
        """Parses the interchange form.

        Raises:
            InvalidPayloadError: The document is malformed.
        """
        try:
            rule = obj.get('rule')
            return cls(
                Rule.from_json(rule) if rule is not None else None,
                dict(obj.get('matching', {})),
                Direction(obj.get('direction', 'schema-to-data')),
                PropagationRelation.from_json(obj.get('relation')),
                dict(obj.get('labels', {})),
                [tuple(p) for p in obj.get('relaxed', [])],
                [tuple(t) for t in obj.get('key_renames', [])],
                dict(obj.get('label_renames', {})),
            )
        except (KeyError, TypeError, AttributeError, ValueError) as e:
            raise InvalidPayloadError(f'Malformed trail entry: {e}') from e


class StepResult(NamedTuple):
    """Schema and labels after one trail entry."""
    graph: PropertyGraph
    index: TypeIndex
    rewrite: Optional[RewriteResult]


def apply_entry(
        graph: PropertyGraph,
        index: TypeIndex,
        entry: TrailEntry
) -> StepResult:
    """Applies one trail entry to a schema.

    Raises:
        ReplayMismatchError: The entry's matching is not valid on
            ``graph``.
    """
    rewrite = None
    if entry.rule is not None:
        m = Homomorphism(entry.rule.lhs, graph, dict(entry.matching))
        try:
            violations = matching_violations(m)
        except PgseError as e:
            raise ReplayMismatchError(f'Entry does not apply: {e}') from e
        if violations:
            v = violations[0]
            raise ReplayMismatchError(
                f'Entry {entry.rule.name!r} does not match: '
                f'{v.condition} at {v.element!r}'
            )
        rewrite = apply_rule(graph, entry.rule, m)
        new_graph = rewrite.graph
        new_index = update_index(index, graph, rewrite, entry.labels)
    else:
        new_graph = graph.copy()
        new_index = index.copy()
        for x, lb in entry.labels.items():
            if new_graph.has_node(x):
                new_index.nodes[x] = lb
            elif new_graph.has_edge(x):
                new_index.edges[x] = lb
    for x, old, new in entry.key_renames:
        if not new_graph.has_element(x):
            raise ReplayMismatchError(f'Rename target {x!r} is gone')
        rename_key(new_graph, x, old, new)
    for old, new in entry.label_renames.items():
        for d in (new_index.nodes, new_index.edges):
            for x, lb in d.items():
                if lb == old:
                    d[x] = new
    for x, k in entry.relaxed:
        if new_graph.has_element(x):
            new_graph.unmark_mandatory(x, k)
    return StepResult(new_graph, new_index, rewrite)


@dataclass
class CloneEvent:
    """A schema node cloned along the trail.

    Attributes:
        position: Index of the trail entry.
        label: Label of the node when it was cloned.
        original: Id of the node when it was cloned.
        results: Ids of the clones in the trail head.
        before: Dictionary of the node just before cloning.
        props: Keys common to all clones, with their united values.
        mandatory: Keys mandatory on all clones.
    """
    position: int
    label: str
    original: ObjectId
    results: List[ObjectId]
    before: PropertyDictionary
    props: PropertyDictionary
    mandatory: FrozenSet[str]


class AuditTrail:
    """Append-only record of the rewrites of a schema since its origin.

    Args:
        origin: Schema the trail starts from.
        origin_index: Labels of the origin schema.
        origin_type: Optional; Graph type the origin was built from.
        name: Name used when reading the head back as a graph type.
        logger: Logger object.
    """

    def __init__(
            self,
            origin: PropertyGraph,
            origin_index: Optional[TypeIndex] = None,
            origin_type: Optional[GraphType] = None,
            name: Optional[str] = None,
            logger=None
    ):
        """Initialize."""
        self.origin = origin.copy()
        self.origin_index = (origin_index or TypeIndex()).copy()
        self.origin_type = origin_type
        self.name = name or (origin_type.name if origin_type else 'schema')
        self.entries: List[TrailEntry] = []
        self.head = self.origin.copy()
        self.head_index = self.origin_index.copy()
        if logger is None:
            logger = module_logger
        self.logger = logger.getChild(__class__.__name__)

    def __len__(self):
        """Returns the number of entries."""
        return len(self.entries)

    def record(self, entry: TrailEntry) -> StepResult:
        """Applies an entry to the head and appends it.

        Raises:
            ReplayMismatchError: The entry does not apply to the head.
        """
        step = apply_entry(self.head, self.head_index, entry)
        self.entries.append(entry)
        self.head, self.head_index = step.graph, step.index
        name = entry.rule.name if entry.rule is not None else 'rename'
        self.logger.info(f'Recorded entry {len(self.entries)}: {name}')
        return step

    def replay(
            self,
            upto: Optional[int] = None
    ) -> Tuple[PropertyGraph, TypeIndex]:
        """Rebuilds the schema after the first ``upto`` entries."""
        graph, index = self.origin.copy(), self.origin_index.copy()
        for entry in self.entries[:upto]:
            graph, index, _ = apply_entry(graph, index, entry)
        return graph, index

    def with_entries(self, entries: List[TrailEntry]) -> 'AuditTrail':
        """Returns a new trail from the same origin with other entries.

        Raises:
            ReplayMismatchError: The entries do not replay.
        """
        res = AuditTrail(self.origin, self.origin_index, self.origin_type,
                         self.name, self.logger.parent)
        for entry in entries:
            res.record(entry)
        return res

    def clone_events(self) -> List[CloneEvent]:
        """Lists every node cloning along the trail, in order."""
        events = []
        graph, index = self.origin.copy(), self.origin_index.copy()
        for i, entry in enumerate(self.entries):
            step = apply_entry(graph, index, entry)
            if step.rewrite is not None:
                rule = entry.rule
                for x, _ in derive_actions(rule).clones:
                    original = entry.matching[x]
                    pre = rule.l_map.preimages(x)
                    images = step.rewrite.restrictive.matching.node_map
                    fwd = step.rewrite.fwd_map.node_map
                    results = [fwd[images[q]] for q in pre]
                    common = set.intersection(
                        *(set(step.graph.keys(r)) for r in results)
                    )
                    props = {
                        k: frozenset().union(
                            *(step.graph.values(r, k) for r in results)
                        )
                        for k in sorted(common)
                    }
                    mandatory = frozenset(
                        k for k in common
                        if all(step.graph.is_mandatory(r, k)
                               for r in results)
                    )
                    events.append(CloneEvent(
                        i, index.label(original), original, results,
                        graph.props(original), props, mandatory
                    ))
            graph, index = step.graph, step.index
        for event in events:
            event.results = [r for r in event.results if graph.has_node(r)]
        return events

    def restricted_class_violations(self) -> List[str]:
        """Lists entries outside clone-only and add-only rewriting."""
        res = []
        for i, entry in enumerate(self.entries):
            if entry.key_renames:
                res.append(f'entry {i} renames keys')
            if entry.rule is None:
                continue
            plan = derive_actions(entry.rule)
            if plan.node_deletes or plan.edge_deletes or plan.prop_deletes:
                res.append(f'entry {i} deletes')
            if plan.merges:
                res.append(f'entry {i} merges')
        return res

    def check_restricted(self) -> None:
        """Raises if the trail cannot be read back as inheritance.

        Raises:
            UnsupportedHistoryError: Some entry deletes, merges or renames
                keys.
        """
        violations = self.restricted_class_violations()
        if violations:
            raise UnsupportedHistoryError(
                'Trail is not clone-only and add-only: '
                + '; '.join(violations)
            )

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form."""
        return {
            'name': self.name,
            'origin': graph_to_json(self.origin),
            'origin_index': self.origin_index.to_json(),
            'entries': [entry.to_json() for entry in self.entries],
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], logger=None) -> 'AuditTrail':
        """Parses and replays the interchange form.

        Raises:
            InvalidPayloadError: The document is malformed.
            ReplayMismatchError: The entries do not replay.
        """
        try:
            origin = graph_from_json(obj['origin'])
            index = TypeIndex.from_json(obj.get('origin_index'))
            name = obj.get('name')
            entries = [TrailEntry.from_json(e) for e in obj.get('entries', [])]
        except (KeyError, TypeError, AttributeError, ValueError) as e:
            raise InvalidPayloadError(f'Malformed trail document: {e}') from e
        res = cls(origin, index, name=name, logger=logger)
        for entry in entries:
            res.record(entry)
        return res


def record(trail: AuditTrail, entry: TrailEntry) -> AuditTrail:
    """Appends an entry that applies to the trail head."""
    trail.record(entry)
    return trail


def property_addition(
        node: ObjectId,
        props: Mapping[str, Iterable[Value]],
        mandatory: Iterable[str] = ()
) -> TrailEntry:
    """Makes an entry adding keys and values to one schema node."""
    p = PropertyGraph()
    p.add_node(node)
    r = PropertyGraph()
    r.add_node(node, props, mandatory)
    rule = Rule.expansive(p, r, {node: node}, f'add to {node}')
    return TrailEntry(rule, {node: node})


def property_deletion(node: ObjectId, key: str) -> TrailEntry:
    """Makes an entry deleting a key from one schema node."""
    lhs = PropertyGraph()
    lhs.add_node(node, {key: frozenset()})
    p = PropertyGraph()
    p.add_node(node)
    rule = Rule.restrictive(lhs, p, {node: node}, f'delete {key} of {node}')
    return TrailEntry(rule, {node: node})


def _target_node(entry: TrailEntry) -> ObjectId:
    if entry.rule is None or len(entry.matching) != 1:
        raise InvalidPayloadError('Entry must rewrite a single node')
    return next(iter(entry.matching.values()))


def push_through_addition(
        trail: AuditTrail,
        entry: TrailEntry
) -> AuditTrail:
    """Records a property addition so every later clone inherits it.

    The addition is inserted just before the first clone of its target
    node, so replay hands the new property to all clones; if the node
    was never cloned the entry is appended.

    Returns:
        A new trail.

    Raises:
        ReplayMismatchError: The addition does not apply where it lands.
    """
    if entry.rule is None or not entry.rule.is_expansive:
        raise InvalidPayloadError('Entry is not an addition')
    node = _target_node(entry)
    position = len(trail.entries)
    for event in trail.clone_events():
        if event.original == node:
            position = event.position
            break
    trail.logger.info(f'Addition to {node} lands at entry {position}')
    entries = list(trail.entries)
    entries.insert(position, entry)
    return trail.with_entries(entries)


def push_back_deletion(
        trail: AuditTrail,
        entry: TrailEntry
) -> AuditTrail:
    """Records a property deletion at the origin of the property.

    A key a clone inherited is deleted before the earliest clone it was
    inherited through, so no clone keeps it. A key added to the clone
    itself is deleted locally, at the end of the trail.

    Returns:
        A new trail.

    Raises:
        AmbiguousOriginError: The key was added separately to the clone
            and to one of its siblings.
    """
    if entry.rule is None or not entry.rule.is_restrictive:
        raise InvalidPayloadError('Entry is not a deletion')
    node = _target_node(entry)
    keys = {
        k for n in entry.rule.lhs.nodes() for k in entry.rule.lhs.keys(n)
    }
    events = [e for e in trail.clone_events() if node in e.results]
    position = len(trail.entries)
    target = node
    inherited = [e for e in events if keys <= set(e.before)]
    if inherited:
        first = min(inherited, key=lambda e: e.position)
        position, target = first.position, first.original
    elif events:
        siblings = [r for e in events for r in e.results if r != node]
        if any(keys <= set(trail.head.keys(s)) for s in siblings):
            raise AmbiguousOriginError(
                f'Keys {sorted(keys)} were added to {node} and to a '
                f'sibling clone separately'
            )
    trail.logger.info(f'Deletion on {node} lands at entry {position}')
    moved = TrailEntry(
        entry.rule, {x: target for x in entry.matching},
        entry.direction, entry.relation
    )
    entries = list(trail.entries)
    entries.insert(position, moved)
    return trail.with_entries(entries)


@dataclass
class SchemaState:
    """Schema, instance and typing kept consistent together."""
    schema: PropertyGraph
    index: TypeIndex
    instance: PropertyGraph
    hom: Homomorphism
    trail: Optional[AuditTrail] = None
    mode: ValueMode = ValueMode.SYMBOLIC

    @classmethod
    def from_graph_type(
            cls,
            gt: Union[GraphType, str],
            instance: Optional[PropertyGraph] = None,
            node_map: Optional[Mapping[ObjectId, ObjectId]] = None,
            mode: ValueMode = ValueMode.SYMBOLIC,
            force: bool = False,
            id_seed: int = 0
    ) -> 'SchemaState':
        """Starts a tracked state from a graph type or DDL text.

        ``id_seed`` starts the counter of ids generated in the schema.
        """
        if isinstance(gt, str):
            gt = parse_ddl(gt)
        schema, index = graph_type_to_schema(gt, mode, force, id_seed)
        instance = instance if instance is not None else PropertyGraph()
        return cls(
            schema, index, instance,
            Homomorphism(instance, schema, dict(node_map or {})),
            AuditTrail(schema, index, gt), mode
        )

    def violations(self):
        """Validates the instance against the schema."""
        return check_homomorphism(self.hom, self.mode)

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form."""
        res = {
            'mode': self.mode.value,
            'schema': graph_to_json(self.schema),
            'index': self.index.to_json(),
            'instance': graph_to_json(self.instance),
            'hom': self.hom.to_json(),
        }
        if self.trail is not None:
            res['trail'] = self.trail.to_json()
        return res

    @classmethod
    def from_json(
            cls,
            obj: Mapping[str, Any],
            id_seed: int = 0
    ) -> 'SchemaState':
        """Parses the interchange form, replaying the trail if present.

        Raises:
            InvalidPayloadError: The document is malformed.
        """
        try:
            schema = graph_from_json(obj['schema'], id_seed)
            instance = graph_from_json(obj.get('instance', {}), id_seed)
            hom = Homomorphism.from_json(
                obj.get('hom', {'node_map': {}}), instance, schema
            )
            mode = ValueMode(obj.get('mode', ValueMode.SYMBOLIC.value))
        except (KeyError, TypeError, AttributeError, ValueError) as e:
            raise InvalidPayloadError(f'Malformed state document: {e}') from e
        trail = None
        if obj.get('trail') is not None:
            trail = AuditTrail.from_json(obj['trail'])
        return cls(schema, TypeIndex.from_json(obj.get('index')), instance,
                   hom, trail, mode)


def _schema_to_data(
        state: SchemaState,
        compiled: CompiledSmo,
        smo: SchemaManipulation
) -> SchemaState:
    entry = TrailEntry(
        compiled.rule, compiled.matching, smo.direction, compiled.relation,
        compiled.labels, [], compiled.key_renames, compiled.label_renames
    )
    step = apply_entry(state.schema, state.index, entry)
    schema, index, rw = step
    instance, hom = state.instance, state.hom
    if rw is None:
        instance = instance.copy()
        renamed = {x: (old, new) for x, old, new in compiled.key_renames}
        for x in instance.elements():
            y = hom(x)
            if y in renamed and instance.has_key(x, renamed[y][0]):
                rename_key(instance, x, *renamed[y])
        hom = Homomorphism(instance, schema, dict(hom.node_map))
    else:
        s_minus = rw.restrictive.graph
        if not entry.rule.is_expansive:
            relation = compiled.relation.resolve(
                lambda t: index.resolve(t, schema)
            )
            propagated = propagate_to_instance(
                instance, hom, rw.back_map, state.mode, relation
            )
            instance, h_minus = propagated.graph, propagated.hom
        else:
            h_minus = Homomorphism(instance, s_minus, dict(hom.node_map))
        hom = compose(h_minus, rw.fwd_map)
        entry.relaxed = relax_mandatory(hom)
    trail = state.trail
    if trail is not None:
        trail.record(entry)
        schema, index = trail.head, trail.head_index
        hom = Homomorphism(hom.source, schema, dict(hom.node_map))
    return SchemaState(schema, index, instance, hom, trail, state.mode)


def _data_to_schema(
        state: SchemaState,
        compiled: CompiledSmo,
        smo: SchemaManipulation
) -> SchemaState:
    if compiled.rule is None:
        raise InvalidPayloadError('Renames apply to the schema')
    m = Homomorphism(compiled.rule.lhs, state.instance, compiled.matching)
    rw = apply_rule(state.instance, compiled.rule, m)
    h_minus = compose(rw.back_map, state.hom)
    instance = rw.graph
    if compiled.rule.is_restrictive:
        hom = Homomorphism(instance, state.schema, h_minus.node_map)
        return SchemaState(state.schema, state.index, instance, hom,
                           state.trail, state.mode)

    relation = compiled.relation.resolve(
        lambda t: state.index.resolve(t, state.schema)
    )
    propagated = propagate_to_schema(
        state.schema, h_minus, rw.fwd_map, state.mode, relation
    )
    if propagated.graph == state.schema:
        hom = Homomorphism(instance, state.schema, propagated.hom.node_map)
        return SchemaState(state.schema, state.index, instance, hom,
                           state.trail, state.mode)

    rule, matching = induced_schema_rule(
        state.schema, propagated.graph, propagated.schema_map,
        compiled.rule.name
    )
    labels = {}
    label = smo.payload.get('label')
    if label is not None:
        for y in compiled.rule.rhs.nodes():
            labels[propagated.hom.node_map[rw.matching.node_map[y]]] = label
    entry = TrailEntry(
        rule, matching.node_map, smo.direction, compiled.relation, labels,
        propagated.relaxed
    )
    if state.trail is not None:
        state.trail.record(entry)
        schema, index = state.trail.head, state.trail.head_index
    else:
        schema, index, _ = apply_entry(state.schema, state.index, entry)
    hom = Homomorphism(instance, schema, propagated.hom.node_map)
    return SchemaState(schema, index, instance, hom, state.trail, state.mode)


def apply_smo(
        state: SchemaState,
        smo: SchemaManipulation
) -> SchemaState:
    """Runs an operation end to end.

    In the schema-to-data direction the schema is rewritten, the
    restrictive part is propagated to the instance and the expansive part
    is absorbed by composition. In the data-to-schema direction the
    instance is rewritten, its restrictive part is absorbed by
    composition and its expansive part propagated to the schema. Schema
    changes are recorded in the state's trail.

    Returns:
        The new state; the trail object is shared and extended.
    """
    side = (
        state.schema if smo.direction is Direction.SCHEMA_TO_DATA
        else state.instance
    )
    compiled = compile_smo(smo, side, state.index, state.mode)
    module_logger.info(
        f'Applying {smo.kind.value} {smo.target} ({smo.direction.value})'
    )
    if smo.direction is Direction.SCHEMA_TO_DATA:
        return _schema_to_data(state, compiled, smo)
    return _data_to_schema(state, compiled, smo)
