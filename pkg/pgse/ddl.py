# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Graph type definition language and its schema graph interpretation.

The language is the OpenCypher-flavoured ``CREATE GRAPH TYPE`` syntax::

    CREATE GRAPH TYPE snb (
      Message { creationDate : TIMESTAMP, content : STRING? },
      Post <: Message { imageFile : STRING? },
      (Post),
      (Post)-[REPLY_OF]->(Message)
    )

Element types may extend several others (``A <: B & C``; ``::`` is
accepted in place of ``<:``). Edge labels that are not declared as
element types are declared implicitly with no properties.
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import (
    Any, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Set, Tuple
)
import enum
import logging

import lark

from pgse.common import (
    CyclicInheritanceError,
    DdlError,
    DdlSyntaxError,
    DuplicateLabelError,
    DuplicatePropertyKeyError,
    EdgeTypeCollisionError,
    InvalidGraphTypeError,
    UnknownLabelError,
    UnsupportedHistoryError,
)
from pgse.graph import (
    ObjectId,
    PropertyGraph,
    Value,
    ValueMode,
    token_data_type,
    type_token,
)

module_logger = logging.getLogger(__name__)

GRAMMAR = r'''
start: "CREATE" "GRAPH" "TYPE" NAME "(" [items] ")"
items: item ("," item)* ","?
?item: element_type | node_type | edge_type
element_type: NAME [supertypes] "{" [properties] "}"
supertypes: INHERITS NAME ("&" NAME)*
properties: property ("," property)* ","?
property: NAME ":" DATA_TYPE [OPTIONAL]
node_type: "(" NAME ")"
edge_type: "(" NAME ")" "-" "[" NAME "]" "->" [cardinality] "(" NAME ")"
cardinality: "<" INT ">"

INHERITS: "<:" | "::"
OPTIONAL: "?"
DATA_TYPE: "STRING" | "INTEGER" | "TIMESTAMP" | "DATE" | "BOOLEAN"
NAME: /[A-Za-z_][A-Za-z0-9_]*/
COMMENT: /\/\/[^\n]*/

%import common.INT
%import common.WS
%ignore WS
%ignore COMMENT
'''

_parser = None


def _get_parser() -> lark.Lark:
    global _parser
    if _parser is None:
        _parser = lark.Lark(GRAMMAR, parser='lalr', maybe_placeholders=True)
    return _parser


class DataType(enum.Enum):
    """Property data types."""
    STRING = 'STRING'
    INTEGER = 'INTEGER'
    TIMESTAMP = 'TIMESTAMP'
    DATE = 'DATE'
    BOOLEAN = 'BOOLEAN'


@dataclass(frozen=True)
class PropertyType:
    """Typed property key; optional means not mandatory."""
    key: str
    data_type: DataType
    optional: bool = False

    def __str__(self):
        """Makes the DDL representation."""
        opt = '?' if self.optional else ''
        return f'{self.key} : {self.data_type.value}{opt}'


@dataclass(frozen=True)
class ElementType:
    """Labelled set of property types, possibly extending other types."""
    label: str
    own_properties: FrozenSet[PropertyType] = frozenset()
    extends: FrozenSet[str] = frozenset()


@dataclass(frozen=True)
class NodeType:
    """Node type backed by an element type."""
    element: str


@dataclass(frozen=True)
class EdgeType:
    """Edge type ``(source)-[element]->(target)``.

    The cardinality annotation is kept as metadata only.
    """
    source: str
    element: str
    target: str
    cardinality: Optional[int] = None


@dataclass(frozen=True, eq=False)
class GraphType:
    """Property graph type.

    Collections keep document order; equality ignores it.
    """
    name: str
    element_types: Tuple[ElementType, ...] = ()
    node_types: Tuple[NodeType, ...] = ()
    edge_types: Tuple[EdgeType, ...] = ()

    def _key(self):
        return (
            self.name,
            frozenset(self.element_types),
            frozenset(self.node_types),
            frozenset(self.edge_types),
        )

    def __eq__(self, other):
        """Order-insensitive structural equality."""
        if not isinstance(other, GraphType):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        """Hash consistent with equality."""
        return hash(self._key())

    def element(self, label: str) -> ElementType:
        """Returns the element type with a label.

        Raises:
            UnknownLabelError: No such element type.
        """
        for b in self.element_types:
            if b.label == label:
                return b
        raise UnknownLabelError(f'Unknown element type {label!r}')

    def labels(self) -> List[str]:
        """Returns the sorted element type labels."""
        return sorted({b.label for b in self.element_types})


@dataclass(frozen=True)
class Diagnostic:
    """Broken graph type rule."""
    rule: str
    label: str
    key: Optional[str] = None
    message: str = ''

    def to_json(self) -> Dict[str, Any]:
        """Makes a report entry."""
        return {
            'rule': self.rule,
            'label': self.label,
            'key': self.key,
            'message': self.message,
        }


_RULE_ERRORS = {
    DuplicateLabelError.code: DuplicateLabelError,
    UnknownLabelError.code: UnknownLabelError,
    CyclicInheritanceError.code: CyclicInheritanceError,
    DuplicatePropertyKeyError.code: DuplicatePropertyKeyError,
}


class _Builder(lark.Transformer):
    """Turns the parse tree into tagged tuples, keeping name tokens."""

    def start(self, children):
        name, items = children
        return name, items or []

    def items(self, children):
        return list(children)

    def element_type(self, children):
        name, supertypes, properties = children
        return ('element', name, supertypes or [], properties or [])

    def supertypes(self, children):
        return [str(c) for c in children[1:]]

    def properties(self, children):
        return list(children)

    def property(self, children):
        name, data_type, optional = children
        return PropertyType(
            str(name), DataType(str(data_type)), optional is not None
        )

    def node_type(self, children):
        return ('node', children[0])

    def edge_type(self, children):
        source, label, cardinality, target = children
        return ('edge', source, label, cardinality, target)

    def cardinality(self, children):
        return int(children[0])


def parse_ddl(text: str) -> GraphType:
    """Parses a ``CREATE GRAPH TYPE`` statement.

    Raises:
        DdlSyntaxError: The text does not follow the grammar.
        DuplicateLabelError: Two element types share a label.
        UnknownLabelError: A reference to an undeclared element type.
        CyclicInheritanceError: An element type extends itself.
        DuplicatePropertyKeyError: Exposed properties share a key.
    """
    try:
        tree = _get_parser().parse(text)
    except lark.exceptions.UnexpectedInput as e:
        line = getattr(e, 'line', None)
        column = getattr(e, 'column', None)
        if line is not None and line < 0:
            line = column = None
        expected = getattr(e, 'expected', None) or getattr(e, 'allowed', None)
        raise DdlSyntaxError(
            f'Syntax error at line {line}, column {column}',
            line, column, expected or ()
        ) from e
    name, items = _Builder().transform(tree)

    element_types = []
    seen = {}
    node_types = []
    edge_types = []
    for item in items:
        kind = item[0]
        if kind == 'element':
            _, label, extends, properties = item
            if str(label) in seen:
                raise DuplicateLabelError(
                    f'Element type {label} at line {label.line} is already '
                    f'declared at line {seen[str(label)]}',
                    [Diagnostic('duplicate-label', str(label))]
                )
            seen[str(label)] = label.line
            keys = Counter(p.key for p in properties)
            dup = sorted(k for k, c in keys.items() if c > 1)
            if dup:
                raise DuplicatePropertyKeyError(
                    f'Element type {label} declares {dup[0]} twice',
                    [Diagnostic('duplicate-property-key', str(label), dup[0])]
                )
            element_types.append(ElementType(
                str(label), frozenset(properties), frozenset(extends)
            ))
        elif kind == 'node':
            node_types.append(NodeType(str(item[1])))
        else:
            _, source, label, cardinality, target = item
            edge_types.append(
                EdgeType(str(source), str(label), str(target), cardinality)
            )
    for et in edge_types:
        if et.element not in seen:
            module_logger.debug(f'Implicit element type {et.element}')
            seen[et.element] = None
            element_types.append(ElementType(et.element))

    gt = GraphType(
        str(name), tuple(element_types), tuple(node_types), tuple(edge_types)
    )
    diagnostics = check_graph_type(gt)
    if diagnostics:
        first = diagnostics[0]
        raise _RULE_ERRORS.get(first.rule, InvalidGraphTypeError)(
            first.message, diagnostics
        )
    return gt


def print_ddl(gt: GraphType) -> str:
    """Prints a graph type canonically.

    Element types come first sorted by label, then node types, then edge
    types.
    """
    items = []
    for b in sorted(set(gt.element_types), key=lambda b: b.label):
        head = b.label
        if b.extends:
            head += ' <: ' + ' & '.join(sorted(b.extends))
        props = ', '.join(
            str(p) for p in sorted(b.own_properties, key=lambda p: p.key)
        )
        items.append(f'{head} {{ {props} }}' if props else f'{head} {{}}')
    for nt in sorted(set(gt.node_types), key=lambda nt: nt.element):
        items.append(f'({nt.element})')
    for et in sorted(
            set(gt.edge_types),
            key=lambda et: (et.source, et.element, et.target)
    ):
        card = '' if et.cardinality is None else f'<{et.cardinality}>'
        items.append(f'({et.source})-[{et.element}]->{card}({et.target})')
    body = ''.join(f'  {item},\n' for item in items)
    if body:
        body = body[:-2] + '\n'
    return f'CREATE GRAPH TYPE {gt.name} (\n{body})'


class ExposedSets(NamedTuple):
    """Properties, mandatory properties and labels of an element type."""
    properties: FrozenSet[PropertyType]
    mandatory: FrozenSet[PropertyType]
    labels: FrozenSet[str]


def exposed_sets(gt: GraphType, label: str) -> ExposedSets:
    """Computes what an element type exposes directly or by inheritance.

    Raises:
        UnknownLabelError: The label or one of its ancestors is unknown.
        CyclicInheritanceError: The type extends itself.
    """
    def visit(lb, stack):
        if lb in stack:
            raise CyclicInheritanceError(
                f'Element type {lb!r} extends itself',
                [Diagnostic('cyclic-inheritance', lb)]
            )
        b = gt.element(lb)
        props = set(b.own_properties)
        labels = {lb}
        for parent in sorted(b.extends):
            p_props, p_labels = visit(parent, stack | {lb})
            props |= p_props
            labels |= p_labels
        return props, labels

    props, labels = visit(label, frozenset())
    return ExposedSets(
        frozenset(props),
        frozenset(p for p in props if not p.optional),
        frozenset(labels)
    )


def _cyclic_labels(gt: GraphType) -> Set[str]:
    parents = {}
    for b in gt.element_types:
        parents.setdefault(b.label, set()).update(b.extends)
    res = set()
    for start in parents:
        stack = list(parents[start])
        visited = set()
        while stack:
            lb = stack.pop()
            if lb == start:
                res.add(start)
                break
            if lb in visited or lb not in parents:
                continue
            visited.add(lb)
            stack.extend(parents[lb])
    return res


def check_graph_type(gt: GraphType) -> List[Diagnostic]:
    """Lists every broken graph type rule.

    Rules: unique labels, resolvable references, acyclic inheritance and
    unique keys in every exposed property set.
    """
    res = []
    counts = Counter(b.label for b in gt.element_types)
    known = set(counts)
    for label in sorted(lb for lb, c in counts.items() if c > 1):
        res.append(Diagnostic(
            'duplicate-label', label,
            message=f'Element type {label!r} is declared {counts[label]} times'
        ))

    def unknown(label, where):
        res.append(Diagnostic(
            'unknown-label-reference', label,
            message=f'{where} refers to unknown element type {label!r}'
        ))

    for b in sorted(gt.element_types, key=lambda b: b.label):
        for parent in sorted(b.extends - known):
            unknown(parent, f'Element type {b.label!r}')
    for nt in sorted(set(gt.node_types), key=lambda nt: nt.element):
        if nt.element not in known:
            unknown(nt.element, 'Node type')
    for et in gt.edge_types:
        for lb in (et.source, et.element, et.target):
            if lb not in known:
                unknown(lb, f'Edge type ({et.source})-[{et.element}]->'
                            f'({et.target})')

    cyclic = _cyclic_labels(gt)
    for label in sorted(cyclic):
        res.append(Diagnostic(
            'cyclic-inheritance', label,
            message=f'Element type {label!r} extends itself'
        ))
    if res:
        return res

    for label in sorted(known):
        props = exposed_sets(gt, label).properties
        keys = Counter(p.key for p in props)
        for key in sorted(k for k, c in keys.items() if c > 1):
            res.append(Diagnostic(
                'duplicate-property-key', label, key,
                f'Element type {label!r} exposes key {key!r} with '
                f'{keys[key]} different types'
            ))
    return res


def graph_type_to_json(gt: GraphType) -> Dict[str, Any]:
    """Mirrors a graph type as JSON for tooling."""
    return {
        'name': gt.name,
        'element_types': [
            {
                'label': b.label,
                'extends': sorted(b.extends),
                'properties': [
                    {
                        'key': p.key,
                        'data_type': p.data_type.value,
                        'optional': p.optional,
                    }
                    for p in sorted(b.own_properties, key=lambda p: p.key)
                ],
            }
            for b in sorted(set(gt.element_types), key=lambda b: b.label)
        ],
        'node_types': sorted({nt.element for nt in gt.node_types}),
        'edge_types': [
            {
                'source': et.source,
                'element': et.element,
                'target': et.target,
                'cardinality': et.cardinality,
            }
            for et in gt.edge_types
        ],
    }


@dataclass
class TypeIndex:
    """Labels of schema nodes and edges, keyed by schema identifier."""
    nodes: Dict[ObjectId, str] = field(default_factory=dict)
    edges: Dict[ObjectId, str] = field(default_factory=dict)

    def label(self, x: ObjectId) -> str:
        """Returns the label of a schema element, defaulting to its id."""
        return self.nodes.get(x, self.edges.get(x, x))

    def node_ids(self, label: str) -> List[ObjectId]:
        """Returns the schema nodes carrying a label."""
        return sorted(n for n, lb in self.nodes.items() if lb == label)

    def resolve(self, target: str, schema: PropertyGraph) -> ObjectId:
        """Resolves a label, or a plain schema node id, to a node id.

        Raises:
            UnknownLabelError: Nothing matches.
        """
        ids = self.node_ids(target)
        if ids:
            return ids[0]
        if schema.has_node(target):
            return target
        raise UnknownLabelError(f'Unknown label {target!r}')

    def copy(self) -> 'TypeIndex':
        """Returns an independent copy."""
        return TypeIndex(dict(self.nodes), dict(self.edges))

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form."""
        return {
            'nodes': dict(sorted(self.nodes.items())),
            'edges': dict(sorted(self.edges.items())),
        }

    @classmethod
    def from_json(cls, obj: Optional[Dict[str, Any]]) -> 'TypeIndex':
        """Parses the interchange form; None gives an empty index."""
        obj = obj or {}
        return cls(dict(obj.get('nodes', {})), dict(obj.get('edges', {})))


class SchemaInterpretation(NamedTuple):
    """Schema graph of a graph type with its labels."""
    schema: PropertyGraph
    type_index: TypeIndex


def _exposed_dictionary(gt, label, mode):
    props = exposed_sets(gt, label).properties
    d = {
        p.key: (
            frozenset([type_token(p.data_type.value)])
            if mode is ValueMode.SYMBOLIC else frozenset()
        )
        for p in props
    }
    return d, [p.key for p in props if not p.optional]


def graph_type_to_schema(
        gt: GraphType,
        mode: ValueMode = ValueMode.SYMBOLIC,
        force: bool = False,
        id_seed: int = 0
) -> SchemaInterpretation:
    """Interprets a graph type as a schema graph.

    Inheritance is expanded out: there is one schema node per node type
    (identified by its label) and one schema edge per pair of node types
    whose exposed labels contain the source and the target of an edge
    type.

    Args:
        gt: Graph type.
        mode: In symbolic mode value sets hold type tokens; in extensional
            mode they start empty.
        force: When two edge types expand to the same pair of schema
            nodes, keep the first in document order instead of failing.
        id_seed: Start of the generated-id counter of the schema graph.
            Schema ids come from labels, so only ids generated by later
            rewrites depend on it.

    Raises:
        InvalidGraphTypeError: The graph type fails its checks.
        EdgeTypeCollisionError: Edge types collide and ``force`` is off.
    """
    diagnostics = check_graph_type(gt)
    if diagnostics:
        raise InvalidGraphTypeError(
            f'Graph type {gt.name!r} is invalid', diagnostics
        )
    schema = PropertyGraph(id_seed=id_seed)
    index = TypeIndex()
    node_labels = sorted({nt.element for nt in gt.node_types})
    exposed = {lb: exposed_sets(gt, lb).labels for lb in node_labels}
    for lb in node_labels:
        props, mandatory = _exposed_dictionary(gt, lb, mode)
        schema.add_node(lb, props, mandatory)
        index.nodes[lb] = lb

    collisions = []
    for et in gt.edge_types:
        props, mandatory = _exposed_dictionary(gt, et.element, mode)
        sources = [lb for lb in node_labels if et.source in exposed[lb]]
        targets = [lb for lb in node_labels if et.target in exposed[lb]]
        for s in sources:
            for t in targets:
                existing = schema.edge_between(s, t)
                if existing is not None:
                    collisions.append(Diagnostic(
                        'edge-type-collision', et.element,
                        message=(
                            f'{et.element} from {s} to {t} collides with '
                            f'{index.edges[existing]}'
                        )
                    ))
                    continue
                e = schema.add_edge(
                    s, t, f'{s}-{et.element}->{t}', props, mandatory
                )
                index.edges[e] = et.element
    if collisions:
        if not force:
            raise EdgeTypeCollisionError(
                f'{len(collisions)} edge type collisions', collisions
            )
        for d in collisions:
            module_logger.warning(d.message)
    module_logger.info(
        f'Schema of {gt.name}: {schema.number_of_nodes()} nodes, '
        f'{schema.number_of_edges()} edges'
    )
    return SchemaInterpretation(schema, index)


def infer_data_type(values: Iterable[Value]) -> DataType:
    """Guesses the data type of a schema value set.

    Type tokens win; otherwise the first literal decides; an empty set
    defaults to STRING.
    """
    values = sorted(values)
    for v in values:
        dt = token_data_type(v)
        if dt is not None:
            return DataType(dt)
    if values:
        return {
            'str': DataType.STRING,
            'int': DataType.INTEGER,
            'bool': DataType.BOOLEAN,
            'date': DataType.DATE,
        }[values[0].tag]
    return DataType.STRING


def _property_types(props, mandatory, keys=None) -> FrozenSet[PropertyType]:
    keys = props.keys() if keys is None else keys
    return frozenset(
        PropertyType(k, infer_data_type(props[k]), k not in mandatory)
        for k in keys
    )


def _edge_element_types(schema, labels) -> List[ElementType]:
    by_label: Dict[str, List[ObjectId]] = {}
    for e in schema.edges():
        by_label.setdefault(labels[e], []).append(e)
    res = []
    for lb, es in sorted(by_label.items()):
        props: Dict[str, Set[Value]] = {}
        for e in es:
            for k, vs in schema.props(e).items():
                props.setdefault(k, set()).update(vs)
        mandatory = set(props)
        for e in es:
            mandatory &= schema.mandatory(e)
        res.append(ElementType(lb, _property_types(props, mandatory)))
    return res


def _node_labels(schema: PropertyGraph, index: TypeIndex) -> Dict[str, str]:
    res = {}
    taken = set()
    for n in schema.nodes():
        lb = index.label(n)
        if lb in taken:
            module_logger.warning(f'Label {lb} is shared; using id {n}')
            lb = n
        taken.add(lb)
        res[n] = lb
    return res


def _generalize(members: Set[str], abstract_order, descendants) -> Set[str]:
    res = set(members)
    for a in abstract_order:
        d = descendants[a]
        if d and d <= res:
            res = (res - d) | {a}
    return res


def schema_to_graph_type(
        schema: PropertyGraph,
        type_index: Optional[TypeIndex] = None,
        trail=None,
        name: Optional[str] = None
) -> GraphType:
    """Reads a schema graph back as a graph type.

    Without a trail the result is flat: one element type and node type
    per schema node, one element type per edge label and one edge type per
    schema edge. With an audit trail, every node cloned along the trail
    becomes an abstract element type that its clones extend, and edge
    types reaching all clones of such a node are written against it.

    Args:
        schema: Schema graph.
        type_index: Labels of schema elements; ids are used if omitted.
        trail: Optional; :class:`pgse.smo.AuditTrail` leading to
            ``schema``.
        name: Optional; Graph type name.

    Raises:
        UnsupportedHistoryError: The trail holds deletions, merges or
            other rewrites that cannot be read back.
    """
    index = type_index or TypeIndex()
    labels = _node_labels(schema, index)
    edge_labels = {e: index.label(e) for e in schema.edges()}
    if name is None:
        name = getattr(trail, 'name', None) or 'schema'

    parent: Dict[ObjectId, Optional[str]] = {}
    abstract: Dict[str, Tuple[dict, FrozenSet[str], Optional[str]]] = {}
    if trail is not None:
        trail.check_restricted()
        for event in trail.clone_events():
            if event.label in abstract:
                raise UnsupportedHistoryError(
                    f'Type {event.label!r} is cloned twice in the trail'
                )
            abstract[event.label] = (
                event.props, event.mandatory, parent.get(event.original)
            )
            for r in event.results:
                parent[r] = event.label
    clash = set(abstract) & set(labels.values())
    if clash:
        raise UnsupportedHistoryError(
            f'Cloned types {sorted(clash)} still label schema nodes'
        )

    def inherited_keys(a):
        return set(abstract[a][0]) if a is not None else set()

    element_types = []
    for a, (props, mandatory, ext) in abstract.items():
        own = set(props) - inherited_keys(ext)
        element_types.append(ElementType(
            a,
            _property_types(props, mandatory, own),
            frozenset([ext]) if ext else frozenset()
        ))
    for n in schema.nodes():
        ext = parent.get(n)
        props = schema.props(n)
        own = set(props) - inherited_keys(ext)
        element_types.append(ElementType(
            labels[n],
            _property_types(props, schema.mandatory(n), own),
            frozenset([ext]) if ext else frozenset()
        ))
    element_types.extend(_edge_element_types(schema, edge_labels))

    def ancestors(a):
        res = []
        while a is not None:
            res.append(a)
            a = abstract[a][2]
        return res

    descendants = {a: set() for a in abstract}
    for n in schema.nodes():
        for a in ancestors(parent.get(n)):
            descendants[a].add(labels[n])
    abstract_order = sorted(abstract, key=lambda a: (len(ancestors(a)), a))

    pairs: Dict[str, Dict[str, Set[str]]] = {}
    for e in schema.edges():
        s, t = schema.endpoints(e)
        pairs.setdefault(edge_labels[e], {}).setdefault(
            labels[s], set()).add(labels[t])
    edge_types = []
    for lb in sorted(pairs):
        by_target: Dict[str, Set[str]] = {}
        for s, targets in sorted(pairs[lb].items()):
            for t in _generalize(targets, abstract_order, descendants):
                by_target.setdefault(t, set()).add(s)
        for t, sources in sorted(by_target.items()):
            for s in sorted(_generalize(sources, abstract_order, descendants)):
                edge_types.append(EdgeType(s, lb, t))

    gt = GraphType(
        name,
        tuple(element_types),
        tuple(NodeType(labels[n]) for n in schema.nodes()),
        tuple(edge_types)
    )
    diagnostics = check_graph_type(gt)
    if diagnostics:
        raise UnsupportedHistoryError(
            'Read-back graph type is invalid', diagnostics
        )
    return gt


__all__ = [
    'DataType', 'DdlError', 'Diagnostic', 'EdgeType', 'ElementType',
    'ExposedSets', 'GraphType', 'NodeType', 'PropertyType',
    'SchemaInterpretation', 'TypeIndex', 'check_graph_type', 'exposed_sets',
    'graph_type_to_json', 'graph_type_to_schema', 'infer_data_type',
    'parse_ddl', 'print_ddl', 'schema_to_graph_type',
]
