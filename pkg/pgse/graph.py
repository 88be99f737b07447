# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Property graphs with multi-valued properties and mandatory keys."""
from dataclasses import dataclass, field
from typing import (
    Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple
)
import datetime
import enum
import json
import logging

import networkx as nx

from pgse.common import (
    DuplicateIdError,
    GraphFormatError,
    MandatoryKeyAbsentError,
    ParallelEdgeError,
    SameNodeError,
    UnknownElementError,
)

module_logger = logging.getLogger(__name__)

ObjectId = str

DATA_TYPES = ('STRING', 'INTEGER', 'BOOLEAN', 'DATE', 'TIMESTAMP')

_TAG_DATA_TYPES = {
    'str': ('STRING',),
    'int': ('INTEGER',),
    'bool': ('BOOLEAN',),
    'date': ('DATE', 'TIMESTAMP'),
}


class ValueMode(enum.Enum):
    """How schema value sets constrain instance values."""
    SYMBOLIC = 'symbolic'
    EXTENSIONAL = 'extensional'


@dataclass(frozen=True)
class Value:
    """Tagged scalar property value.

    Equality is exact: values with different tags are never equal.
    """
    tag: str
    """One of ``int``, ``bool``, ``str`` and ``date``."""
    data: Any
    """Python payload matching the tag."""

    def __post_init__(self):
        """Validates the payload against the tag."""
        expected = {
            'int': int,
            'bool': bool,
            'str': str,
            'date': datetime.date,
        }.get(self.tag)
        if expected is None:
            raise GraphFormatError(f'Unknown value tag {self.tag!r}')
        ok = isinstance(self.data, expected)
        if self.tag == 'int' and isinstance(self.data, bool):
            ok = False
        if self.tag == 'date' and isinstance(self.data, datetime.datetime):
            ok = False
        if not ok:
            raise GraphFormatError(
                f'Payload {self.data!r} does not match tag {self.tag!r}'
            )

    @classmethod
    def of(cls, data: Any) -> 'Value':
        """Makes a value from a Python scalar, inferring the tag."""
        if isinstance(data, Value):
            return data
        if isinstance(data, bool):
            return cls('bool', data)
        if isinstance(data, int):
            return cls('int', data)
        if isinstance(data, datetime.date):
            return cls('date', data)
        if isinstance(data, str):
            return cls('str', data)
        raise GraphFormatError(f'Unsupported value {data!r}')

    def sort_key(self) -> Tuple[str, Any]:
        """Returns the canonical ordering key."""
        return (self.tag, self.data)

    def __lt__(self, other: 'Value') -> bool:
        """Orders values by tag, then payload."""
        return self.sort_key() < other.sort_key()

    @property
    def is_token(self) -> bool:
        """True for reserved type tokens such as ``$STRING$``."""
        return (
            self.tag == 'str'
            and self.data.startswith('$')
            and self.data.endswith('$')
            and self.data[1:-1] in DATA_TYPES
        )

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form, e.g. ``{"int": 1}``."""
        if self.tag == 'date':
            return {'date': self.data.isoformat()}
        return {self.tag: self.data}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> 'Value':
        """Parses the interchange form."""
        if not isinstance(obj, Mapping) or len(obj) != 1:
            raise GraphFormatError(f'Malformed value {obj!r}')
        (tag, data), = obj.items()
        if tag == 'date':
            try:
                data = datetime.date.fromisoformat(data)
            except (TypeError, ValueError) as e:
                raise GraphFormatError(f'Malformed date {data!r}') from e
        return cls(tag, data)

    def __str__(self):
        """Makes an informal string representation."""
        if self.tag == 'date':
            return self.data.isoformat()
        return str(self.data)


PropertyDictionary = Dict[str, FrozenSet[Value]]


def type_token(data_type: str) -> Value:
    """Returns the reserved token standing for all values of a data type."""
    if data_type not in DATA_TYPES:
        raise GraphFormatError(f'Unknown data type {data_type!r}')
    return Value('str', f'${data_type}$')


def token_data_type(value: Value) -> Optional[str]:
    """Returns the data type named by a token, or None for plain values."""
    if value.is_token:
        return value.data[1:-1]
    return None


def tokens_for(value: Value) -> FrozenSet[Value]:
    """Returns the tokens that accept ``value`` in symbolic mode."""
    return frozenset(type_token(t) for t in _TAG_DATA_TYPES[value.tag])


def default_token(value: Value) -> Value:
    """Returns the token used when a new key is typed after ``value``."""
    return type_token(_TAG_DATA_TYPES[value.tag][0])


def accepts(
        values: Iterable[Value],
        value: Value,
        mode: ValueMode = ValueMode.SYMBOLIC
) -> bool:
    """Decides whether a schema value set admits an instance value.

    Args:
        values: Schema value set.
        value: Instance value.
        mode: In symbolic mode a type token admits every value of its
            tag; in extensional mode only literal membership counts.
    """
    values = frozenset(values)
    if value in values:
        return True
    if mode is ValueMode.SYMBOLIC:
        return bool(tokens_for(value) & values)
    return False


def as_values(values: Iterable[Any]) -> FrozenSet[Value]:
    """Converts an iterable of scalars or values into a value set."""
    if not isinstance(values, (list, tuple, set, frozenset)):
        values = [values]
    return frozenset(Value.of(v) for v in values)


def as_dictionary(
        props: Optional[Mapping[str, Iterable[Any]]]
) -> PropertyDictionary:
    """Converts a mapping of keys to scalars into a property dictionary."""
    if not props:
        return {}
    return {str(k): as_values(v) for k, v in props.items()}


def dictionary_union(
        d1: Mapping[str, FrozenSet[Value]],
        d2: Mapping[str, FrozenSet[Value]]
) -> PropertyDictionary:
    """Unites keys and value sets of two property dictionaries.

    An absent key is treated as the empty value set.
    """
    res = {k: frozenset(v) for k, v in d1.items()}
    for k, v in d2.items():
        res[k] = res.get(k, frozenset()) | frozenset(v)
    return res


class PropertyGraph:
    """Property graph housing both instances and schemas.

    Nodes and edges share one identifier namespace. Every element carries
    a property dictionary and a set of mandatory keys, which is always a
    subset of the dictionary keys. In simple mode at most one edge joins
    an ordered pair of nodes.

    Graphs are single-writer: mutating methods work in place.

    Args:
        simple: Whether parallel edges are forbidden.
        id_seed: Start of the counter used for generated identifiers.
        logger: Logger object.
    """

    def __init__(
            self,
            simple: bool = True,
            id_seed: int = 0,
            logger=None
    ):
        """Initialize."""
        self.simple = simple
        self.id_seed = id_seed
        self._counter = id_seed
        self._nodes: Set[ObjectId] = set()
        self._eta: Dict[ObjectId, Tuple[ObjectId, ObjectId]] = {}
        self._props: Dict[ObjectId, PropertyDictionary] = {}
        self._mandatory: Dict[ObjectId, Set[str]] = {}
        self._out: Dict[ObjectId, Set[ObjectId]] = {}
        self._in: Dict[ObjectId, Set[ObjectId]] = {}
        if logger is None:
            logger = module_logger
        self.logger = logger.getChild(__class__.__name__)

    @classmethod
    def build(
            cls,
            nodes: Iterable[Tuple] = (),
            edges: Iterable[Tuple] = (),
            simple: bool = True,
            id_seed: int = 0
    ) -> 'PropertyGraph':
        """Builds a graph from compact tuples.

        Args:
            nodes: Tuples ``(id, props[, mandatory])`` where props maps
                keys to iterables of scalars.
            edges: Tuples ``(id, source, target[, props[, mandatory]])``.
            simple: Whether parallel edges are forbidden.
            id_seed: Start of the generated-id counter.
        """
        g = cls(simple=simple, id_seed=id_seed)
        for n in nodes:
            nid, props, *rest = n
            g.add_node(nid, as_dictionary(props), rest[0] if rest else ())
        for e in edges:
            eid, s, t, *rest = e
            props = as_dictionary(rest[0]) if rest else {}
            mandatory = rest[1] if len(rest) > 1 else ()
            g.add_edge(s, t, eid, props, mandatory)
        return g

    # Queries

    def nodes(self) -> List[ObjectId]:
        """Returns the sorted node identifiers."""
        return sorted(self._nodes)

    def edges(self) -> List[ObjectId]:
        """Returns the sorted edge identifiers."""
        return sorted(self._eta)

    def elements(self) -> List[ObjectId]:
        """Returns nodes followed by edges."""
        return self.nodes() + self.edges()

    def number_of_nodes(self) -> int:
        """Returns the number of nodes."""
        return len(self._nodes)

    def number_of_edges(self) -> int:
        """Returns the number of edges."""
        return len(self._eta)

    def has_node(self, x: ObjectId) -> bool:
        """Returns True if ``x`` is a node."""
        return x in self._nodes

    def has_edge(self, x: ObjectId) -> bool:
        """Returns True if ``x`` is an edge."""
        return x in self._eta

    def has_element(self, x: ObjectId) -> bool:
        """Returns True if ``x`` is a node or an edge."""
        return x in self._props

    def _require(self, x: ObjectId) -> None:
        if x not in self._props:
            raise UnknownElementError(f'Unknown element {x!r}')

    def _require_node(self, n: ObjectId) -> None:
        if n not in self._nodes:
            raise UnknownElementError(f'Unknown node {n!r}')

    def _require_edge(self, e: ObjectId) -> None:
        if e not in self._eta:
            raise UnknownElementError(f'Unknown edge {e!r}')

    def endpoints(self, e: ObjectId) -> Tuple[ObjectId, ObjectId]:
        """Returns ``(source, target)`` of an edge."""
        self._require_edge(e)
        return self._eta[e]

    def source(self, e: ObjectId) -> ObjectId:
        """Returns the source node of an edge."""
        return self.endpoints(e)[0]

    def target(self, e: ObjectId) -> ObjectId:
        """Returns the target node of an edge."""
        return self.endpoints(e)[1]

    def out_edges(self, n: ObjectId) -> List[ObjectId]:
        """Returns the sorted outgoing edges of a node."""
        self._require_node(n)
        return sorted(self._out[n])

    def in_edges(self, n: ObjectId) -> List[ObjectId]:
        """Returns the sorted incoming edges of a node."""
        self._require_node(n)
        return sorted(self._in[n])

    def incident_edges(self, n: ObjectId) -> List[ObjectId]:
        """Returns the sorted edges touching a node."""
        self._require_node(n)
        return sorted(self._out[n] | self._in[n])

    def successors(self, n: ObjectId) -> List[ObjectId]:
        """Returns the sorted successors of a node."""
        return sorted({self._eta[e][1] for e in self.out_edges(n)})

    def predecessors(self, n: ObjectId) -> List[ObjectId]:
        """Returns the sorted predecessors of a node."""
        return sorted({self._eta[e][0] for e in self.in_edges(n)})

    def edges_between(self, s: ObjectId, t: ObjectId) -> List[ObjectId]:
        """Returns the sorted edges going from ``s`` to ``t``."""
        self._require_node(s)
        self._require_node(t)
        return sorted(e for e in self._out[s] if self._eta[e][1] == t)

    def edge_between(self, s: ObjectId, t: ObjectId) -> Optional[ObjectId]:
        """Returns the first edge from ``s`` to ``t``, if any."""
        es = self.edges_between(s, t)
        return es[0] if es else None

    def props(self, x: ObjectId) -> PropertyDictionary:
        """Returns a copy of the property dictionary of an element."""
        self._require(x)
        return dict(self._props[x])

    def keys(self, x: ObjectId) -> List[str]:
        """Returns the sorted property keys of an element."""
        self._require(x)
        return sorted(self._props[x])

    def values(self, x: ObjectId, key: str) -> FrozenSet[Value]:
        """Returns the value set of a key, empty if the key is absent."""
        self._require(x)
        return self._props[x].get(key, frozenset())

    def has_key(self, x: ObjectId, key: str) -> bool:
        """Returns True if the element has the key."""
        self._require(x)
        return key in self._props[x]

    def mandatory(self, x: ObjectId) -> FrozenSet[str]:
        """Returns the mandatory keys of an element."""
        self._require(x)
        return frozenset(self._mandatory[x])

    def is_mandatory(self, x: ObjectId, key: str) -> bool:
        """Returns True if the key is mandatory on the element."""
        self._require(x)
        return key in self._mandatory[x]

    def fresh_id(self, prefix: str, start: Optional[int] = None) -> ObjectId:
        """Generates an unused identifier ``prefix<k>``.

        Args:
            prefix: Identifier prefix.
            start: First counter value to try. If omitted, the graph's
                monotone counter is used and advanced.
        """
        k = self._counter if start is None else start
        while f'{prefix}{k}' in self._props:
            k += 1
        if start is None:
            self._counter = k + 1
        return f'{prefix}{k}'

    # Mutations

    def _check_new_id(self, x: ObjectId) -> None:
        if x in self._props:
            raise DuplicateIdError(f'Identifier {x!r} is already used')

    def _init_element(
            self,
            x: ObjectId,
            props: Optional[Mapping[str, Iterable[Value]]],
            mandatory: Iterable[str]
    ) -> None:
        d = {k: frozenset(v) for k, v in (props or {}).items()}
        m = set(mandatory)
        if not m <= set(d):
            raise MandatoryKeyAbsentError(
                f'Mandatory keys {sorted(m - set(d))} have no property entry'
            )
        self._props[x] = d
        self._mandatory[x] = m

    def add_node(
            self,
            node_id: Optional[ObjectId] = None,
            props: Optional[Mapping[str, Iterable[Value]]] = None,
            mandatory: Iterable[str] = ()
    ) -> ObjectId:
        """Adds a node and returns its identifier."""
        if node_id is None:
            node_id = self.fresh_id('n')
        self._check_new_id(node_id)
        self._init_element(node_id, props, mandatory)
        self._nodes.add(node_id)
        self._out[node_id] = set()
        self._in[node_id] = set()
        self.logger.debug(f'Added node {node_id}')
        return node_id

    def add_edge(
            self,
            source: ObjectId,
            target: ObjectId,
            edge_id: Optional[ObjectId] = None,
            props: Optional[Mapping[str, Iterable[Value]]] = None,
            mandatory: Iterable[str] = ()
    ) -> ObjectId:
        """Adds an edge and returns its identifier.

        Raises:
            ParallelEdgeError: The graph is simple and an edge from
                ``source`` to ``target`` already exists.
        """
        self._require_node(source)
        self._require_node(target)
        if self.simple and self.edge_between(source, target) is not None:
            raise ParallelEdgeError(
                f'Edge {source!r}->{target!r} already exists'
            )
        if edge_id is None:
            edge_id = self.fresh_id('e')
        self._check_new_id(edge_id)
        self._init_element(edge_id, props, mandatory)
        self._eta[edge_id] = (source, target)
        self._out[source].add(edge_id)
        self._in[target].add(edge_id)
        self.logger.debug(f'Added edge {edge_id}: {source}->{target}')
        return edge_id

    def remove_edge(self, e: ObjectId) -> None:
        """Removes an edge."""
        self._require_edge(e)
        s, t = self._eta.pop(e)
        self._out[s].discard(e)
        self._in[t].discard(e)
        del self._props[e]
        del self._mandatory[e]
        self.logger.debug(f'Removed edge {e}')

    def remove_node(self, n: ObjectId) -> None:
        """Removes a node together with its incident edges."""
        for e in self.incident_edges(n):
            self.remove_edge(e)
        self._nodes.discard(n)
        del self._out[n]
        del self._in[n]
        del self._props[n]
        del self._mandatory[n]
        self.logger.debug(f'Removed node {n}')

    def _retarget_edge(
            self,
            e: ObjectId,
            source: ObjectId,
            target: ObjectId
    ) -> None:
        """Moves an edge to new endpoints keeping its identity."""
        s, t = self._eta[e]
        self._out[s].discard(e)
        self._in[t].discard(e)
        self._eta[e] = (source, target)
        self._out[source].add(e)
        self._in[target].add(e)

    def set_property(
            self,
            x: ObjectId,
            key: str,
            values: Iterable[Value]
    ) -> None:
        """Sets the value set of a key, replacing previous values."""
        self._require(x)
        self._props[x][key] = frozenset(values)

    def add_values(
            self,
            x: ObjectId,
            key: str,
            values: Iterable[Value]
    ) -> None:
        """Adds values to a key, creating the key if needed."""
        self._require(x)
        self._props[x][key] = (
            self._props[x].get(key, frozenset()) | frozenset(values)
        )

    def unset_property(self, x: ObjectId, key: str) -> None:
        """Removes a key; a mandatory mark goes with it."""
        self._require(x)
        self._props[x].pop(key, None)
        self._mandatory[x].discard(key)

    def mark_mandatory(self, x: ObjectId, key: str) -> None:
        """Marks an existing key mandatory."""
        self._require(x)
        if key not in self._props[x]:
            raise MandatoryKeyAbsentError(
                f'Key {key!r} of {x!r} has no property entry'
            )
        self._mandatory[x].add(key)

    def unmark_mandatory(self, x: ObjectId, key: str) -> None:
        """Clears the mandatory mark of a key."""
        self._require(x)
        self._mandatory[x].discard(key)

    def set_dictionary(
            self,
            x: ObjectId,
            props: Mapping[str, Iterable[Value]],
            mandatory: Iterable[str]
    ) -> None:
        """Replaces the whole dictionary and mandatory set of an element."""
        self._require(x)
        self._init_element(x, props, mandatory)

    def copy(self) -> 'PropertyGraph':
        """Returns an independent copy with the same identifiers."""
        g = PropertyGraph(simple=self.simple, id_seed=self.id_seed)
        g._counter = self._counter
        g._nodes = set(self._nodes)
        g._eta = dict(self._eta)
        g._props = {x: dict(d) for x, d in self._props.items()}
        g._mandatory = {x: set(m) for x, m in self._mandatory.items()}
        g._out = {n: set(es) for n, es in self._out.items()}
        g._in = {n: set(es) for n, es in self._in.items()}
        g.logger = self.logger
        return g

    def __eq__(self, other):
        """Structural equality, identifiers included."""
        if not isinstance(other, PropertyGraph):
            return NotImplemented
        return (
            self.simple == other.simple
            and self._nodes == other._nodes
            and self._eta == other._eta
            and self._props == other._props
            and self._mandatory == other._mandatory
        )

    __hash__ = None

    def __repr__(self):
        """Makes a short representation."""
        return (
            f'PropertyGraph(nodes={self.number_of_nodes()}, '
            f'edges={self.number_of_edges()}, simple={self.simple})'
        )


class MutationKind(enum.Enum):
    """Elementary graph changes."""
    ADD_NODE = 'add-node'
    ADD_EDGE = 'add-edge'
    DELETE_NODE = 'delete-node'
    DELETE_EDGE = 'delete-edge'
    SET_PROPERTY = 'set-property'
    UNSET_PROPERTY = 'unset-property'
    MARK_MANDATORY = 'mark-mandatory'
    UNMARK_MANDATORY = 'unmark-mandatory'


@dataclass
class Mutation:
    """An elementary change to apply with :func:`mutate`."""
    kind: MutationKind
    element: Optional[ObjectId] = None
    """Affected element; for additions the requested identifier."""
    source: Optional[ObjectId] = None
    target: Optional[ObjectId] = None
    key: Optional[str] = None
    values: FrozenSet[Value] = field(default_factory=frozenset)
    props: PropertyDictionary = field(default_factory=dict)


def mutate(
        g: PropertyGraph,
        action: Mutation
) -> Tuple[PropertyGraph, ObjectId]:
    """Applies one elementary change to ``g`` in place.

    Returns:
        The graph and the identifier of the affected element.
    """
    kind = action.kind
    x = action.element
    if kind is MutationKind.ADD_NODE:
        x = g.add_node(x, action.props)
    elif kind is MutationKind.ADD_EDGE:
        x = g.add_edge(action.source, action.target, x, action.props)
    elif kind is MutationKind.DELETE_NODE:
        g.remove_node(x)
    elif kind is MutationKind.DELETE_EDGE:
        g.remove_edge(x)
    elif kind is MutationKind.SET_PROPERTY:
        g.set_property(x, action.key, action.values)
    elif kind is MutationKind.UNSET_PROPERTY:
        g.unset_property(x, action.key)
    elif kind is MutationKind.MARK_MANDATORY:
        g.mark_mandatory(x, action.key)
    elif kind is MutationKind.UNMARK_MANDATORY:
        g.unmark_mandatory(x, action.key)
    else:
        raise ValueError(f'Unknown mutation {kind!r}')
    return g, x


def clone_node_with_edges(
        g: PropertyGraph,
        n: ObjectId
) -> Tuple[ObjectId, Dict[ObjectId, ObjectId]]:
    """Clones a node, reporting where every new edge was copied from.

    Returns:
        The clone identifier and a map from each new edge to the edge it
        copies.
    """
    g._require_node(n)
    clone = g.fresh_id(f'{n}_clone', start=1)
    g.add_node(clone, g.props(n), g.mandatory(n))
    out_edges = g.out_edges(n)
    in_edges = g.in_edges(n)
    copies = {}

    def copy_edge(e, s, t):
        new = g.fresh_id(f'{e}_clone', start=1)
        g.add_edge(s, t, new, g.props(e), g.mandatory(e))
        copies[new] = e

    for e in out_edges:
        copy_edge(e, clone, g.target(e))
    for e in in_edges:
        copy_edge(e, g.source(e), clone)
    for e in out_edges:
        if g.target(e) == n:
            copy_edge(e, clone, clone)
    g.logger.debug(f'Cloned {n} into {clone} with {len(copies)} edges')
    return clone, copies


def clone_node(g: PropertyGraph, n: ObjectId) -> ObjectId:
    """Clones a node with its dictionary and incident edges.

    A self-loop on ``n`` yields a loop on the clone plus one edge in each
    direction between the clone and ``n``.

    Returns:
        Identifier of the new node.
    """
    return clone_node_with_edges(g, n)[0]


def _absorb(g: PropertyGraph, keep: ObjectId, other: ObjectId) -> None:
    """Unites the dictionary and marks of ``other`` into ``keep``."""
    g.set_dictionary(
        keep,
        dictionary_union(g.props(keep), g.props(other)),
        g.mandatory(keep) | g.mandatory(other)
    )


def merge_nodes(g: PropertyGraph, n: ObjectId, m: ObjectId) -> ObjectId:
    """Merges node ``m`` into node ``n``.

    In simple graphs, edges that become parallel are merged with their
    dictionaries united, and all edges among ``n`` and ``m`` collapse to
    at most one self-loop on ``n``. In non-simple graphs every edge of
    ``m`` is moved to ``n``.

    Returns:
        The surviving node ``n``.
    """
    g._require_node(n)
    g._require_node(m)
    if n == m:
        raise SameNodeError(f'Cannot merge {n!r} with itself')
    _absorb(g, n, m)
    pair = (n, m)

    if not g.simple:
        for e in g.incident_edges(m):
            s, t = g.endpoints(e)
            g._retarget_edge(e, n if s == m else s, n if t == m else t)
    else:
        for e in g.out_edges(m):
            t = g.target(e)
            if t in pair:
                continue
            existing = g.edge_between(n, t)
            if existing is None:
                g._retarget_edge(e, n, t)
            else:
                _absorb(g, existing, e)
                g.remove_edge(e)
        for e in g.in_edges(m):
            s = g.source(e)
            if s in pair:
                continue
            existing = g.edge_between(s, n)
            if existing is None:
                g._retarget_edge(e, s, n)
            else:
                _absorb(g, existing, e)
                g.remove_edge(e)
        loops = sorted(
            e for e in set(g.incident_edges(n)) | set(g.incident_edges(m))
            if set(g.endpoints(e)) <= set(pair)
        )
        if loops:
            keep = g.edge_between(n, n) or loops[0]
            for e in loops:
                if e != keep:
                    _absorb(g, keep, e)
                    g.remove_edge(e)
            g._retarget_edge(keep, n, n)
    g.remove_node(m)
    g.logger.debug(f'Merged {m} into {n}')
    return n


def _element_to_json(g: PropertyGraph, x: ObjectId) -> Dict[str, Any]:
    return {
        'id': x,
        'props': {
            k: [v.to_json() for v in sorted(vs)]
            for k, vs in sorted(g.props(x).items())
        },
        'mandatory': sorted(g.mandatory(x)),
    }


def graph_to_json(g: PropertyGraph) -> Dict[str, Any]:
    """Makes the canonical JSON form of a graph."""
    edges = []
    for e in g.edges():
        obj = _element_to_json(g, e)
        s, t = g.endpoints(e)
        obj = {'id': e, 'source': s, 'target': t, **obj}
        edges.append(obj)
    return {
        'simple': g.simple,
        'nodes': [_element_to_json(g, n) for n in g.nodes()],
        'edges': edges,
    }


def _dictionary_from_json(obj: Any) -> PropertyDictionary:
    if not isinstance(obj, Mapping):
        raise GraphFormatError(f'Malformed property dictionary {obj!r}')
    return {
        str(k): frozenset(Value.from_json(v) for v in vs)
        for k, vs in obj.items()
    }


def graph_from_json(
        obj: Mapping[str, Any],
        id_seed: int = 0
) -> PropertyGraph:
    """Parses the JSON form of a graph.

    Raises:
        GraphFormatError: The document is malformed.
    """
    try:
        g = PropertyGraph(
            simple=bool(obj.get('simple', True)),
            id_seed=id_seed
        )
        for n in obj.get('nodes', []):
            g.add_node(
                n['id'],
                _dictionary_from_json(n.get('props', {})),
                n.get('mandatory', [])
            )
        for e in obj.get('edges', []):
            g.add_edge(
                e['source'],
                e['target'],
                e['id'],
                _dictionary_from_json(e.get('props', {})),
                e.get('mandatory', [])
            )
    except (KeyError, TypeError, AttributeError) as e:
        raise GraphFormatError(f'Malformed graph document: {e}') from e
    return g


def dumps(obj: Any, pretty: bool = False) -> str:
    """Serializes a JSON document canonically."""
    if pretty:
        return json.dumps(obj, indent=2, sort_keys=True)
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def _signature(g: PropertyGraph, x: ObjectId, compare: str) -> str:
    if compare == 'structure':
        return ''
    if compare == 'keys':
        content = sorted(g.keys(x))
    else:
        content = _element_to_json(g, x)['props']
    return dumps([content, sorted(g.mandatory(x))])


def to_networkx(g: PropertyGraph, compare: str = 'full') -> nx.MultiDiGraph:
    """Converts a graph to networkx, storing element signatures.

    Args:
        g: Graph to convert.
        compare: ``full``, ``keys`` or ``structure``; controls what the
            ``sig`` attribute of nodes and edges captures.
    """
    res = nx.MultiDiGraph()
    for n in g.nodes():
        res.add_node(n, sig=_signature(g, n, compare))
    for e in g.edges():
        s, t = g.endpoints(e)
        res.add_edge(s, t, key=e, sig=_signature(g, e, compare))
    return res


def _same_sig(a, b):
    return a['sig'] == b['sig']


def _same_edge_sigs(a, b):
    return (
        sorted(d['sig'] for d in a.values())
        == sorted(d['sig'] for d in b.values())
    )


def is_isomorphic(
        g1: PropertyGraph,
        g2: PropertyGraph,
        compare: str = 'full'
) -> bool:
    """Decides graph isomorphism up to element identifiers.

    Args:
        g1: First graph.
        g2: Second graph.
        compare: ``full`` compares dictionaries and mandatory marks,
            ``keys`` compares key sets and marks, ``structure`` ignores
            properties.
    """
    return nx.is_isomorphic(
        to_networkx(g1, compare),
        to_networkx(g2, compare),
        node_match=_same_sig,
        edge_match=_same_edge_sigs
    )
