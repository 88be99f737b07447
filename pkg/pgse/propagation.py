# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Keeping instance and schema consistent after one-sided rewrites.

A restrictive rewrite of the schema is propagated to the instance
(deleting and cloning instance nodes), an expansive rewrite of the
instance is propagated to the schema (adding and merging schema nodes).
Both come in a canonical and a controlled flavour; the controlled one
takes a :class:`PropagationRelation` of user directives.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Tuple
import logging

from networkx.utils import UnionFind

from pgse.common import (
    BadDirectiveError,
    InconsistentInputsError,
    invert_map,
)
from pgse.graph import (
    ObjectId,
    PropertyGraph,
    ValueMode,
    accepts,
    clone_node_with_edges,
    default_token,
    dictionary_union,
    merge_nodes,
)
from pgse.hom import (
    STRUCTURE,
    TOTALITY,
    Homomorphism,
    check_homomorphism,
    identity,
)
from pgse.rewrite import Rule

module_logger = logging.getLogger(__name__)


@dataclass
class PropagationRelation:
    """User directives for controlled propagation.

    Attributes:
        keep: Instance node to the schema clone it should keep.
        merge_into: Added instance node to the existing schema node it
            instantiates.
    """
    keep: Dict[ObjectId, ObjectId] = field(default_factory=dict)
    merge_into: Dict[ObjectId, ObjectId] = field(default_factory=dict)

    def is_empty(self) -> bool:
        """True if there are no directives."""
        return not self.keep and not self.merge_into

    def resolve(self, resolver) -> 'PropagationRelation':
        """Replaces schema labels by schema ids.

        Args:
            resolver: Callable turning a label or id into a schema id.
        """
        return PropagationRelation(
            {n: resolver(t) for n, t in self.keep.items()},
            {n: resolver(t) for n, t in self.merge_into.items()},
        )

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form."""
        res = {}
        if self.keep:
            res['keep'] = dict(sorted(self.keep.items()))
        if self.merge_into:
            res['merge_into'] = dict(sorted(self.merge_into.items()))
        return res

    @classmethod
    def from_json(
            cls,
            obj: Optional[Mapping[str, Any]]
    ) -> 'PropagationRelation':
        """Parses the interchange form; None gives an empty relation."""
        obj = obj or {}
        try:
            return cls(
                {str(k): str(v) for k, v in obj.get('keep', {}).items()},
                {
                    str(k): str(v)
                    for k, v in obj.get('merge_into', {}).items()
                },
            )
        except AttributeError as e:
            raise BadDirectiveError(f'Malformed relation: {e}') from e


class InstancePropagation(NamedTuple):
    """Instance after propagation of a schema restriction."""
    graph: PropertyGraph
    hom: Homomorphism
    """Map from the new instance to the restricted schema."""
    back_map: Homomorphism
    """Map from the new instance to the old one."""


class SchemaPropagation(NamedTuple):
    """Schema after propagation of an instance expansion."""
    graph: PropertyGraph
    hom: Homomorphism
    """Map from the expanded instance to the new schema."""
    schema_map: Homomorphism
    """Map from the old schema to the new one."""
    relaxed: List[Tuple[ObjectId, str]]
    """Schema keys whose mandatory mark was cleared."""


def _require_clean(h: Homomorphism, what: str, conditions) -> None:
    violations = check_homomorphism(h, conditions=conditions)
    if violations:
        v = violations[0]
        raise InconsistentInputsError(
            f'{what} is not a valid map: {v.condition} at {v.element!r}'
        )


def _require_valid(h: Homomorphism, what: str, mode: ValueMode) -> None:
    violations = check_homomorphism(h, mode)
    if violations:
        v = violations[0]
        raise InconsistentInputsError(
            f'{what} breaks condition {v.condition} at {v.element!r} '
            f'({v.detail})'
        )


def _prune_to_image(
        g: PropertyGraph,
        x: ObjectId,
        s: PropertyGraph,
        y: ObjectId,
        mode: ValueMode
) -> None:
    for k, vs in sorted(g.props(x).items()):
        if not s.has_key(y, k):
            module_logger.debug(f'Dropping key {k} of {x}')
            g.unset_property(x, k)
            continue
        allowed = s.values(y, k)
        kept = frozenset(v for v in vs if accepts(allowed, v, mode))
        if kept == vs:
            continue
        module_logger.debug(f'Dropping values of {k} on {x}')
        if kept or s.is_mandatory(y, k):
            g.set_property(x, k, kept)
        else:
            g.unset_property(x, k)


def propagate_to_instance(
        g: PropertyGraph,
        h: Homomorphism,
        back_map: Homomorphism,
        mode: ValueMode = ValueMode.SYMBOLIC,
        relation: Optional[PropagationRelation] = None
) -> InstancePropagation:
    """Repairs an instance after a restrictive rewrite of its schema.

    The type of an instance node is the set of restricted schema nodes
    whose origin is its old image. Untyped nodes are deleted, nodes with
    several types are cloned once per extra type (the smallest schema id
    stays with the original node), then instance edges and properties
    the restricted schema no longer admits are removed. A key the
    schema still marks mandatory keeps an empty value set instead.

    Args:
        g: Instance graph.
        h: Valid map from ``g`` to the old schema.
        back_map: Map from the restricted schema to the old schema.
        mode: Value mode of the schema.
        relation: Optional; ``keep`` directives restricting the type of
            individual instance nodes to a single clone.

    Raises:
        InconsistentInputsError: The maps do not fit together.
        BadDirectiveError: A directive names a node outside the type of
            its instance node.
    """
    if back_map.target is not h.target and back_map.target != h.target:
        raise InconsistentInputsError(
            'Restriction map does not lead to the schema of the instance'
        )
    _require_clean(back_map, 'Restriction map', (TOTALITY, STRUCTURE))
    _require_valid(h, 'Instance map', mode)
    keep = (relation or PropagationRelation()).keep
    for n in sorted(keep):
        if not g.has_node(n):
            raise BadDirectiveError(f'Directive names unknown node {n!r}')

    s_minus = back_map.source
    origins = invert_map(back_map.node_map)
    res = g.copy()
    node_map: Dict[ObjectId, ObjectId] = {}
    origin: Dict[ObjectId, ObjectId] = {}
    for n in g.nodes():
        types = origins.get(h.node_map[n], [])
        if n in keep:
            if keep[n] not in types:
                raise BadDirectiveError(
                    f'{keep[n]!r} is not a type of {n!r}; '
                    f'candidates are {types}'
                )
            types = [keep[n]]
        if not types:
            module_logger.debug(f'{n} has no type left; deleting')
            res.remove_node(n)
            continue
        node_map[n] = types[0]
        origin[n] = n
        for t in types[1:]:
            clone, _ = clone_node_with_edges(res, n)
            node_map[clone] = t
            origin[clone] = n
            module_logger.debug(f'{n} cloned into {clone} typed {t}')

    for e in res.edges():
        a, b = res.endpoints(e)
        if s_minus.edge_between(node_map[a], node_map[b]) is None:
            module_logger.debug(f'Edge {e} has no image; deleting')
            res.remove_edge(e)

    hom = Homomorphism(res, s_minus, node_map)
    for x in res.elements():
        _prune_to_image(res, x, s_minus, hom(x), mode)
    _require_valid(hom, 'Propagated instance map', mode)
    module_logger.info(
        f'Propagated to instance: {g.number_of_nodes()} -> '
        f'{res.number_of_nodes()} nodes'
    )
    return InstancePropagation(res, hom, Homomorphism(res, g, origin))


def controlled_propagate_to_instance(
        g: PropertyGraph,
        h: Homomorphism,
        back_map: Homomorphism,
        relation: PropagationRelation,
        mode: ValueMode = ValueMode.SYMBOLIC
) -> InstancePropagation:
    """Propagates to the instance keeping only the directed clones.

    Every instance node named in ``relation.keep`` ends up as a single
    node typed by its directive; the other nodes are cloned canonically.
    """
    return propagate_to_instance(g, h, back_map, mode, relation)


def relax_mandatory(
        h: Homomorphism,
        elements: Optional[List[ObjectId]] = None
) -> List[Tuple[ObjectId, str]]:
    """Clears target mandatory marks some preimage does not honour.

    Mutates ``h.target``.

    Args:
        h: Map whose target is relaxed.
        elements: Optional; Target elements to consider, all by default.

    Returns:
        Sorted ``(element, key)`` pairs that were relaxed.
    """
    s = h.target
    preimages: Dict[ObjectId, List[ObjectId]] = {}
    for x in h.source.elements():
        y = h(x)
        if y is not None:
            preimages.setdefault(y, []).append(x)
    res = []
    for y in elements if elements is not None else s.elements():
        for k in sorted(s.mandatory(y)):
            if not all(h.source.is_mandatory(x, k)
                       for x in preimages.get(y, [])):
                s.unmark_mandatory(y, k)
                res.append((y, k))
                module_logger.warning(f'Key {k} of {y} is no longer mandatory')
    return sorted(res)


def propagate_to_schema(
        s: PropertyGraph,
        h: Homomorphism,
        fwd_map: Homomorphism,
        mode: ValueMode = ValueMode.SYMBOLIC,
        relation: Optional[PropagationRelation] = None
) -> SchemaPropagation:
    """Repairs a schema after an expansive rewrite of its instance.

    The type of an expanded instance node is the set of schema nodes its
    preimages were mapped to. Untyped nodes get a fresh schema node, the
    types of every other node are merged into one (the smallest id
    survives), missing schema edges are added, keys and values the
    schema lacks are added (as literals in extensional mode, as type
    tokens in symbolic mode) and mandatory marks that some instance does
    not honour are cleared.

    Args:
        s: Schema graph.
        h: Map from the old instance to ``s``.
        fwd_map: Map from the old instance to the expanded one.
        mode: Value mode of the schema.
        relation: Optional; ``merge_into`` directives typing untyped
            instance nodes by existing schema nodes.

    Raises:
        InconsistentInputsError: The maps do not fit together, or a new
            value reaches a key typed by a token in symbolic mode.
        BadDirectiveError: A directive names a typed instance node or an
            unknown schema node.
    """
    if h.source is not fwd_map.source and h.source != fwd_map.source:
        raise InconsistentInputsError(
            'Instance map and expansion map start at different graphs'
        )
    if h.target is not s and h.target != s:
        raise InconsistentInputsError('Instance map does not lead to schema')
    _require_clean(h, 'Instance map', (TOTALITY, STRUCTURE))
    _require_clean(fwd_map, 'Expansion map', (TOTALITY, STRUCTURE))
    merge_into = (relation or PropagationRelation()).merge_into

    g_plus = fwd_map.target
    for n in sorted(merge_into):
        if not g_plus.has_node(n):
            raise BadDirectiveError(f'Directive names unknown node {n!r}')
        if not s.has_node(merge_into[n]):
            raise BadDirectiveError(
                f'Directive names unknown schema node {merge_into[n]!r}'
            )
    preimages = invert_map(fwd_map.node_map)
    res = s.copy()
    groups = UnionFind()
    survivors: Dict[ObjectId, ObjectId] = {}

    def survivor(t: ObjectId) -> ObjectId:
        return survivors.get(groups[t], t)

    assign: Dict[ObjectId, ObjectId] = {}
    for n in g_plus.nodes():
        types = sorted({h.node_map[x] for x in preimages.get(n, [])})
        if n in merge_into:
            if types:
                raise BadDirectiveError(
                    f'{n!r} is already typed by {types}'
                )
            types = [merge_into[n]]
        if not types:
            t = res.add_node(res.fresh_id('type'))
            module_logger.debug(f'{n} is untyped; new schema node {t}')
            assign[n] = t
            continue
        current = sorted({survivor(t) for t in types})
        first = current[0]
        for other in current[1:]:
            merge_nodes(res, first, other)
            module_logger.debug(f'Merged schema node {other} into {first}')
        groups.union(*current)
        survivors[groups[first]] = first
        assign[n] = first
    node_map = {n: survivor(t) for n, t in assign.items()}

    for e in g_plus.edges():
        a, b = (node_map[x] for x in g_plus.endpoints(e))
        if res.edge_between(a, b) is None:
            new = res.add_edge(a, b, res.fresh_id('edge'))
            module_logger.debug(f'New schema edge {new}: {a}->{b}')

    hom = Homomorphism(g_plus, res, node_map)
    for x in g_plus.elements():
        y = hom(x)
        for k, vs in sorted(g_plus.props(x).items()):
            if not res.has_key(y, k):
                if mode is ValueMode.SYMBOLIC:
                    vs = frozenset(default_token(v) for v in vs)
                res.add_values(y, k, vs)
                module_logger.debug(f'Schema {y} gains key {k}')
                continue
            allowed = res.values(y, k)
            novel = frozenset(v for v in vs if not accepts(allowed, v, mode))
            if not novel:
                continue
            if mode is ValueMode.SYMBOLIC and any(
                    v.is_token for v in allowed):
                raise InconsistentInputsError(
                    f'Value {sorted(novel)[0]} of {x} does not fit the type '
                    f'of key {k!r} on {y}'
                )
            res.add_values(y, k, novel)
            module_logger.debug(f'Schema {y} key {k} gains {len(novel)} '
                                f'values')
    relaxed = relax_mandatory(hom)

    _require_valid(hom, 'Propagated schema map', mode)
    schema_map = Homomorphism(
        s, res, {t: survivor(t) for t in s.nodes()}
    )
    module_logger.info(
        f'Propagated to schema: {s.number_of_nodes()} -> '
        f'{res.number_of_nodes()} nodes'
    )
    return SchemaPropagation(res, hom, schema_map, relaxed)


def controlled_propagate_to_schema(
        s: PropertyGraph,
        h: Homomorphism,
        fwd_map: Homomorphism,
        relation: PropagationRelation,
        mode: ValueMode = ValueMode.SYMBOLIC
) -> SchemaPropagation:
    """Propagates to the schema typing directed new nodes by old types."""
    return propagate_to_schema(s, h, fwd_map, mode, relation)


def enrich_schema(
        s: PropertyGraph,
        h: Homomorphism,
        mode: ValueMode = ValueMode.EXTENSIONAL
) -> SchemaPropagation:
    """Fills a schema with the keys and values its instance uses."""
    return propagate_to_schema(s, h, identity(h.source), mode)


def induced_schema_rule(
        s: PropertyGraph,
        s_plus: PropertyGraph,
        schema_map: Homomorphism,
        name: str = 'propagated'
) -> Tuple[Rule, Homomorphism]:
    """Describes a propagated schema expansion as an expansive rule.

    Applying the rule at the returned matching to ``s`` reproduces
    ``s_plus`` up to cleared mandatory marks, with the same identifiers.
    The right-hand side carries only the keys and values the expansion
    added.

    Returns:
        The rule and its matching into ``s``.
    """
    touched = set()
    for t, group in invert_map(schema_map.node_map).items():
        if len(group) > 1:
            touched.update(group)
    for t in s.nodes():
        y = schema_map.node_map[t]
        if s.props(t) != s_plus.props(y) \
                or not s_plus.mandatory(y) <= s.mandatory(t):
            touched.add(t)
    changed_edges = []
    for e in s.edges():
        y = schema_map(e)
        if s.props(e) != s_plus.props(y) \
                or not s_plus.mandatory(y) <= s.mandatory(e):
            changed_edges.append(e)
            touched.update(s.endpoints(e))
    images = invert_map(schema_map.node_map)
    edge_images = {schema_map(e) for e in s.edges()}
    new_edges = [e for e in s_plus.edges() if e not in edge_images]
    for e in new_edges:
        for y in s_plus.endpoints(e):
            touched.update(images.get(y, []))

    p = PropertyGraph(simple=s.simple)
    for t in sorted(touched):
        p.add_node(t)
    for e in changed_edges:
        p.add_edge(*s.endpoints(e), e)

    def delta(y, preimages):
        known, marks = {}, set()
        for x in preimages:
            known = dictionary_union(known, s.props(x))
            marks |= s.mandatory(x)
        props = {}
        for k, vs in s_plus.props(y).items():
            if k not in known or vs - known[k]:
                props[k] = vs - known.get(k, frozenset())
        return props, (s_plus.mandatory(y) - marks) & set(props)

    edge_groups = invert_map({e: schema_map(e) for e in s.edges()})
    r = PropertyGraph(simple=s.simple)
    r_nodes = {schema_map.node_map[t] for t in touched}
    r_nodes |= {y for y in s_plus.nodes() if y not in images}
    for y in sorted(r_nodes):
        r.add_node(y, *delta(y, images.get(y, [])))
    r_map = {t: schema_map.node_map[t] for t in touched}
    for e in changed_edges:
        y = schema_map(e)
        a, b = s_plus.endpoints(y)
        if r.edge_between(a, b) is None:
            r.add_edge(a, b, y, *delta(y, edge_groups.get(y, [])))
    for e in new_edges:
        a, b = s_plus.endpoints(e)
        if r.edge_between(a, b) is None:
            r.add_edge(a, b, e, s_plus.props(e), s_plus.mandatory(e))
    rule = Rule.expansive(p, r, r_map, name)
    return rule, Homomorphism(p, s, {t: t for t in p.nodes()})
