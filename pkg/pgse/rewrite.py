# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Rewriting rules and their two-phase application.

A rule is a span ``L <- P -> R`` of property graphs. Applying it to a host
graph through an injective matching of ``L`` first runs the restrictive
phase (deletions and clones read off ``l_map``), then the expansive phase
(merges and additions read off ``r_map``). Both phases are realized with
the elementary transformations of :mod:`pgse.graph`.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple
import logging

import networkx as nx

from pgse.common import (
    InvalidMatchingError,
    InvalidRuleClassError,
    InvalidRuleError,
    PgseError,
    invert_map,
)
from pgse.graph import (
    ObjectId,
    PropertyGraph,
    Value,
    ValueMode,
    clone_node_with_edges,
    graph_from_json,
    graph_to_json,
    merge_nodes,
)
from pgse.hom import (
    KEYS,
    MANDATORY,
    STRUCTURE,
    TOTALITY,
    VALUES,
    Homomorphism,
    Violation,
    check_homomorphism,
    identity,
)

module_logger = logging.getLogger(__name__)

Matching = Homomorphism
"""Injective homomorphism from a rule's left-hand side into a host."""


def _is_identity(h: Homomorphism) -> bool:
    """Checks that a map is the identity between equal graphs."""
    if h.source is not h.target and h.source != h.target:
        return False
    return all(h.node_map.get(n) == n for n in h.source.nodes())


def _rule_map_violations(h: Homomorphism) -> List[Violation]:
    res = check_homomorphism(
        h, ValueMode.EXTENSIONAL, (TOTALITY, STRUCTURE, KEYS, VALUES)
    )
    for x in h.source.elements():
        y = h(x)
        if y is None:
            continue
        for k in sorted(h.target.mandatory(y)):
            if h.source.has_key(x, k) and not h.source.is_mandatory(x, k):
                res.append(Violation(
                    x, MANDATORY, k, f'key mandatory on {y}'
                ))
    return res


@dataclass(eq=False)
class Rule:
    """Rewriting rule ``L <- P -> R``.

    Value sets are compared literally, so rules can rewrite schemas that
    carry type tokens as well as instances.

    Raises:
        InvalidRuleError: A rule map is not a homomorphism.
    """
    lhs: PropertyGraph
    preserved: PropertyGraph
    rhs: PropertyGraph
    l_map: Homomorphism
    r_map: Homomorphism
    name: str = ''

    def __post_init__(self):
        """Validates both maps."""
        if self.l_map.source is not self.preserved \
                or self.l_map.target is not self.lhs \
                or self.r_map.source is not self.preserved \
                or self.r_map.target is not self.rhs:
            raise InvalidRuleError(
                f'Rule {self.name!r}: maps do not join P to L and R'
            )
        for side, h in (('l_map', self.l_map), ('r_map', self.r_map)):
            violations = _rule_map_violations(h)
            if violations:
                v = violations[0]
                raise InvalidRuleError(
                    f'Rule {self.name!r}: {side} breaks condition '
                    f'{v.condition} at {v.element} ({v.detail})'
                )

    @property
    def is_restrictive(self) -> bool:
        """True if ``r_map`` is an identity."""
        return _is_identity(self.r_map)

    @property
    def is_expansive(self) -> bool:
        """True if ``l_map`` is an identity."""
        return _is_identity(self.l_map)

    def restrictive_part(self) -> 'Rule':
        """Returns ``L <- P -> P``."""
        p = self.preserved
        return Rule(self.lhs, p, p, self.l_map, identity(p), self.name)

    def expansive_part(self) -> 'Rule':
        """Returns ``P <- P -> R``."""
        p = self.preserved
        return Rule(p, p, self.rhs, identity(p), self.r_map, self.name)

    @classmethod
    def build(
            cls,
            lhs: PropertyGraph,
            preserved: PropertyGraph,
            rhs: PropertyGraph,
            l_map: Mapping[ObjectId, ObjectId],
            r_map: Mapping[ObjectId, ObjectId],
            name: str = ''
    ) -> 'Rule':
        """Makes a rule from graphs and plain node maps."""
        return cls(
            lhs, preserved, rhs,
            Homomorphism(preserved, lhs, dict(l_map)),
            Homomorphism(preserved, rhs, dict(r_map)),
            name
        )

    @classmethod
    def restrictive(
            cls,
            lhs: PropertyGraph,
            preserved: PropertyGraph,
            l_map: Mapping[ObjectId, ObjectId],
            name: str = ''
    ) -> 'Rule':
        """Makes a rule whose right-hand side is its preserved graph."""
        return cls.build(
            lhs, preserved, preserved, l_map,
            {n: n for n in preserved.nodes()}, name
        )

    @classmethod
    def expansive(
            cls,
            preserved: PropertyGraph,
            rhs: PropertyGraph,
            r_map: Mapping[ObjectId, ObjectId],
            name: str = ''
    ) -> 'Rule':
        """Makes a rule whose left-hand side is its preserved graph."""
        return cls.build(
            preserved, preserved, rhs,
            {n: n for n in preserved.nodes()}, r_map, name
        )

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form."""
        res = {
            'lhs': graph_to_json(self.lhs),
            'preserved': graph_to_json(self.preserved),
            'rhs': graph_to_json(self.rhs),
            'l_map': dict(sorted(self.l_map.node_map.items())),
            'r_map': dict(sorted(self.r_map.node_map.items())),
        }
        if self.name:
            res['name'] = self.name
        return res

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> 'Rule':
        """Parses the interchange form.

        Raises:
            InvalidRuleError: The document is malformed.
        """
        try:
            preserved = graph_from_json(obj['preserved'])
            lhs = (
                graph_from_json(obj['lhs']) if 'lhs' in obj else preserved
            )
            rhs = (
                graph_from_json(obj['rhs']) if 'rhs' in obj else preserved
            )
            l_map = obj.get('l_map', {n: n for n in preserved.nodes()})
            r_map = obj.get('r_map', {n: n for n in preserved.nodes()})
        except (KeyError, TypeError, AttributeError, PgseError) as e:
            raise InvalidRuleError(f'Malformed rule document: {e}') from e
        return cls.build(lhs, preserved, rhs, l_map, r_map,
                         obj.get('name', ''))

    def __repr__(self):
        """Makes a short representation."""
        return (
            f'Rule({self.name!r}, L={self.lhs.number_of_nodes()}, '
            f'P={self.preserved.number_of_nodes()}, '
            f'R={self.rhs.number_of_nodes()})'
        )


@dataclass(frozen=True)
class PropertyEdit:
    """Key or values of one element.

    ``values`` set to None stands for the whole key.
    """
    element: ObjectId
    key: str
    values: Optional[FrozenSet[Value]] = None


@dataclass
class ActionPlan:
    """Elementary transformations read off a rule.

    Deletions, property deletions and clones refer to ``L``; key prunes
    refer to the ``P`` elements standing for clones; additions refer to
    ``R``; merges list groups of ``P`` nodes.
    """
    node_deletes: List[ObjectId] = field(default_factory=list)
    edge_deletes: List[ObjectId] = field(default_factory=list)
    prop_deletes: List[PropertyEdit] = field(default_factory=list)
    clones: List[Tuple[ObjectId, int]] = field(default_factory=list)
    key_prunes: List[PropertyEdit] = field(default_factory=list)
    node_adds: List[ObjectId] = field(default_factory=list)
    edge_adds: List[ObjectId] = field(default_factory=list)
    prop_adds: List[PropertyEdit] = field(default_factory=list)
    mandatory_adds: List[Tuple[ObjectId, str]] = field(default_factory=list)
    merges: List[List[ObjectId]] = field(default_factory=list)

    def is_empty(self) -> bool:
        """True if the plan changes nothing."""
        return not any(vars(self).values())

    def node_delta(self) -> int:
        """Returns the change in node count the plan causes."""
        return (
            - len(self.node_deletes)
            + sum(k for _, k in self.clones)
            - sum(len(group) - 1 for group in self.merges)
            + len(self.node_adds)
        )


def _missing(
        props: Mapping[str, FrozenSet[Value]],
        others: List[Mapping[str, FrozenSet[Value]]]
) -> List[Tuple[str, Optional[FrozenSet[Value]]]]:
    """Lists keys and values of ``props`` absent from all ``others``."""
    res = []
    for k, vs in sorted(props.items()):
        if not any(k in o for o in others):
            res.append((k, None))
            continue
        present = frozenset().union(*(o.get(k, frozenset()) for o in others))
        extra = frozenset(vs) - present
        if extra:
            res.append((k, extra))
    return res


def derive_actions(rule: Rule) -> ActionPlan:
    """Reads the elementary transformations off a rule."""
    plan = ActionPlan()
    lhs, p, rhs = rule.lhs, rule.preserved, rule.rhs

    for x in lhs.elements():
        pre = rule.l_map.preimages(x)
        if not pre:
            if lhs.has_node(x):
                plan.node_deletes.append(x)
            else:
                plan.edge_deletes.append(x)
            continue
        for k, vs in _missing(lhs.props(x), [p.props(q) for q in pre]):
            plan.prop_deletes.append(PropertyEdit(x, k, vs))
        if lhs.has_node(x) and len(pre) > 1:
            plan.clones.append((x, len(pre) - 1))
        if len(pre) > 1:
            for q in pre:
                for k, vs in _missing(lhs.props(x), [p.props(q)]):
                    plan.key_prunes.append(PropertyEdit(q, k, vs))

    for y in rhs.elements():
        pre = rule.r_map.preimages(y)
        if not pre:
            if rhs.has_node(y):
                plan.node_adds.append(y)
            else:
                plan.edge_adds.append(y)
            continue
        for k, vs in _missing(rhs.props(y), [p.props(q) for q in pre]):
            plan.prop_adds.append(PropertyEdit(y, k, vs))
        for k in sorted(rhs.mandatory(y)):
            if not any(p.is_mandatory(q, k) for q in pre):
                plan.mandatory_adds.append((y, k))

    for _, group in sorted(invert_map(rule.r_map.node_map).items()):
        if len(group) > 1:
            plan.merges.append(group)
    plan.merges.sort()
    return plan


def matching_violations(m: Matching) -> List[Violation]:
    """Lists why a map is not a valid matching.

    A matching is a total, injective, structure preserving map whose
    images carry every key and literal value of their preimages, and
    keep every mandatory key of the preimage mandatory.
    """
    res = check_homomorphism(
        m, ValueMode.EXTENSIONAL, (TOTALITY, STRUCTURE, KEYS, VALUES)
    )
    if not m.is_injective():
        res.append(Violation('', 'injectivity', detail='nodes share images'))
    for x in m.source.elements():
        y = m(x)
        if y is None:
            continue
        for k in sorted(m.source.mandatory(x)):
            if not m.target.is_mandatory(y, k):
                res.append(Violation(
                    x, MANDATORY, k, f'key not mandatory on {y}'
                ))
    return res


def _require_matching(m: Matching, lhs: PropertyGraph) -> None:
    if m.source is not lhs and m.source != lhs:
        raise InvalidMatchingError('Matching does not start at the rule LHS')
    violations = matching_violations(m)
    if violations:
        v = violations[0]
        raise InvalidMatchingError(
            f'Invalid matching: condition {v.condition} at '
            f'{v.element!r} ({v.detail})'
        )


def _contains(host: PropertyGraph, x, pattern: PropertyGraph, y) -> bool:
    """Checks that host element ``x`` can be the image of ``y``."""
    for k, vs in pattern.props(y).items():
        if not host.has_key(x, k) or not vs <= host.values(x, k):
            return False
    return pattern.mandatory(y) <= host.mandatory(x)


def find_matchings(rule: Rule, g: PropertyGraph) -> List[Matching]:
    """Enumerates the matchings of a rule's left-hand side in a graph.

    Returns:
        Matchings sorted by their images of the sorted ``L`` nodes.
    """
    lhs = rule.lhs
    if lhs.number_of_nodes() == 0:
        return [Homomorphism(lhs, g, {})]

    host = nx.DiGraph()
    host.add_nodes_from(g.nodes())
    for e in g.edges():
        host.add_edge(*g.endpoints(e))
    pattern = nx.DiGraph()
    pattern.add_nodes_from(lhs.nodes())
    for e in lhs.edges():
        pattern.add_edge(*lhs.endpoints(e))

    def node_match(a, b):
        return _contains(g, a['id'], lhs, b['id'])

    def edge_match(a, b):
        return _contains(g, a['id'], lhs, b['id'])

    for n in g.nodes():
        host.nodes[n]['id'] = n
    for n in lhs.nodes():
        pattern.nodes[n]['id'] = n
    for e in g.edges():
        s, t = g.endpoints(e)
        host.edges[s, t]['id'] = g.edge_between(s, t)
    for e in lhs.edges():
        s, t = lhs.endpoints(e)
        pattern.edges[s, t]['id'] = e

    matcher = nx.algorithms.isomorphism.DiGraphMatcher(
        host, pattern, node_match=node_match, edge_match=edge_match
    )
    order = lhs.nodes()
    found = set()
    for mapping in matcher.subgraph_monomorphisms_iter():
        inverse = {b: a for a, b in mapping.items()}
        found.add(tuple(inverse[n] for n in order))
    res = [Homomorphism(lhs, g, dict(zip(order, images)))
           for images in sorted(found)]
    module_logger.debug(f'Rule {rule.name!r}: {len(res)} matchings')
    return res


@dataclass
class RestrictiveResult:
    """Outcome of the restrictive phase."""
    graph: PropertyGraph
    matching: Matching
    """Map ``P -> G-``."""
    back_map: Homomorphism
    """Map ``G- -> G`` sending clones to their originals."""


@dataclass
class ExpansiveResult:
    """Outcome of the expansive phase."""
    graph: PropertyGraph
    matching: Matching
    """Map ``R -> G+``."""
    fwd_map: Homomorphism
    """Map ``G- -> G+`` sending merged nodes to the survivor."""


def _prune(
        h: PropertyGraph,
        x: ObjectId,
        pattern: Mapping[str, FrozenSet[Value]],
        kept: Mapping[str, FrozenSet[Value]]
) -> None:
    """Drops from ``x`` what ``pattern`` has and ``kept`` lacks."""
    for k, vs in pattern.items():
        if not h.has_key(x, k):
            continue
        if k not in kept:
            h.unset_property(x, k)
            continue
        gone = frozenset(vs) - frozenset(kept[k])
        if gone:
            h.set_property(x, k, h.values(x, k) - gone)


def apply_restrictive(
        g: PropertyGraph,
        rule: Rule,
        m: Matching
) -> RestrictiveResult:
    """Runs the deletions and clones of a restrictive rule on a copy.

    Matched edges and nodes outside the image of ``l_map`` are removed
    first. Every matched node with several preimages is then cloned once
    per extra preimage; the smallest preimage keeps the original node.
    Clone copies of matched edges are kept only where ``P`` has an edge,
    and each copy is pruned to the dictionary of its ``P`` element.

    Raises:
        InvalidRuleClassError: The rule is not restrictive.
        InvalidMatchingError: ``m`` is not a matching of the rule.
    """
    if not rule.is_restrictive:
        raise InvalidRuleClassError(f'Rule {rule.name!r} is not restrictive')
    _require_matching(m, rule.lhs)
    lhs, p = rule.lhs, rule.preserved
    plan = derive_actions(rule)
    h = g.copy()
    origin = {x: x for x in h.elements()}

    for e in plan.edge_deletes:
        ge = m.edge_image(e)
        if ge is not None and h.has_edge(ge):
            h.remove_edge(ge)
    for n in plan.node_deletes:
        h.remove_node(m.node_map[n])
    origin = {x: o for x, o in origin.items() if h.has_element(x)}

    images: Dict[ObjectId, ObjectId] = {}
    for x in lhs.nodes():
        pre = rule.l_map.preimages(x)
        if not pre:
            continue
        images[pre[0]] = m.node_map[x]
        for q in pre[1:]:
            clone, copies = clone_node_with_edges(h, m.node_map[x])
            origin[clone] = origin[m.node_map[x]]
            for new, old in copies.items():
                origin[new] = origin[old]
            images[q] = clone

    def copy_between(a, b, ge):
        for e in h.edges_between(a, b):
            if origin.get(e) == ge:
                return e
        return None

    for le in lhs.edges():
        pre = rule.l_map.preimages(le)
        if not pre:
            continue
        ge = m.edge_image(le)
        s, t = lhs.endpoints(le)
        for a in rule.l_map.preimages(s):
            for b in rule.l_map.preimages(t):
                copy = copy_between(images[a], images[b], ge)
                if copy is None:
                    continue
                pe = p.edge_between(a, b)
                if pe is None or rule.l_map.edge_image(pe) != le:
                    h.remove_edge(copy)
                    del origin[copy]
                else:
                    _prune(h, copy, lhs.props(le), p.props(pe))

    for q in p.nodes():
        x = rule.l_map.node_map[q]
        _prune(h, images[q], lhs.props(x), p.props(q))

    back = Homomorphism(h, g, {n: origin[n] for n in h.nodes()})
    module_logger.info(
        f'Restrictive phase of {rule.name!r}: {g.number_of_nodes()} -> '
        f'{h.number_of_nodes()} nodes'
    )
    return RestrictiveResult(h, Homomorphism(p, h, images), back)


def apply_expansive(
        g_minus: PropertyGraph,
        rule: Rule,
        m_minus: Matching
) -> ExpansiveResult:
    """Runs the merges and additions of an expansive rule on a copy.

    Each fibre of ``r_map`` is merged by a left fold in sorted order and
    the smallest host id survives. New ``R`` nodes keep their ``R`` id
    when it is free in the host. In simple graphs an added edge that
    joins two already connected nodes is united with the existing edge.

    Raises:
        InvalidRuleClassError: The rule is not expansive.
        InvalidMatchingError: ``m_minus`` is not a matching of the rule.
    """
    if not rule.is_expansive:
        raise InvalidRuleClassError(f'Rule {rule.name!r} is not expansive')
    _require_matching(m_minus, rule.lhs)
    p, rhs = rule.preserved, rule.rhs
    h = g_minus.copy()
    fwd = {n: n for n in h.nodes()}

    for y, group in sorted(invert_map(rule.r_map.node_map).items()):
        targets = sorted(m_minus.node_map[q] for q in group)
        survivor = targets[0]
        for t in targets[1:]:
            merge_nodes(h, survivor, t)
            fwd[t] = survivor

    images: Dict[ObjectId, ObjectId] = {}
    for y in rhs.nodes():
        pre = rule.r_map.preimages(y)
        if pre:
            images[y] = fwd[m_minus.node_map[pre[0]]]
            for k, vs in rhs.props(y).items():
                h.add_values(images[y], k, vs)
            for k in rhs.mandatory(y):
                h.mark_mandatory(images[y], k)
        else:
            nid = y if not h.has_element(y) else h.fresh_id('n')
            images[y] = h.add_node(nid, rhs.props(y), rhs.mandatory(y))

    for e in rhs.edges():
        s, t = rhs.endpoints(e)
        a, b = images[s], images[t]
        existing = None
        pre = rule.r_map.preimages(e)
        if pre and not h.simple:
            ge = m_minus.edge_image(pre[0])
            if ge is not None and h.has_edge(ge):
                existing = ge
        if existing is None and (h.simple or pre):
            existing = h.edge_between(a, b)
        if existing is None:
            eid = e if not h.has_element(e) else h.fresh_id('e')
            h.add_edge(a, b, eid, rhs.props(e), rhs.mandatory(e))
            continue
        for k, vs in rhs.props(e).items():
            h.add_values(existing, k, vs)
        for k in rhs.mandatory(e):
            h.mark_mandatory(existing, k)

    module_logger.info(
        f'Expansive phase of {rule.name!r}: {g_minus.number_of_nodes()} -> '
        f'{h.number_of_nodes()} nodes'
    )
    return ExpansiveResult(
        h,
        Homomorphism(rhs, h, images),
        Homomorphism(g_minus, h, fwd)
    )


@dataclass
class RewriteResult:
    """Outcome of both phases of a rule application."""
    graph: PropertyGraph
    restrictive: RestrictiveResult
    expansive: ExpansiveResult

    @property
    def back_map(self) -> Homomorphism:
        """Map ``G- -> G``."""
        return self.restrictive.back_map

    @property
    def fwd_map(self) -> Homomorphism:
        """Map ``G- -> G+``."""
        return self.expansive.fwd_map

    @property
    def matching(self) -> Matching:
        """Map ``R -> G+``."""
        return self.expansive.matching

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form of the result and its maps."""
        return {
            'graph': graph_to_json(self.graph),
            'back_map': self.back_map.to_json(),
            'fwd_map': self.fwd_map.to_json(),
            'matching': self.matching.to_json(),
        }


def apply_rule(g: PropertyGraph, rule: Rule, m: Matching) -> RewriteResult:
    """Applies a rule: restrictive phase, then expansive phase.

    Raises:
        InvalidMatchingError: ``m`` is not a matching of the rule.
    """
    restrictive = apply_restrictive(g, rule.restrictive_part(), m)
    expansive_rule = rule.expansive_part()
    m_minus = Homomorphism(
        expansive_rule.lhs, restrictive.graph, restrictive.matching.node_map
    )
    expansive = apply_expansive(restrictive.graph, expansive_rule, m_minus)
    return RewriteResult(expansive.graph, restrictive, expansive)


def rule_respects_schema(
        rule: Rule,
        s: PropertyGraph,
        h_l: Homomorphism,
        h_r: Homomorphism
) -> bool:
    """Checks that typings of ``L`` and ``R`` agree on ``P``."""
    for q in rule.preserved.nodes():
        left = h_l.node_map.get(rule.l_map.node_map[q])
        right = h_r.node_map.get(rule.r_map.node_map[q])
        if left is None or left != right or not s.has_node(left):
            return False
    return True
