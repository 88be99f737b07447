# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Homomorphisms between property graphs and schema validation."""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional
import logging

from pgse.common import DanglingMapError, HomError, MismatchedGraphsError
from pgse.graph import ObjectId, PropertyGraph, ValueMode, accepts

module_logger = logging.getLogger(__name__)

TOTALITY = 'totality'
STRUCTURE = 'structure'
KEYS = 'i'
VALUES = 'ii'
MANDATORY = 'iii'

ALL_CONDITIONS = (TOTALITY, STRUCTURE, KEYS, VALUES, MANDATORY)


@dataclass(eq=False)
class Homomorphism:
    """Node map between two property graphs.

    The edge map is derived: an edge goes to the first target edge joining
    the images of its endpoints.
    """
    source: PropertyGraph
    target: PropertyGraph
    node_map: Dict[ObjectId, ObjectId] = field(default_factory=dict)

    def __call__(self, x: ObjectId) -> Optional[ObjectId]:
        """Returns the image of a node or an edge."""
        if self.source.has_edge(x):
            return self.edge_image(x)
        return self.node_map.get(x)

    def edge_image(self, e: ObjectId) -> Optional[ObjectId]:
        """Returns the image of an edge, or None if there is none."""
        s, t = self.source.endpoints(e)
        hs = self.node_map.get(s)
        ht = self.node_map.get(t)
        if not self.target.has_node(hs) or not self.target.has_node(ht):
            return None
        return self.target.edge_between(hs, ht)

    def edge_map(self) -> Dict[ObjectId, Optional[ObjectId]]:
        """Returns the derived edge map."""
        return {e: self.edge_image(e) for e in self.source.edges()}

    def preimages(self, y: ObjectId) -> List[ObjectId]:
        """Returns the sorted elements mapped onto ``y``."""
        if self.target.has_edge(y):
            return [e for e in self.source.edges() if self.edge_image(e) == y]
        return sorted(n for n, t in self.node_map.items() if t == y)

    def is_injective(self) -> bool:
        """Returns True if no two nodes share an image."""
        return len(set(self.node_map.values())) == len(self.node_map)

    def to_json(self) -> Dict[str, Any]:
        """Makes the interchange form ``{"node_map": {...}}``."""
        return {'node_map': dict(sorted(self.node_map.items()))}

    @classmethod
    def from_json(
            cls,
            obj: Mapping[str, Any],
            source: PropertyGraph,
            target: PropertyGraph
    ) -> 'Homomorphism':
        """Parses ``{"node_map": {...}}`` between the given graphs."""
        try:
            node_map = {str(k): str(v) for k, v in obj['node_map'].items()}
        except (KeyError, AttributeError, TypeError) as e:
            raise HomError(f'Malformed homomorphism document: {e}') from e
        return cls(source, target, node_map)

    def __repr__(self):
        """Makes a short representation."""
        return f'Homomorphism({self.node_map})'


def identity(g: PropertyGraph) -> Homomorphism:
    """Returns the identity map of a graph."""
    return Homomorphism(g, g, {n: n for n in g.nodes()})


@dataclass(frozen=True)
class Violation:
    """One broken validity condition."""
    element: ObjectId
    condition: str
    """One of ``totality``, ``structure``, ``i``, ``ii``, ``iii``."""
    key: Optional[str] = None
    detail: str = ''

    def to_json(self) -> Dict[str, Any]:
        """Makes a report entry."""
        return {
            'element': self.element,
            'condition': self.condition,
            'key': self.key,
            'detail': self.detail,
        }


def check_homomorphism(
        h: Homomorphism,
        mode: ValueMode = ValueMode.SYMBOLIC,
        conditions: Iterable[str] = ALL_CONDITIONS
) -> List[Violation]:
    """Lists every violation of the homomorphism conditions.

    The conditions are: totality of the node map; structure (each source
    edge has an image edge); (i) keys are present on images; (ii) values
    are admitted by the image value sets; (iii) keys mandatory on the
    image are mandatory on the preimage.

    Args:
        h: Map to check.
        mode: Value mode for condition (ii).
        conditions: Subset of conditions to check.

    Returns:
        Violations; an empty list means ``h`` is a valid homomorphism.

    Raises:
        DanglingMapError: A node is mapped to a node missing from the
            target.
    """
    conditions = set(conditions)
    g, s = h.source, h.target
    res = []
    for n in g.nodes():
        if n not in h.node_map:
            if TOTALITY in conditions:
                res.append(Violation(n, TOTALITY, detail='unmapped node'))
        elif not s.has_node(h.node_map[n]):
            raise DanglingMapError(
                f'Node {n!r} is mapped to missing node {h.node_map[n]!r}'
            )
    images = {n: h.node_map.get(n) for n in g.nodes()}
    for e in g.edges():
        src, tgt = g.endpoints(e)
        if images[src] is None or images[tgt] is None:
            continue
        images[e] = h.edge_image(e)
        if images[e] is None and STRUCTURE in conditions:
            res.append(Violation(
                e, STRUCTURE,
                detail=f'no edge {images[src]}->{images[tgt]} in target'
            ))
    for x, y in images.items():
        if y is None:
            continue
        for k, vs in sorted(g.props(x).items()):
            if not s.has_key(y, k):
                if KEYS in conditions:
                    res.append(Violation(x, KEYS, k, f'key absent on {y}'))
                continue
            if VALUES not in conditions:
                continue
            allowed = s.values(y, k)
            for v in sorted(vs):
                if not accepts(allowed, v, mode):
                    res.append(Violation(
                        x, VALUES, k, f'value {v} not admitted by {y}'
                    ))
        if MANDATORY in conditions:
            for k in sorted(s.mandatory(y)):
                if not g.is_mandatory(x, k):
                    res.append(Violation(
                        x, MANDATORY, k, f'key mandatory on {y}'
                    ))
    return res


def element_fits(
        g: PropertyGraph,
        x: ObjectId,
        s: PropertyGraph,
        y: ObjectId,
        mode: ValueMode
) -> bool:
    """Checks conditions (i)-(iii) for a single pair of elements."""
    for k, vs in g.props(x).items():
        if not s.has_key(y, k):
            return False
        allowed = s.values(y, k)
        if not all(accepts(allowed, v, mode) for v in vs):
            return False
    return s.mandatory(y) <= g.mandatory(x)


def find_homomorphisms(
        g: PropertyGraph,
        s: PropertyGraph,
        limit: Optional[int] = None,
        mode: ValueMode = ValueMode.SYMBOLIC
) -> List[Homomorphism]:
    """Enumerates valid homomorphisms by backtracking.

    Source nodes are assigned in sorted order and candidate targets are
    tried in sorted order, so results come in lexicographic order.

    Args:
        g: Source graph.
        s: Target graph.
        limit: Optional; Maximum number of results.
        mode: Value mode for condition (ii).
    """
    order = g.nodes()
    candidates = {
        n: [t for t in s.nodes() if element_fits(g, n, s, t, mode)]
        for n in order
    }
    res: List[Homomorphism] = []
    assignment: Dict[ObjectId, ObjectId] = {}

    def edge_ok(e):
        src, tgt = g.endpoints(e)
        if src not in assignment or tgt not in assignment:
            return True
        y = s.edge_between(assignment[src], assignment[tgt])
        return y is not None and element_fits(g, e, s, y, mode)

    def extend(i):
        if limit is not None and len(res) >= limit:
            return
        if i == len(order):
            res.append(Homomorphism(g, s, dict(assignment)))
            return
        n = order[i]
        for t in candidates[n]:
            assignment[n] = t
            if all(edge_ok(e) for e in g.incident_edges(n)):
                extend(i + 1)
            del assignment[n]

    extend(0)
    module_logger.debug(f'Found {len(res)} homomorphisms')
    return res


def compose(h1: Homomorphism, h2: Homomorphism) -> Homomorphism:
    """Returns ``h2`` after ``h1``.

    Raises:
        MismatchedGraphsError: The target of ``h1`` is not the source of
            ``h2``.
    """
    if h1.target is not h2.source and h1.target != h2.source:
        raise MismatchedGraphsError(
            'Target of the first map differs from source of the second'
        )
    try:
        node_map = {n: h2.node_map[t] for n, t in h1.node_map.items()}
    except KeyError as e:
        raise MismatchedGraphsError(f'Node {e} is not mapped') from e
    return Homomorphism(h1.source, h2.target, node_map)
