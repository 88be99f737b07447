# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Various common utilities and the exception hierarchy."""
from typing import Any, Dict, Iterable, List, Optional


def invert_map(mapping: Dict[str, str]) -> Dict[str, List[str]]:
    """Groups the keys of ``mapping`` by value.

    Returns:
        Dictionary from each value to the sorted list of its preimages.
    """
    res: Dict[str, List[str]] = {}
    for k in sorted(mapping):
        res.setdefault(mapping[k], []).append(k)
    return res


class PgseError(Exception):
    """Base class of all errors raised by the package.

    Attributes:
        code: Stable error name used in reports.
    """
    code = 'error'

    def to_json(self) -> Dict[str, Any]:
        """Makes a report dictionary for the command line."""
        return {'error': self.code, 'message': str(self)}


class GraphError(PgseError):
    """Errors of the property graph model."""
    code = 'graph-error'


class UnknownElementError(GraphError):
    """Referenced node or edge does not exist."""
    code = 'unknown-element'


class DuplicateIdError(GraphError):
    """Identifier is already used by a node or an edge."""
    code = 'duplicate-id'


class ParallelEdgeError(GraphError):
    """Second edge between the same endpoints of a simple graph."""
    code = 'parallel-edge-in-simple-graph'


class MandatoryKeyAbsentError(GraphError):
    """Key marked mandatory has no property entry."""
    code = 'mandatory-key-absent'


class SameNodeError(GraphError):
    """A node cannot be merged with itself."""
    code = 'same-node'


class GraphFormatError(GraphError):
    """Malformed graph JSON."""
    code = 'invalid-graph-format'


class DdlError(PgseError):
    """Errors of the schema definition language."""
    code = 'ddl-error'

    def __init__(self, message: str, diagnostics: Optional[list] = None):
        """Initialize."""
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])

    def to_json(self) -> Dict[str, Any]:
        """See :meth:`PgseError.to_json`."""
        res = super().to_json()
        if self.diagnostics:
            res['diagnostics'] = [d.to_json() for d in self.diagnostics]
        return res


class DdlSyntaxError(DdlError):
    """Text does not conform to the grammar.

    Attributes:
        line: 1-based line of the offending input, or None at end of input.
        column: 1-based column, or None.
        expected: Sorted names of the tokens that would be accepted.
    """
    code = 'syntax-error'

    def __init__(
            self,
            message: str,
            line: Optional[int] = None,
            column: Optional[int] = None,
            expected: Iterable[str] = ()
    ):
        """Initialize."""
        super().__init__(message)
        self.line = line
        self.column = column
        self.expected = sorted(expected)

    def to_json(self) -> Dict[str, Any]:
        """See :meth:`PgseError.to_json`."""
        res = super().to_json()
        res.update(line=self.line, column=self.column, expected=self.expected)
        return res


class DuplicateLabelError(DdlError):
    """Two element types share a label."""
    code = 'duplicate-label'


class UnknownLabelError(DdlError):
    """Reference to an undeclared element type."""
    code = 'unknown-label-reference'


class CyclicInheritanceError(DdlError):
    """An element type extends itself directly or indirectly."""
    code = 'cyclic-inheritance'


class DuplicatePropertyKeyError(DdlError):
    """Exposed property set has two property types with the same key."""
    code = 'duplicate-property-key'


class InvalidGraphTypeError(DdlError):
    """Graph type fails its semantic checks."""
    code = 'invalid-graph-type'


class EdgeTypeCollisionError(DdlError):
    """Two edge types expand to the same pair of schema nodes."""
    code = 'edge-type-collision'


class UnsupportedHistoryError(DdlError):
    """Audit trail contains rewrites that cannot be read back as DDL."""
    code = 'unsupported-history'


class HomError(PgseError):
    """Errors of homomorphism handling."""
    code = 'hom-error'


class DanglingMapError(HomError):
    """Node is mapped to a nonexistent target node."""
    code = 'dangling-map'


class MismatchedGraphsError(HomError):
    """Composed maps do not share the middle graph."""
    code = 'mismatched-graphs'


class RewriteError(PgseError):
    """Errors of rule handling and application."""
    code = 'rewrite-error'


class InvalidRuleError(RewriteError):
    """Rule maps are not homomorphisms or rule graphs are malformed."""
    code = 'invalid-rule'


class InvalidRuleClassError(RewriteError):
    """Restrictive or expansive phase called with the wrong kind of rule."""
    code = 'invalid-rule-class'


class InvalidMatchingError(RewriteError):
    """Matching is not an injective, mandatory-compatible map."""
    code = 'invalid-matching'


class PropagationError(PgseError):
    """Errors of instance/schema propagation."""
    code = 'propagation-error'


class InconsistentInputsError(PropagationError):
    """Maps passed to propagation do not fit together."""
    code = 'inconsistent-inputs'


class BadDirectiveError(PropagationError):
    """Propagation relation names an impossible assignment."""
    code = 'bad-directive'


class SmoError(PgseError):
    """Errors of schema manipulation operations and audit trails."""
    code = 'smo-error'


class UnknownTargetError(SmoError):
    """Operation target does not resolve in the graph or the type index."""
    code = 'unknown-target'


class InvalidPayloadError(SmoError):
    """Operation payload has the wrong shape for its kind."""
    code = 'invalid-payload'


class ReplayMismatchError(SmoError):
    """Trail entry does not apply to the trail head."""
    code = 'replay-mismatch'


class AmbiguousOriginError(SmoError):
    """Deleted property cannot be traced to a single origin."""
    code = 'ambiguous-origin'
