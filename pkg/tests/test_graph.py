# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
import datetime

import pytest

from pgse.common import (
    DuplicateIdError,
    GraphFormatError,
    MandatoryKeyAbsentError,
    ParallelEdgeError,
    SameNodeError,
    UnknownElementError,
)
from pgse.graph import (
    Mutation,
    MutationKind,
    PropertyGraph,
    Value,
    ValueMode,
    accepts,
    as_dictionary,
    as_values,
    clone_node,
    dictionary_union,
    graph_from_json,
    graph_to_json,
    is_isomorphic,
    merge_nodes,
    mutate,
    type_token,
)


def small_graph(simple=True, loop=False):
    g = PropertyGraph.build(
        [
            ('u', {'name': ['u']}, ['name']),
            ('v', {'name': ['v'], 'age': [3]}),
            ('w', {}),
        ],
        [('uv', 'u', 'v', {'w': [1]}), ('vw', 'v', 'w')],
        simple=simple
    )
    if loop:
        g.add_edge('v', 'v', 'vv')
    return g


class TestValues:
    def test_tags_are_exact(self):
        assert Value.of(1) != Value.of(True)
        assert Value.of(1).tag == 'int'
        assert Value.of(True).tag == 'bool'
        assert Value.of(datetime.date(2010, 10, 16)).tag == 'date'

    def test_bad_payload(self):
        with pytest.raises(GraphFormatError):
            Value('int', 'one')
        with pytest.raises(GraphFormatError):
            Value('float', 1.0)

    def test_json_form(self):
        v = Value.of(datetime.date(2010, 10, 16))
        assert v.to_json() == {'date': '2010-10-16'}
        assert Value.from_json({'date': '2010-10-16'}) == v
        assert Value.from_json({'str': 'Firefox'}) == Value.of('Firefox')

    def test_tokens(self):
        token = type_token('STRING')
        assert token.is_token
        assert token == Value.of('$STRING$')
        assert not Value.of('Firefox').is_token
        with pytest.raises(GraphFormatError):
            type_token('FLOAT')

    def test_symbolic_acceptance(self):
        date = Value.of(datetime.date(2010, 10, 30))
        assert accepts([type_token('TIMESTAMP')], date)
        assert accepts([type_token('DATE')], date)
        assert not accepts([type_token('STRING')], date)
        assert accepts(as_values(['Firefox']), Value.of('Firefox'))

    def test_extensional_acceptance(self):
        allowed = as_values(['Firefox', '$STRING$'])
        mode = ValueMode.EXTENSIONAL
        assert accepts(allowed, Value.of('Firefox'), mode)
        assert not accepts(allowed, Value.of('Safari'), mode)

    def test_as_values_wraps_scalars(self):
        assert as_values('abc') == frozenset([Value.of('abc')])
        assert as_values([1, 2]) == frozenset([Value.of(1), Value.of(2)])

    def test_dictionary_union(self):
        d1 = {'a': as_values([1])}
        d2 = {'a': as_values([2]), 'b': frozenset()}
        assert dictionary_union(d1, d2) == {
            'a': as_values([1, 2]),
            'b': frozenset(),
        }


class TestPropertyGraph:
    def test_queries(self):
        g = small_graph()
        assert g.nodes() == ['u', 'v', 'w']
        assert g.edges() == ['uv', 'vw']
        assert g.endpoints('uv') == ('u', 'v')
        assert g.out_edges('v') == ['vw']
        assert g.in_edges('v') == ['uv']
        assert g.edge_between('u', 'v') == 'uv'
        assert g.edge_between('v', 'u') is None
        assert g.values('v', 'age') == as_values([3])
        assert g.is_mandatory('u', 'name')
        assert not g.is_mandatory('v', 'name')

    def test_unknown_element(self):
        with pytest.raises(UnknownElementError):
            small_graph().props('x')

    def test_duplicate_id(self):
        g = small_graph()
        with pytest.raises(DuplicateIdError):
            g.add_node('uv')

    def test_parallel_edge(self):
        with pytest.raises(ParallelEdgeError):
            small_graph().add_edge('u', 'v')
        g = small_graph(simple=False)
        e = g.add_edge('u', 'v')
        assert g.edges_between('u', 'v') == sorted(['uv', e])

    def test_mandatory_needs_key(self):
        g = PropertyGraph()
        with pytest.raises(MandatoryKeyAbsentError):
            g.add_node('x', {}, ['name'])
        g.add_node('x', {'name': frozenset()}, ['name'])
        assert g.is_mandatory('x', 'name')

    def test_unset_property_clears_mark(self):
        g = small_graph()
        g.unset_property('u', 'name')
        assert not g.has_key('u', 'name')
        assert not g.is_mandatory('u', 'name')

    def test_remove_node_removes_edges(self):
        g = small_graph()
        g.remove_node('v')
        assert g.edges() == []

    def test_fresh_id_skips_used(self):
        g = small_graph()
        g.add_node('n0')
        assert g.fresh_id('n') == 'n1'
        assert g.fresh_id('n') == 'n2'
        assert g.fresh_id('u_clone', start=1) == 'u_clone1'

    def test_copy_is_independent(self):
        g = small_graph()
        h = g.copy()
        h.add_values('w', 'x', as_values([1]))
        assert h != g
        assert not g.has_key('w', 'x')


class TestMutate:
    def test_additions(self):
        g = small_graph()
        g, n = mutate(g, Mutation(MutationKind.ADD_NODE,
                                  props=as_dictionary({'k': [1]})))
        assert n == 'n0'
        g, e = mutate(g, Mutation(MutationKind.ADD_EDGE, 'wn',
                                  source='w', target=n))
        assert e == 'wn'
        assert g.endpoints('wn') == ('w', 'n0')

    def test_property_changes(self):
        g = small_graph()
        mutate(g, Mutation(MutationKind.SET_PROPERTY, 'w', key='k',
                           values=as_values([2])))
        mutate(g, Mutation(MutationKind.MARK_MANDATORY, 'w', key='k'))
        assert g.is_mandatory('w', 'k')
        mutate(g, Mutation(MutationKind.UNMARK_MANDATORY, 'w', key='k'))
        assert g.values('w', 'k') == as_values([2])
        assert not g.is_mandatory('w', 'k')
        _, x = mutate(g, Mutation(MutationKind.UNSET_PROPERTY, 'w', key='k'))
        assert x == 'w'
        assert g.keys('w') == []

    def test_deletions(self):
        g = small_graph()
        mutate(g, Mutation(MutationKind.DELETE_EDGE, 'vw'))
        assert g.edges() == ['uv']
        mutate(g, Mutation(MutationKind.DELETE_NODE, 'u'))
        assert g.nodes() == ['v', 'w']
        assert g.edges() == []


class TestClone:
    def test_clone_copies_dictionary_and_edges(self):
        g = small_graph()
        c = clone_node(g, 'v')
        assert c == 'v_clone1'
        assert g.props(c) == g.props('v')
        assert g.edge_between('u', c) is not None
        assert g.edge_between(c, 'w') is not None
        assert g.props(g.edge_between('u', c)) == g.props('uv')

    def test_clone_of_loop(self):
        g = small_graph(loop=True)
        c = clone_node(g, 'v')
        for s, t in [(c, c), (c, 'v'), ('v', c), ('v', 'v')]:
            assert g.edge_between(s, t) is not None
        assert g.number_of_edges() == 3 + 5


class TestMerge:
    def test_merge_unites_dictionaries(self):
        g = small_graph()
        merge_nodes(g, 'u', 'v')
        assert g.nodes() == ['u', 'w']
        assert g.values('u', 'name') == as_values(['u', 'v'])
        assert g.is_mandatory('u', 'name')
        assert g.edge_between('u', 'u') is not None
        assert g.edge_between('u', 'w') is not None
        assert g.number_of_edges() == 2

    def test_simple_merge_unites_parallel_edges(self):
        g = PropertyGraph.build(
            [('a', {}), ('b', {}), ('c', {})],
            [('ac', 'a', 'c', {'k': [1]}), ('bc', 'b', 'c', {'k': [2]})]
        )
        merge_nodes(g, 'a', 'b')
        assert g.edges() == ['ac']
        assert g.values('ac', 'k') == as_values([1, 2])

    def test_non_simple_merge_keeps_edges(self):
        g = PropertyGraph.build(
            [('a', {}), ('b', {}), ('c', {})],
            [('ac', 'a', 'c'), ('bc', 'b', 'c'), ('ab', 'a', 'b')],
            simple=False
        )
        merge_nodes(g, 'a', 'b')
        assert g.edges_between('a', 'c') == ['ac', 'bc']
        assert g.endpoints('ab') == ('a', 'a')

    def test_merge_with_itself(self):
        with pytest.raises(SameNodeError):
            merge_nodes(small_graph(), 'u', 'u')

    def test_clone_then_merge_back(self):
        g = small_graph(loop=True)
        h = g.copy()
        merge_nodes(h, 'v', clone_node(h, 'v'))
        assert is_isomorphic(g, h)


class TestJson:
    def test_canonical_form(self):
        g = small_graph()
        obj = graph_to_json(g)
        assert obj['nodes'][0] == {
            'id': 'u',
            'props': {'name': [{'str': 'u'}]},
            'mandatory': ['name'],
        }
        assert obj['edges'][0]['source'] == 'u'
        assert graph_from_json(obj) == g

    def test_malformed(self):
        with pytest.raises(GraphFormatError):
            graph_from_json({'nodes': [{'props': {}}]})
        with pytest.raises(GraphFormatError):
            graph_from_json({'nodes': [{'id': 'x', 'props': {'k': [1]}}]})


class TestIsomorphism:
    def test_ids_do_not_matter(self):
        g = small_graph()
        h = PropertyGraph.build(
            [
                ('a', {'name': ['u']}, ['name']),
                ('b', {'name': ['v'], 'age': [3]}),
                ('c', {}),
            ],
            [('x', 'a', 'b', {'w': [1]}), ('y', 'b', 'c')]
        )
        assert is_isomorphic(g, h)

    def test_compare_levels(self):
        g = small_graph()
        h = g.copy()
        h.set_property('v', 'age', as_values([4]))
        assert not is_isomorphic(g, h)
        assert is_isomorphic(g, h, 'keys')
        h.unset_property('v', 'age')
        assert not is_isomorphic(g, h, 'keys')
        assert is_isomorphic(g, h, 'structure')
