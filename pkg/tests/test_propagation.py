# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
import pytest

from pgse.common import BadDirectiveError, InconsistentInputsError
from pgse.ddl import graph_type_to_schema, parse_ddl
from pgse.examples import rules, snb
from pgse.graph import (
    PropertyGraph,
    ValueMode,
    as_values,
    is_isomorphic,
    type_token,
)
from pgse.hom import Homomorphism, check_homomorphism, compose
from pgse.propagation import (
    PropagationRelation,
    controlled_propagate_to_instance,
    controlled_propagate_to_schema,
    enrich_schema,
    induced_schema_rule,
    propagate_to_instance,
    propagate_to_schema,
    relax_mandatory,
)
from pgse.rewrite import Rule, apply_rule


def rewrite_instance(instance, rule, node_map):
    return apply_rule(
        instance, rule, Homomorphism(rule.lhs, instance, dict(node_map))
    )


def to_schema(schema, typing, rw, relation=None):
    h_minus = compose(rw.back_map, typing)
    return propagate_to_schema(schema, h_minus, rw.fwd_map,
                               relation=relation)


def clone_messages(state):
    """Clones the message type of the merged schema."""
    lhs = PropertyGraph.build([('m', {})])
    p = PropertyGraph.build([('m1', {}), ('m2', {})])
    rule = Rule.restrictive(lhs, p, {'m1': 'm', 'm2': 'm'}, 'clone')
    return apply_rule(state.schema, rule,
                      Homomorphism(lhs, state.schema, {'m': 'Message'}))


class TestToSchema:
    def test_merge_reply_merges_types(self, instance, schema, typing):
        s, _ = schema
        rw = rewrite_instance(instance, rules.merge_reply_rule(),
                              rules.MERGE_REPLY_MATCHING)
        res = to_schema(s, typing, rw)
        assert res.graph.nodes() == ['Comment', 'Person']
        assert res.schema_map.node_map == {
            'Comment': 'Comment', 'Person': 'Person', 'Post': 'Comment',
        }
        assert res.relaxed == []
        merged, _ = graph_type_to_schema(parse_ddl(snb.MERGED_DDL))
        assert is_isomorphic(res.graph, merged)
        assert check_homomorphism(res.hom) == []
        assert s.nodes() == ['Comment', 'Person', 'Post']

    def test_chained_merges_share_a_survivor(self):
        s = PropertyGraph.build([('A', {}), ('B', {}), ('C', {})])
        g = PropertyGraph.build([('x', {}), ('y', {}), ('u', {}), ('z', {})])
        typing = Homomorphism(g, s, {'x': 'A', 'y': 'B', 'u': 'B', 'z': 'C'})
        rule = Rule.expansive(
            g.copy(), PropertyGraph.build([('p', {}), ('q', {})]),
            {'x': 'p', 'y': 'p', 'u': 'q', 'z': 'q'}, 'merge pairs'
        )
        rw = rewrite_instance(g, rule, {n: n for n in g.nodes()})
        res = to_schema(s, typing, rw)
        assert res.graph.nodes() == ['A']
        assert res.schema_map.node_map == {'A': 'A', 'B': 'A', 'C': 'A'}
        assert set(res.hom.node_map.values()) == {'A'}
        assert check_homomorphism(res.hom) == []

    def test_untyped_node_gets_new_type(self, instance, schema, typing):
        s, _ = schema
        rw = rewrite_instance(instance, rules.merge_posts_rule(),
                              rules.MERGE_POSTS_MATCHING)
        res = to_schema(s, typing, rw)
        new = res.hom('d')
        assert new not in s.nodes()
        assert res.graph.number_of_nodes() == 4
        assert res.graph.values(new, 'creationDate') == frozenset(
            [type_token('DATE')]
        )
        assert res.graph.edge_between(new, 'Person') is not None
        assert res.graph.edge_between(new, 'Post') is not None

    def test_directed_type_relaxes_marks(self, instance, schema, typing):
        s, _ = schema
        rw = rewrite_instance(instance, rules.merge_posts_rule(),
                              rules.MERGE_POSTS_MATCHING)
        h_minus = compose(rw.back_map, typing)
        res = controlled_propagate_to_schema(
            s, h_minus, rw.fwd_map, PropagationRelation(merge_into={
                'd': 'Post'
            })
        )
        assert res.hom('d') == 'Post'
        assert res.graph.number_of_nodes() == 3
        assert res.relaxed == [
            ('Post', 'browserUsed'), ('Post', 'creationDate')
        ]
        assert res.graph.edge_between('Post', 'Post') is not None
        assert s.is_mandatory('Post', 'browserUsed')

    def test_bad_directives(self, instance, schema, typing):
        s, _ = schema
        rw = rewrite_instance(instance, rules.merge_posts_rule(),
                              rules.MERGE_POSTS_MATCHING)
        for merge_into in ({'n1': 'Person'}, {'d': 'Forum'},
                           {'zz': 'Post'}):
            with pytest.raises(BadDirectiveError):
                to_schema(s, typing, rw, PropagationRelation(
                    merge_into=merge_into
                ))

    def test_value_outside_token_type(self, instance, schema, typing):
        s, _ = schema
        rw = rewrite_instance(instance, rules.merge_reply_rule(),
                              rules.MERGE_REPLY_MATCHING)
        rw.graph.set_property('n2', 'browserUsed', as_values([3]))
        with pytest.raises(InconsistentInputsError):
            to_schema(s, typing, rw)

    def test_enrich_fills_literals(self, merged_state):
        s = merged_state.schema
        assert s.values('Message', 'browserUsed') == as_values(
            ['Firefox', 'Safari']
        )
        assert s.values('Message', 'imageFile') == as_values(
            ['photo33711.jpg']
        )

    def test_enrich_adds_keys(self, instance, schema, typing):
        s, _ = schema
        instance.set_property('n1', 'nickname', as_values(['bd']))
        res = enrich_schema(s, typing)
        assert res.graph.values('Person', 'nickname') == as_values(['bd'])
        assert not res.graph.is_mandatory('Person', 'nickname')


class TestRelax:
    def test_clears_unhonoured_marks(self, instance, typing):
        instance.unmark_mandatory('n1', 'lastName')
        assert relax_mandatory(typing) == [('Person', 'lastName')]
        assert not typing.target.is_mandatory('Person', 'lastName')
        assert typing.target.is_mandatory('Person', 'firstName')

    def test_restricted_to_elements(self, instance, typing):
        instance.unmark_mandatory('n1', 'lastName')
        assert relax_mandatory(typing, ['Post']) == []


class TestToInstance:
    def test_deleted_schema_edge(self, instance, schema, typing):
        s, _ = schema
        rule = rules.drop_likes_rule()
        rw = apply_rule(s, rule, Homomorphism(
            rule.lhs, s, {'p': 'Person', 'm': 'Post'}
        ))
        res = propagate_to_instance(instance, typing, rw.back_map)
        assert res.graph.number_of_edges() == 8
        for a, b in [('n1', 'n2'), ('n1', 'n4'), ('n5', 'n4')]:
            assert res.graph.edge_between(a, b) is None
        assert res.hom.node_map == typing.node_map

    def test_mandatory_key_keeps_empty_values(self):
        s = PropertyGraph.build([('T', {'k': [1, 2], 'm': [1]}, ['k'])])
        g = PropertyGraph.build([('x', {'k': [1], 'm': [1]}, ['k'])])
        typing = Homomorphism(g, s, {'x': 'T'})
        lhs = PropertyGraph.build([('t', {'k': [1, 2], 'm': [1]}, ['k'])])
        p = PropertyGraph.build([('t', {'k': [2], 'm': []}, ['k'])])
        rule = Rule.restrictive(lhs, p, {'t': 't'}, 'drop values')
        rw = apply_rule(s, rule, Homomorphism(lhs, s, {'t': 'T'}))
        res = propagate_to_instance(g, typing, rw.back_map,
                                    ValueMode.EXTENSIONAL)
        assert res.graph.values('x', 'k') == frozenset()
        assert res.graph.is_mandatory('x', 'k')
        assert not res.graph.has_key('x', 'm')
        assert check_homomorphism(res.hom, ValueMode.EXTENSIONAL) == []

    def test_canonical_clones_every_message(self, merged_state):
        rw = clone_messages(merged_state)
        res = propagate_to_instance(
            merged_state.instance, merged_state.hom, rw.back_map,
            merged_state.mode
        )
        assert res.graph.number_of_nodes() == 9
        assert res.hom('n8') == 'Message'
        assert res.hom('n8_clone1') == 'Message_clone1'
        assert res.back_map('n8_clone1') == 'n8'
        assert check_homomorphism(res.hom, merged_state.mode) == []

    def test_controlled_keeps_directed_nodes(self, merged_state):
        rw = clone_messages(merged_state)
        res = controlled_propagate_to_instance(
            merged_state.instance, merged_state.hom, rw.back_map,
            PropagationRelation(keep={
                'n2': 'Message_clone1', 'n6': 'Message'
            }),
            merged_state.mode
        )
        assert res.graph.number_of_nodes() == 7
        assert res.hom('n2') == 'Message_clone1'
        assert res.hom('n6') == 'Message'
        assert not res.graph.has_node('n2_clone1')

    def test_bad_keep_directive(self, merged_state):
        rw = clone_messages(merged_state)
        for keep in ({'n2': 'Person'}, {'zz': 'Message'}):
            with pytest.raises(BadDirectiveError):
                propagate_to_instance(
                    merged_state.instance, merged_state.hom, rw.back_map,
                    merged_state.mode, PropagationRelation(keep=keep)
                )

    def test_mismatched_schema(self, instance, typing, merged_state):
        rw = clone_messages(merged_state)
        with pytest.raises(InconsistentInputsError):
            propagate_to_instance(instance, typing, rw.back_map)


class TestInducedRule:
    def test_reproduces_propagation(self, instance, schema, typing):
        s, _ = schema
        rw = rewrite_instance(instance, rules.merge_reply_rule(),
                              rules.MERGE_REPLY_MATCHING)
        res = to_schema(s, typing, rw)
        rule, m = induced_schema_rule(s, res.graph, res.schema_map)
        assert rule.is_expansive
        assert rule.preserved.nodes() == ['Comment', 'Post']
        again = apply_rule(s, rule, m)
        assert again.graph.nodes() == res.graph.nodes()
        assert is_isomorphic(again.graph, res.graph)


class TestRelation:
    def test_json(self):
        rel = PropagationRelation(keep={'n2': 'Post'})
        assert rel.to_json() == {'keep': {'n2': 'Post'}}
        assert PropagationRelation.from_json(rel.to_json()) == rel
        assert PropagationRelation.from_json(None).is_empty()
        with pytest.raises(BadDirectiveError):
            PropagationRelation.from_json({'keep': ['n2']})

    def test_resolve(self):
        rel = PropagationRelation(merge_into={'d': 'post'})
        assert rel.resolve(str.capitalize).merge_into == {'d': 'Post'}
