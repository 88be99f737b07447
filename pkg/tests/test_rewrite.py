# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
import datetime

import pytest

from pgse.common import (
    InvalidMatchingError,
    InvalidRuleClassError,
    InvalidRuleError,
)
from pgse.examples import rules, snb
from pgse.graph import PropertyGraph, as_values, is_isomorphic
from pgse.hom import Homomorphism
from pgse.rewrite import (
    PropertyEdit,
    Rule,
    apply_expansive,
    apply_restrictive,
    apply_rule,
    derive_actions,
    find_matchings,
    matching_violations,
    rule_respects_schema,
)


def at(rule, g, node_map):
    return Homomorphism(rule.lhs, g, dict(node_map))


def split_host():
    return PropertyGraph.build(
        [('h', {'k': [1, 5], 'j': [2], 'o': [9]}), ('t', {}), ('u', {})],
        [('ht', 'h', 't'), ('hu', 'h', 'u')]
    )


class TestRule:
    def test_classes(self, split_rule):
        assert rules.merge_posts_rule().is_expansive
        assert not rules.merge_posts_rule().is_restrictive
        assert rules.drop_likes_rule().is_restrictive
        assert not split_rule.is_expansive

    def test_map_must_preserve_structure(self):
        lhs = PropertyGraph.build([('a', {}), ('b', {})])
        p = PropertyGraph.build([('a', {}), ('b', {})], [('ab', 'a', 'b')])
        with pytest.raises(InvalidRuleError):
            Rule.restrictive(lhs, p, {'a': 'a', 'b': 'b'})

    def test_map_must_keep_values(self):
        lhs = PropertyGraph.build([('a', {'k': [1]})])
        p = PropertyGraph.build([('a', {'k': [2]})])
        with pytest.raises(InvalidRuleError):
            Rule.restrictive(lhs, p, {'a': 'a'})

    def test_from_json(self):
        rule = rules.merge_reply_rule()
        again = Rule.from_json(rule.to_json())
        assert again.name == 'merge reply'
        assert again.r_map.node_map == rule.r_map.node_map
        with pytest.raises(InvalidRuleError):
            Rule.from_json({'lhs': {}})


class TestActions:
    def test_expansive_plan(self):
        plan = derive_actions(rules.merge_posts_rule())
        assert plan.merges == [['b', 'c']]
        assert plan.node_adds == ['d']
        assert plan.edge_adds == ['rd', 'rdbc']
        assert plan.node_deletes == []
        assert plan.node_delta() == 0

    def test_restrictive_plan(self, split_rule):
        plan = derive_actions(split_rule)
        assert plan.clones == [('x', 1)]
        assert plan.key_prunes == [
            PropertyEdit('x1', 'j'), PropertyEdit('x2', 'k'),
        ]
        assert plan.prop_deletes == []
        assert plan.node_delta() == 1

    def test_edge_delete(self):
        plan = derive_actions(rules.drop_likes_rule())
        assert plan.edge_deletes == ['like']
        assert not plan.is_empty()


class TestMatching:
    def test_reply_matchings(self, instance):
        found = find_matchings(rules.merge_reply_rule(), instance)
        assert len(found) == instance.number_of_edges()
        assert found[0].node_map == {'a': 'n2', 'b': 'n1'}

    def test_posts_matchings(self, instance):
        found = find_matchings(rules.merge_posts_rule(), instance)
        assert len(found) == 20
        assert rules.MERGE_POSTS_MATCHING in [m.node_map for m in found]

    def test_values_restrict_matchings(self, instance):
        lhs = PropertyGraph.build([('m', {'browserUsed': ['Safari']})])
        rule = Rule.restrictive(lhs, lhs.copy(), {'m': 'm'})
        found = find_matchings(rule, instance)
        assert [m.node_map['m'] for m in found] == ['n6', 'n7']

    def test_invalid_matchings(self, instance):
        rule = rules.merge_reply_rule()
        assert matching_violations(at(rule, instance,
                                      rules.MERGE_REPLY_MATCHING)) == []
        missing_edge = at(rule, instance, {'a': 'n4', 'b': 'n2'})
        assert [v.condition for v in matching_violations(missing_edge)] \
            == ['structure']
        with pytest.raises(InvalidMatchingError):
            apply_rule(instance, rule, missing_edge)


class TestApply:
    def test_merge_reply(self, instance):
        rule = rules.merge_reply_rule()
        res = apply_rule(instance, rule,
                         at(rule, instance, rules.MERGE_REPLY_MATCHING))
        assert res.graph.nodes() == ['n1', 'n2', 'n3', 'n4', 'n5', 'n6']
        assert res.graph.values('n4', 'browserUsed') == as_values(
            ['Firefox', 'Safari']
        )
        assert is_isomorphic(res.graph, snb.merged_instance())
        assert res.fwd_map('n7') == 'n4'
        assert res.matching.node_map == {'ab': 'n4'}
        assert instance.has_node('n7')

    def test_merge_posts(self, instance):
        rule = rules.merge_posts_rule()
        res = apply_rule(instance, rule,
                         at(rule, instance, rules.MERGE_POSTS_MATCHING))
        g = res.graph
        assert g.number_of_nodes() == 7
        assert g.number_of_edges() == 11
        assert res.matching.node_map == {'a': 'n3', 'bc': 'n2', 'd': 'd'}
        assert g.values('d', 'creationDate') == as_values(
            [datetime.date(2018, 11, 26)]
        )
        assert g.values('n2', 'creationDate') == as_values(
            [datetime.date(2010, 10, 16), datetime.date(2010, 10, 30)]
        )
        assert g.edge_between('d', 'n2') is not None
        assert g.edge_between('n2', 'n3') in ('e5', 'e6')

    def test_drop_like(self, instance):
        rule = rules.drop_likes_rule()
        res = apply_rule(instance, rule,
                         at(rule, instance, {'p': 'n1', 'm': 'n2'}))
        assert res.graph.edge_between('n1', 'n2') is None
        assert res.graph.number_of_edges() == 10
        assert res.back_map.node_map == {n: n for n in instance.nodes()}

    def test_clone_and_prune(self, split_rule):
        g = split_host()
        m = at(split_rule, g, {'x': 'h', 'y': 't'})
        res = apply_restrictive(g, split_rule, m)
        h = res.graph
        assert h.nodes() == ['h', 'h_clone1', 't', 'u']
        assert h.props('h') == {'k': as_values([1, 5]), 'o': as_values([9])}
        assert h.props('h_clone1') == {
            'j': as_values([2]), 'o': as_values([9])
        }
        assert h.edge_between('h', 't') == 'ht'
        assert h.edge_between('h_clone1', 't') is None
        assert h.edge_between('h_clone1', 'u') is not None
        assert res.back_map('h_clone1') == 'h'
        assert res.matching.node_map == {'x1': 'h', 'x2': 'h_clone1',
                                         'y': 't'}

    def test_phase_must_match_class(self, instance):
        rule = rules.merge_posts_rule()
        m = at(rule, instance, rules.MERGE_POSTS_MATCHING)
        with pytest.raises(InvalidRuleClassError):
            apply_restrictive(instance, rule, m)
        drop = rules.drop_likes_rule()
        with pytest.raises(InvalidRuleClassError):
            apply_expansive(instance, drop,
                            at(drop, instance, {'p': 'n1', 'm': 'n2'}))


class TestSchemaSquare:
    def test_merge_inside_one_type(self, schema):
        s, _ = schema
        rule = rules.merge_reply_rule()
        h_l = Homomorphism(rule.lhs, s, {'a': 'Comment', 'b': 'Comment'})
        h_r = Homomorphism(rule.rhs, s, {'ab': 'Comment'})
        assert rule_respects_schema(rule, s, h_l, h_r)

    def test_merge_across_types(self, schema):
        s, _ = schema
        rule = rules.merge_reply_rule()
        h_l = Homomorphism(rule.lhs, s, {'a': 'Post', 'b': 'Comment'})
        h_r = Homomorphism(rule.rhs, s, {'ab': 'Comment'})
        assert not rule_respects_schema(rule, s, h_l, h_r)
        assert not rule_respects_schema(
            rule, s, h_l, Homomorphism(rule.rhs, s, {})
        )
