# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Fine-graining messages into posts and comments, end to end."""
import pytest

from pgse.common import UnsupportedHistoryError
from pgse.ddl import parse_ddl, print_ddl, schema_to_graph_type
from pgse.examples import rules, snb
from pgse.graph import as_values, is_isomorphic
from pgse.smo import SchemaManipulation, SchemaState, SmoKind, apply_smo


@pytest.fixture
def fine_grained():
    state = snb.fine_graining_state()
    for op in rules.fine_graining_steps():
        state = apply_smo(state, op)
    return state


def edge_triples(gt):
    return {(et.source, et.element, et.target) for et in gt.edge_types}


def test_tags_reach_the_schema():
    state = snb.fine_graining_state()
    for op in rules.fine_graining_steps()[:2]:
        state = apply_smo(state, op)
    assert state.schema.values('Message', 'type') == as_values(
        ['comment', 'post']
    )
    assert len(state.trail) == 2


def test_schema_is_split(fine_grained):
    s, index = fine_grained.schema, fine_grained.index
    assert sorted(index.label(n) for n in s.nodes()) == [
        'Comment', 'Person', 'Post'
    ]
    assert s.number_of_edges() == 7
    comment = index.resolve('Comment', s)
    post = index.resolve('Post', s)
    assert not s.has_key(comment, 'imageFile')
    assert s.values(post, 'type') == as_values(['post'])
    assert s.values(comment, 'type') == as_values(['comment'])
    assert s.edge_between(comment, comment) is not None
    assert s.edge_between(comment, post) is not None
    assert s.edge_between(post, comment) is None


def test_instance_is_split(fine_grained):
    g, h, index = fine_grained.instance, fine_grained.hom, fine_grained.index
    assert g.number_of_nodes() == 7
    assert g.number_of_edges() == 17
    assert is_isomorphic(g, snb.split_instance(), 'keys')
    assert index.label(h('n2')) == 'Post'
    assert index.label(h('n6')) == 'Comment'
    assert index.label(h('n8')) == 'Comment'
    assert index.label(h('n8_clone1')) == 'Post'
    assert g.values('n8_clone1', 'browserUsed') == as_values(
        ['Firefox', 'Safari']
    )
    assert fine_grained.violations() == []


def test_read_back_as_inheritance(fine_grained):
    gt = schema_to_graph_type(
        fine_grained.schema, fine_grained.index, fine_grained.trail
    )
    assert gt.name == 'snb'
    assert {
        lb: sorted(gt.element(lb).extends)
        for lb in rules.FINE_GRAINED_EXPECTED
    } == rules.FINE_GRAINED_EXPECTED
    assert edge_triples(gt) == edge_triples(snb.extract_type())
    message = gt.element('Message')
    assert {p.key for p in message.own_properties} == {
        'creationDate', 'browserUsed', 'type'
    }
    assert parse_ddl(print_ddl(gt)) == gt


def test_trail_replays(fine_grained):
    graph, index = fine_grained.trail.replay()
    assert graph == fine_grained.schema
    assert index.to_json() == fine_grained.index.to_json()


def test_merging_history_is_not_read_back():
    state = SchemaState.from_graph_type(snb.extract_type())
    state = apply_smo(state, SchemaManipulation(
        SmoKind.UNION, ['Post', 'Comment'], {'into': 'Message'}
    ))
    with pytest.raises(UnsupportedHistoryError):
        schema_to_graph_type(state.schema, state.index, state.trail)
    flat = schema_to_graph_type(state.schema, state.index)
    assert [nt.element for nt in flat.node_types] == ['Message', 'Person']
