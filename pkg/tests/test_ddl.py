# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
import json

import pytest

from pgse.common import (
    CyclicInheritanceError,
    DdlSyntaxError,
    DuplicateLabelError,
    DuplicatePropertyKeyError,
    EdgeTypeCollisionError,
    UnknownLabelError,
)
from pgse.ddl import (
    DataType,
    GraphType,
    TypeIndex,
    exposed_sets,
    graph_type_to_schema,
    infer_data_type,
    parse_ddl,
    print_ddl,
    schema_to_graph_type,
)
from pgse.examples import snb
from pgse.graph import (
    ValueMode,
    as_values,
    graph_from_json,
    is_isomorphic,
    type_token,
)

EXTRACT_EDGES = sorted([
    ('KNOWS', 'Person', 'Person'),
    ('LIKES', 'Person', 'Post'),
    ('LIKES', 'Person', 'Comment'),
    ('HAS_CREATOR', 'Post', 'Person'),
    ('HAS_CREATOR', 'Comment', 'Person'),
    ('REPLY_OF', 'Comment', 'Post'),
    ('REPLY_OF', 'Comment', 'Comment'),
])


def edge_multiset(schema, index):
    return sorted(
        (index.label(e), *schema.endpoints(e)) for e in schema.edges()
    )


class TestParse:
    def test_extract(self, extract_ddl):
        gt = parse_ddl(extract_ddl)
        assert gt.name == 'snb'
        assert gt.labels() == [
            'Comment', 'HAS_CREATOR', 'KNOWS', 'LIKES', 'Message', 'Person',
            'Post', 'REPLY_OF',
        ]
        assert len(gt.node_types) == 3
        assert len(gt.edge_types) == 4
        assert gt.element('Post').extends == frozenset(['Message'])
        assert gt == snb.extract_type()

    def test_full_counts(self):
        gt = parse_ddl(snb.full_ddl())
        assert len(gt.element_types) == 29
        assert len(gt.node_types) == 11
        assert len(gt.edge_types) == 20

    def test_cardinality_is_kept(self):
        gt = parse_ddl(snb.full_ddl())
        cards = [et for et in gt.edge_types if et.cardinality is not None]
        assert [(et.source, et.element, et.target, et.cardinality)
                for et in cards] == [('City', 'IS_PART_OF', 'Country', 1)]

    def test_exposed_sets(self, extract_ddl):
        gt = parse_ddl(extract_ddl)
        post = exposed_sets(gt, 'Post')
        assert post.labels == frozenset(['Post', 'Message'])
        assert {p.key for p in post.properties} == {
            'creationDate', 'browserUsed', 'imageFile'
        }
        assert {p.key for p in post.mandatory} == {
            'creationDate', 'browserUsed'
        }

    def test_multiple_inheritance(self):
        gt = parse_ddl(
            'CREATE GRAPH TYPE t (A { a : INTEGER }, B { b : DATE }, '
            'C <: A & B {}, (C))'
        )
        assert {p.key for p in exposed_sets(gt, 'C').properties} == {
            'a', 'b'
        }

    def test_syntax_error_position(self):
        with pytest.raises(DdlSyntaxError) as info:
            parse_ddl('CREATE GRAPH TYPE t (\n  A { a : FLOAT }\n)')
        assert info.value.line == 2
        assert info.value.to_json()['error'] == 'syntax-error'

    def test_duplicate_label(self):
        with pytest.raises(DuplicateLabelError):
            parse_ddl('CREATE GRAPH TYPE t (A {}, A {})')

    def test_unknown_label(self):
        with pytest.raises(UnknownLabelError) as info:
            parse_ddl('CREATE GRAPH TYPE t (A <: B {}, (A))')
        assert info.value.diagnostics[0].label == 'B'

    def test_cyclic_inheritance(self):
        with pytest.raises(CyclicInheritanceError):
            parse_ddl('CREATE GRAPH TYPE t (A <: B {}, B <: A {})')

    def test_duplicate_exposed_key(self):
        with pytest.raises(DuplicatePropertyKeyError):
            parse_ddl(
                'CREATE GRAPH TYPE t (A { k : STRING }, '
                'B <: A { k : INTEGER })'
            )

    def test_print_parses_back(self, extract_ddl):
        gt = parse_ddl(extract_ddl)
        assert parse_ddl(print_ddl(gt)) == gt


class TestSchemaGraph:
    def test_extract_shape(self, schema):
        s, index = schema
        assert s.nodes() == ['Comment', 'Person', 'Post']
        assert edge_multiset(s, index) == EXTRACT_EDGES

    def test_golden_schema(self, schema, data_dir):
        s, _ = schema
        golden = graph_from_json(
            json.loads((data_dir / 'extract_schema.json').read_text())
        )
        assert is_isomorphic(s, golden)

    def test_id_seed_starts_generated_ids(self):
        s, _ = graph_type_to_schema(snb.extract_type(), id_seed=5)
        assert s.nodes() == ['Comment', 'Person', 'Post']
        assert s.fresh_id('e') == 'e5'

    def test_symbolic_dictionaries(self, schema):
        s, _ = schema
        assert s.values('Post', 'creationDate') == frozenset(
            [type_token('TIMESTAMP')]
        )
        assert s.mandatory('Post') == frozenset(
            ['creationDate', 'browserUsed']
        )
        assert s.has_key('Post', 'imageFile')
        assert not s.has_key('Comment', 'imageFile')

    def test_extensional_dictionaries(self):
        s, _ = snb.schema(ValueMode.EXTENSIONAL)
        assert s.values('Post', 'creationDate') == frozenset()
        assert s.is_mandatory('Post', 'creationDate')

    def test_collisions(self):
        gt = parse_ddl(snb.full_ddl())
        with pytest.raises(EdgeTypeCollisionError) as info:
            graph_type_to_schema(gt)
        assert all(d.rule == 'edge-type-collision'
                   for d in info.value.diagnostics)
        s, index = graph_type_to_schema(gt, force=True)
        assert s.number_of_nodes() == 11
        assert index.label(s.edge_between('Forum', 'Person')) == \
            'HAS_MODERATOR'


class TestReadBack:
    def test_infer_data_type(self):
        assert infer_data_type([type_token('DATE')]) is DataType.DATE
        assert infer_data_type(as_values([3])) is DataType.INTEGER
        assert infer_data_type([]) is DataType.STRING

    def test_flat_read_back(self, schema):
        s, index = schema
        gt = schema_to_graph_type(s, index, name='snb')
        assert isinstance(gt, GraphType)
        assert sorted(nt.element for nt in gt.node_types) == [
            'Comment', 'Person', 'Post'
        ]
        assert len(gt.edge_types) == 7
        post = gt.element('Post')
        assert post.extends == frozenset()
        assert {(p.key, p.data_type, p.optional)
                for p in post.own_properties} == {
            ('creationDate', DataType.TIMESTAMP, False),
            ('browserUsed', DataType.STRING, False),
            ('imageFile', DataType.STRING, True),
        }
        again, again_index = graph_type_to_schema(gt)
        assert is_isomorphic(again, s)

    def test_labels_default_to_ids(self, schema):
        s, _ = schema
        gt = schema_to_graph_type(s, TypeIndex())
        assert gt.name == 'schema'
        assert {et.element for et in gt.edge_types} == set(s.edges())
