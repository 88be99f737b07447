# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Social network schemas and instances used throughout the tests."""
from pathlib import Path
import datetime

from pgse.ddl import GraphType, TypeIndex, graph_type_to_schema, parse_ddl
from pgse.graph import PropertyGraph, ValueMode
from pgse.hom import Homomorphism
from pgse.propagation import enrich_schema
from pgse.smo import AuditTrail, SchemaState

SNB_EXTRACT_DDL = """\
CREATE GRAPH TYPE snb (
  // element types
  Person { firstName : STRING, lastName : STRING },
  Message { creationDate : TIMESTAMP, browserUsed : STRING },
  Comment <: Message {},
  Post <: Message { imageFile : STRING? },
  REPLY_OF {},
  // node types
  (Person), (Post), (Comment),
  // edge types
  (Person)-[KNOWS]->(Person),
  (Person)-[LIKES]->(Message),
  (Message)-[HAS_CREATOR]->(Person),
  (Comment)-[REPLY_OF]->(Message)
)
"""
"""Social network extract with posts and comments as message subtypes."""

MERGED_DDL = """\
CREATE GRAPH TYPE snb (
  Person { firstName : STRING, lastName : STRING },
  Message {
    creationDate : TIMESTAMP, browserUsed : STRING, imageFile : STRING?
  },
  (Person), (Message),
  (Person)-[KNOWS]->(Person),
  (Person)-[LIKES]->(Message),
  (Message)-[HAS_CREATOR]->(Person),
  (Message)-[REPLY_OF]->(Message)
)
"""
"""The extract after posts and comments were merged into messages."""

PERSON = ['firstName', 'lastName']
MESSAGE = ['creationDate', 'browserUsed']


def full_ddl() -> str:
    """Returns the DDL of the full social network benchmark schema."""
    return Path(__file__).with_name('snb_full.ddl').read_text()


def extract_type() -> GraphType:
    """Parses :data:`SNB_EXTRACT_DDL`."""
    return parse_ddl(SNB_EXTRACT_DDL)


def schema(mode: ValueMode = ValueMode.SYMBOLIC):
    """Returns the extract's schema graph and its labels.

    Nodes are ``Person``, ``Post`` and ``Comment``; there are seven
    edges.
    """
    return graph_type_to_schema(extract_type(), mode)


def _date(s: str) -> datetime.date:
    return datetime.date.fromisoformat(s)


def _message(nid, date, browser, image=None, extra=None):
    props = {'creationDate': [_date(date)], 'browserUsed': [browser]}
    if image is not None:
        props['imageFile'] = [image]
    props.update(extra or {})
    return (nid, props, MESSAGE)


PEOPLE = [
    ('n1', {'firstName': ['Bryn'], 'lastName': ['Davies']}, PERSON),
    ('n3', {'firstName': ['Jose'], 'lastName': ['Alonso']}, PERSON),
    ('n5', {'firstName': ['Jane'], 'lastName': ['Murray']}, PERSON),
]


def instance() -> PropertyGraph:
    """Returns the seven-node instance of the extract.

    ``n1``, ``n3`` and ``n5`` are people, ``n2`` and ``n4`` posts,
    ``n6`` and ``n7`` comments.
    """
    return PropertyGraph.build(
        PEOPLE + [
            _message('n2', '2010-10-16', 'Firefox', 'photo33711.jpg'),
            _message('n4', '2010-10-30', 'Firefox'),
            _message('n6', '2010-10-30', 'Safari'),
            _message('n7', '2010-10-30', 'Safari'),
        ],
        [
            ('e1', 'n1', 'n2'),
            ('e2', 'n1', 'n3'),
            ('e3', 'n3', 'n5'),
            ('e4', 'n1', 'n4'),
            ('e5', 'n2', 'n3'),
            ('e6', 'n4', 'n3'),
            ('e7', 'n6', 'n3'),
            ('e8', 'n5', 'n4'),
            ('e9', 'n6', 'n7'),
            ('e10', 'n7', 'n5'),
            ('e11', 'n7', 'n4'),
        ]
    )


INSTANCE_TYPES = {
    'n1': 'Person', 'n3': 'Person', 'n5': 'Person',
    'n2': 'Post', 'n4': 'Post',
    'n6': 'Comment', 'n7': 'Comment',
}


def typing(
        g: PropertyGraph = None,
        s: PropertyGraph = None,
        index: TypeIndex = None
) -> Homomorphism:
    """Types :func:`instance` by :func:`schema`."""
    if s is None:
        s, index = schema()
    g = g if g is not None else instance()
    index = index or TypeIndex()
    return Homomorphism(g, s, {
        n: index.resolve(t, s) for n, t in INSTANCE_TYPES.items()
    })


def merged_instance() -> PropertyGraph:
    """Returns the instance after merging ``n4`` and ``n7`` into ``n8``."""
    n8 = ('n8', {
        'creationDate': [_date('2010-10-30')],
        'browserUsed': ['Firefox', 'Safari'],
    }, MESSAGE)
    return PropertyGraph.build(
        PEOPLE + [
            _message('n2', '2010-10-16', 'Firefox', 'photo33711.jpg'),
            _message('n6', '2010-10-30', 'Safari'),
            n8,
        ],
        [
            ('e1', 'n1', 'n2'),
            ('e2', 'n1', 'n3'),
            ('e3', 'n3', 'n5'),
            ('e4', 'n1', 'n8'),
            ('e5', 'n2', 'n3'),
            ('e6', 'n8', 'n3'),
            ('e7', 'n6', 'n3'),
            ('e8', 'n5', 'n8'),
            ('e9', 'n6', 'n8'),
            ('e10', 'n8', 'n5'),
            ('e11', 'n8', 'n8'),
        ]
    )


MERGED_TYPES = {
    'n1': 'Person', 'n3': 'Person', 'n5': 'Person',
    'n2': 'Message', 'n6': 'Message', 'n8': 'Message',
}


def fine_graining_state() -> SchemaState:
    """Returns the merged schema filled from the merged instance.

    The state is extensional: every schema value set holds exactly the
    values the instance uses. Its trail starts at this schema.
    """
    gt = parse_ddl(MERGED_DDL)
    s, index = graph_type_to_schema(gt, ValueMode.EXTENSIONAL)
    g = merged_instance()
    h = Homomorphism(g, s, {
        n: index.resolve(t, s) for n, t in MERGED_TYPES.items()
    })
    filled = enrich_schema(s, h, ValueMode.EXTENSIONAL)
    return SchemaState(
        filled.graph, index, g, filled.hom,
        AuditTrail(filled.graph, index, gt), ValueMode.EXTENSIONAL
    )


def split_instance() -> PropertyGraph:
    """Returns the instance after splitting messages by their type.

    ``n2`` carries ``type: post`` and stays a post, ``n6`` carries
    ``type: comment`` and stays a comment, and the untyped ``n8`` is
    cloned: ``n8`` as a post and ``n9`` as a comment.
    """
    n8 = {
        'creationDate': [_date('2010-10-30')],
        'browserUsed': ['Firefox', 'Safari'],
    }
    return PropertyGraph.build(
        PEOPLE + [
            _message('n2', '2010-10-16', 'Firefox', 'photo33711.jpg',
                     {'type': ['post']}),
            _message('n6', '2010-10-30', 'Safari', None,
                     {'type': ['comment']}),
            ('n8', n8, MESSAGE),
            ('n9', n8, MESSAGE),
        ],
        [
            ('e1', 'n1', 'n2'),
            ('e2', 'n1', 'n3'),
            ('e3', 'n3', 'n5'),
            ('e4', 'n1', 'n8'),
            ('e5', 'n1', 'n9'),
            ('e6', 'n2', 'n3'),
            ('e7', 'n8', 'n3'),
            ('e8', 'n9', 'n3'),
            ('e9', 'n6', 'n3'),
            ('e10', 'n5', 'n8'),
            ('e11', 'n5', 'n9'),
            ('e12', 'n6', 'n8'),
            ('e13', 'n6', 'n9'),
            ('e14', 'n8', 'n5'),
            ('e15', 'n9', 'n5'),
            ('e16', 'n9', 'n8'),
            ('e17', 'n9', 'n9'),
        ]
    )
