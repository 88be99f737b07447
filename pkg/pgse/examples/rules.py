# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Rules and schema manipulations over the social network examples."""
from typing import Dict, List
import datetime

from pgse.graph import PropertyGraph
from pgse.propagation import PropagationRelation
from pgse.rewrite import Rule
from pgse.smo import Direction, SchemaManipulation, SmoKind


def merge_posts_rule() -> Rule:
    """Merges two posts of one creator and adds a message replying to both.

    ``a`` is the creator, ``b`` and ``c`` the posts; the new node ``d``
    has a creation date and points to the creator and to the merged post.
    """
    p = PropertyGraph.build(
        [('a', {}), ('b', {}), ('c', {})],
        [('pb', 'b', 'a'), ('pc', 'c', 'a')]
    )
    rhs = PropertyGraph.build(
        [
            ('a', {}), ('bc', {}),
            ('d', {'creationDate': [datetime.date(2018, 11, 26)]}),
        ],
        [('rbc', 'bc', 'a'), ('rd', 'd', 'a'), ('rdbc', 'd', 'bc')]
    )
    return Rule.expansive(p, rhs, {'a': 'a', 'b': 'bc', 'c': 'bc'},
                          'merge posts')


MERGE_POSTS_MATCHING = {'a': 'n3', 'b': 'n2', 'c': 'n4'}


def merge_reply_rule() -> Rule:
    """Merges a message with the message it replies to."""
    p = PropertyGraph.build([('a', {}), ('b', {})], [('ba', 'b', 'a')])
    rhs = PropertyGraph.build([('ab', {})], [('loop', 'ab', 'ab')])
    return Rule.expansive(p, rhs, {'a': 'ab', 'b': 'ab'}, 'merge reply')


MERGE_REPLY_MATCHING = {'a': 'n4', 'b': 'n7'}


def drop_likes_rule() -> Rule:
    """Deletes a like edge, keeping both of its endpoints."""
    lhs = PropertyGraph.build(
        [('p', {}), ('m', {})], [('like', 'p', 'm')]
    )
    p = PropertyGraph.build([('p', {}), ('m', {})])
    return Rule.restrictive(lhs, p, {'p': 'p', 'm': 'm'}, 'drop like')


def tag_message(node: str, tag: str) -> SchemaManipulation:
    """Adds a ``type`` key to one instance message."""
    return SchemaManipulation(
        SmoKind.CHANGE, node, {'add': {'type': tag}},
        Direction.DATA_TO_SCHEMA
    )


def split_messages() -> SchemaManipulation:
    """Splits messages into posts and comments by their ``type`` key.

    Only comments keep the reply edge, and posts keep the image file.
    """
    return SchemaManipulation(
        SmoKind.SPLIT, 'Message',
        {
            'into': ['Post', 'Comment'],
            'select': {
                'Post': {'type': ['post']},
                'Comment': {'type': ['comment']},
            },
            'drop': {'Comment': ['imageFile']},
            'loops': [['Comment', 'Comment'], ['Comment', 'Post']],
        },
        Direction.SCHEMA_TO_DATA,
        PropagationRelation(keep={'n2': 'Post', 'n6': 'Comment'}),
    )


def fine_graining_steps() -> List[SchemaManipulation]:
    """Tags two messages, then splits messages by their tags."""
    return [
        tag_message('n2', 'post'),
        tag_message('n6', 'comment'),
        split_messages(),
    ]


FINE_GRAINED_EXPECTED: Dict[str, List[str]] = {
    'Post': ['Message'],
    'Comment': ['Message'],
}
"""Supertypes read back after :func:`fine_graining_steps`."""
