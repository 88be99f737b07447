# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Merge example module."""
from pgse.examples import rules, snb
from pgse.hom import Homomorphism
from pgse.rewrite import apply_rule

RULES = {
    'reply': (rules.merge_reply_rule, rules.MERGE_REPLY_MATCHING),
    'posts': (rules.merge_posts_rule, rules.MERGE_POSTS_MATCHING),
}


def get_graphs(args=dict()):
    """Shows the example instance before and after a merging rule.

    Args:
        args: Optional; Arguments dictionary. Currently valid keys:

            * rule: ``reply`` (default) or ``posts``.
    """
    make_rule, matching = RULES[args.get('rule', 'reply')]
    rule = make_rule()
    g = snb.instance()
    res = apply_rule(g, rule, Homomorphism(rule.lhs, g, dict(matching)))
    schema, index = snb.schema()
    return [
        ('instance', g, None, snb.typing(g, schema, index)),
        (rule.name, res.graph, None, None),
    ]
