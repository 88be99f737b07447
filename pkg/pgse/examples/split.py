# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Fine-graining example module."""
from pgse.examples import rules, snb
from pgse.smo import apply_smo


def get_graphs(args=dict()):
    """Shows messages being split into posts and comments.

    Args:
        args: Optional; Arguments dictionary. Currently valid keys:

            * steps: Number of steps to run, all of them by default.
    """
    state = snb.fine_graining_state()
    steps = rules.fine_graining_steps()
    for smo in steps[:args.get('steps', len(steps))]:
        state = apply_smo(state, smo)
    return [
        ('schema', state.schema, state.index, None),
        ('instance', state.instance, state.index, state.hom),
    ]
