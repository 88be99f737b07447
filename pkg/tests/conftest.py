# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Shared fixtures."""
from pathlib import Path

import pytest

from pgse.examples import snb
from pgse.graph import PropertyGraph, ValueMode
from pgse.rewrite import Rule

DATA = Path(__file__).with_name('data')


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def extract_ddl() -> str:
    return (DATA / 'snb_extract.ddl').read_text()


@pytest.fixture
def schema():
    """Schema graph of the extract and its labels."""
    return snb.schema()


@pytest.fixture
def instance():
    return snb.instance()


@pytest.fixture
def typing(instance, schema):
    s, index = schema
    return snb.typing(instance, s, index)


@pytest.fixture
def merged_state():
    """Extensional merged schema filled from the merged instance."""
    return snb.fine_graining_state()


@pytest.fixture(params=list(ValueMode), ids=lambda m: m.value)
def mode(request) -> ValueMode:
    return request.param


@pytest.fixture
def split_rule() -> Rule:
    """Splits one node in two, each copy keeping one key."""
    lhs = PropertyGraph.build(
        [('x', {'k': [1], 'j': [2]}), ('y', {})], [('xy', 'x', 'y')]
    )
    p = PropertyGraph.build(
        [('x1', {'k': [1]}), ('x2', {'j': [2]}), ('y', {})],
        [('x1y', 'x1', 'y')]
    )
    return Rule.restrictive(lhs, p, {'x1': 'x', 'x2': 'x', 'y': 'y'},
                            'split')
