# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
import argparse
import json
from pathlib import Path

import pytest

from pgse.__main__ import (
    EXIT_INPUT_ERROR,
    EXIT_OK,
    EXIT_VIOLATIONS,
    CommandError,
    Workspace,
    main,
    seed_from_env,
)
from pgse.examples import rules, snb
from pgse.graph import graph_to_json


@pytest.fixture
def files(tmp_path):
    """Writes the extract, its instance and a few rules to disk."""
    s, index = snb.schema()
    g = snb.instance()
    docs = {
        'schema': graph_to_json(s),
        'index': index.to_json(),
        'instance': graph_to_json(g),
        'hom': snb.typing(g, s, index).to_json(),
        'merge_posts': rules.merge_posts_rule().to_json(),
        'merge_reply': rules.merge_reply_rule().to_json(),
        'posts_matching': {'node_map': rules.MERGE_POSTS_MATCHING},
        'reply_matching': {'node_map': rules.MERGE_REPLY_MATCHING},
        'forum': {
            'kind': 'create', 'target': 'Forum',
            'properties': {'title': 'STRING'}, 'mandatory': ['title'],
        },
    }
    res = {}
    for name, doc in docs.items():
        path = tmp_path / f'{name}.json'
        path.write_text(json.dumps(doc))
        res[name] = str(path)
    return res


def run(capsys, argv):
    status = main(argv)
    return status, capsys.readouterr().out


def run_json(capsys, argv):
    status, out = run(capsys, argv)
    return status, json.loads(out)


class TestDdl:
    def test_check(self, capsys, data_dir):
        status, res = run_json(
            capsys, ['ddl', 'check', str(data_dir / 'snb_extract.ddl')]
        )
        assert status == EXIT_OK
        assert res['name'] == 'snb'
        assert res['node_types'] == 3
        assert res['diagnostics'] == []

    def test_syntax_error(self, capsys, tmp_path):
        path = tmp_path / 'bad.ddl'
        path.write_text('CREATE GRAPH TYPE g (\n  Person {\n)')
        status, res = run_json(capsys, ['ddl', 'check', str(path)])
        assert status == EXIT_INPUT_ERROR
        assert res['error'] == 'syntax-error'
        assert res['file'] == str(path)
        assert res['line'] == 3

    def test_to_graph_and_back(self, capsys, data_dir, tmp_path):
        status, res = run_json(
            capsys, ['ddl', 'to-graph', str(data_dir / 'snb_extract.ddl')]
        )
        assert status == EXIT_OK
        assert sorted(n['id'] for n in res['schema']['nodes']) == [
            'Comment', 'Person', 'Post'
        ]
        for name in ('schema', 'index'):
            (tmp_path / f'{name}.json').write_text(json.dumps(res[name]))
        status, text = run(capsys, [
            'ddl', 'from-graph', '--schema', str(tmp_path / 'schema.json'),
            '--index', str(tmp_path / 'index.json'), '--name', 'extract',
        ])
        assert status == EXIT_OK
        assert text.startswith('CREATE GRAPH TYPE extract (')
        assert '(Person)-[KNOWS]->(Person)' in text


class TestValidate:
    def test_valid(self, capsys, files):
        status, res = run_json(capsys, [
            'validate', '--schema', files['schema'],
            '--instance', files['instance'], '--hom', files['hom'],
        ])
        assert status == EXIT_OK
        assert res['violations'] == []

    def test_inferred(self, capsys, files):
        status, res = run_json(capsys, [
            'validate', '--schema', files['schema'],
            '--instance', files['instance'], '--infer',
        ])
        assert status == EXIT_OK
        assert res['hom']['node_map']['n1'] == 'Person'

    def test_violations(self, capsys, files, tmp_path):
        doc = json.loads(Path(files['instance']).read_text())
        person = next(n for n in doc['nodes'] if n['id'] == 'n1')
        del person['props']['lastName']
        person['mandatory'] = ['firstName']
        path = tmp_path / 'broken.json'
        path.write_text(json.dumps(doc))
        status, res = run_json(capsys, [
            'validate', '--schema', files['schema'],
            '--instance', str(path), '--hom', files['hom'],
        ])
        assert status == EXIT_VIOLATIONS
        assert res['violations'] == [{
            'element': 'n1', 'condition': 'iii', 'key': 'lastName',
            'detail': res['violations'][0]['detail'],
        }]

    def test_missing_hom(self, capsys, files):
        status, res = run_json(capsys, [
            'validate', '--schema', files['schema'],
            '--instance', files['instance'],
        ])
        assert status == EXIT_INPUT_ERROR
        assert res['error'] == 'usage-error'

    def test_missing_file(self, capsys, files, tmp_path):
        missing = str(tmp_path / 'nope.json')
        status, res = run_json(capsys, [
            'validate', '--schema', missing,
            '--instance', files['instance'], '--hom', files['hom'],
        ])
        assert status == EXIT_INPUT_ERROR
        assert res['error'] == 'io-error'
        assert res['file'] == missing


class TestRewrite:
    def test_match(self, capsys, files):
        status, res = run_json(capsys, [
            'match', '--rule', files['merge_reply'],
            '--graph', files['instance'],
        ])
        assert status == EXIT_OK
        assert len(res['matchings']) == 11

    def test_rewrite(self, capsys, files):
        status, res = run_json(capsys, [
            'rewrite', '--rule', files['merge_reply'],
            '--graph', files['instance'],
            '--matching', files['reply_matching'],
        ])
        assert status == EXIT_OK
        assert len(res['graph']['nodes']) == 6
        assert res['fwd_map']['node_map']['n7'] == 'n4'

    def test_to_schema(self, capsys, files, monkeypatch):
        monkeypatch.setenv('PGSE_SEED', '5')
        status, res = run_json(capsys, [
            'propagate', 'to-schema', '--schema', files['schema'],
            '--instance', files['instance'], '--hom', files['hom'],
            '--rule', files['merge_posts'],
            '--matching', files['posts_matching'],
        ])
        assert status == EXIT_OK
        assert res['hom']['node_map']['d'] == 'type5'
        assert len(res['schema']['nodes']) == 4

    def test_bad_seed(self, capsys, files, monkeypatch):
        monkeypatch.setenv('PGSE_SEED', 'five')
        status, res = run_json(capsys, [
            'match', '--rule', files['merge_reply'],
            '--graph', files['instance'],
        ])
        assert status == EXIT_INPUT_ERROR
        assert res['error'] == 'usage-error'


class TestSmo:
    def test_apply_and_replay(self, capsys, files, data_dir, tmp_path):
        out = tmp_path / 'state.json'
        status, text = run(capsys, [
            'smo', 'apply', files['forum'],
            '--ddl', str(data_dir / 'snb_extract.ddl'), '--out', str(out),
        ])
        assert status == EXIT_OK
        assert text == ''
        state = json.loads(out.read_text())
        assert state['index']['nodes']['Forum'] == 'Forum'
        assert state['violations'] == []
        trail = tmp_path / 'trail.json'
        trail.write_text(json.dumps(state['trail']))
        status, ddl = run(capsys, [
            'trail', 'replay', '--trail', str(trail), '--ddl',
        ])
        assert status == EXIT_OK
        assert 'Forum { title : STRING }' in ddl

    def test_state_with_bad_trail(self, capsys, files, tmp_path):
        state = tmp_path / 'state.json'
        state.write_text(json.dumps({
            'schema': json.loads(Path(files['schema']).read_text()),
            'trail': {},
        }))
        status, res = run_json(capsys, [
            'smo', 'apply', files['forum'], '--state', str(state),
        ])
        assert status == EXIT_INPUT_ERROR
        assert res['error'] == 'invalid-payload'
        assert res['file'] == str(state)

    def test_trail_with_bad_entry(self, capsys, files, tmp_path):
        trail = tmp_path / 'trail.json'
        trail.write_text(json.dumps({
            'origin': json.loads(Path(files['schema']).read_text()),
            'entries': [3],
        }))
        status, res = run_json(capsys, [
            'trail', 'replay', '--trail', str(trail),
        ])
        assert status == EXIT_INPUT_ERROR
        assert res['error'] == 'invalid-payload'

    def test_seed_reaches_ddl_state(self, data_dir):
        args = argparse.Namespace(ddl=str(data_dir / 'snb_extract.ddl'))
        state = Workspace(args, id_seed=7).state()
        assert state.schema.fresh_id('e') == 'e7'

    def test_needs_a_start(self, capsys, files):
        status, res = run_json(capsys, ['smo', 'apply', files['forum']])
        assert status == EXIT_INPUT_ERROR
        assert res['error'] == 'usage-error'


class TestEmit:
    def test_clone(self, capsys):
        status, text = run(capsys, ['emit', 'clone', '--value', 'a'])
        assert status == EXIT_OK
        assert "MATCH (a { id : 'a' })" in text

    def test_rule_sections(self, capsys, files):
        status, res = run_json(capsys, [
            'emit', 'rule', '--rule', files['merge_posts'], '--sections',
        ])
        assert status == EXIT_OK
        assert res['sections'][0]['name'] == 'match'


def test_unknown_command():
    with pytest.raises(SystemExit) as e:
        main(['frobnicate'])
    assert e.value.code == 2


def test_seed_from_env():
    assert seed_from_env({}) == 0
    assert seed_from_env({'PGSE_SEED': '3'}) == 3
    with pytest.raises(CommandError):
        seed_from_env({'PGSE_SEED': '-x'})
