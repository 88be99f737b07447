# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Command-line interface of the pgse package."""
from typing import Any, Dict, List, Optional, Sequence
import argparse
import ast
import importlib
import json
import logging
import os
import sys

from pgse.codegen import emit_clone_query, emit_merge_query, emit_rule_query
from pgse.common import PgseError
from pgse.ddl import (
    TypeIndex,
    check_graph_type,
    graph_type_to_json,
    graph_type_to_schema,
    parse_ddl,
    print_ddl,
    schema_to_graph_type,
)
from pgse.graph import (
    PropertyGraph,
    ValueMode,
    dumps,
    graph_from_json,
    graph_to_json,
)
from pgse.hom import (
    Homomorphism,
    check_homomorphism,
    compose,
    find_homomorphisms,
)
from pgse.propagation import (
    PropagationRelation,
    propagate_to_instance,
    propagate_to_schema,
)
from pgse.rewrite import Rule, apply_rule, find_matchings
from pgse.smo import AuditTrail, SchemaManipulation, SchemaState, apply_smo

module_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT_ERROR = 2


class CommandError(Exception):
    """Input error detected by the command line itself."""
    code = 'usage-error'


def parse_example(s: str):
    """Parses example module string.

    The string must contain the name of an importable module ``mod``.
    The module is imported and ``mod.get_graphs`` is returned; it maps an
    arguments dictionary to a list of panels.
    """
    mod = importlib.import_module(s)
    return mod.get_graphs


def parse_example_args(s: str):
    """Parses arguments dictionary for the example graphs factory.

    The string must contain a Python dictionary literal.
    """
    res = ast.literal_eval(s)
    if not isinstance(res, dict):
        raise ValueError('Example arguments must be a dictionary')
    return res


def seed_from_env(environ=os.environ) -> int:
    """Reads the starting value of fresh-id counters from ``PGSE_SEED``."""
    value = environ.get('PGSE_SEED', '0')
    try:
        return int(value)
    except ValueError:
        raise CommandError(f'PGSE_SEED must be an integer, not {value!r}')


class Workspace:
    """Loads the files named on the command line.

    Remembers the file being read, so errors can name it.

    Args:
        args: Command-line arguments.
        id_seed: Start of the fresh-id counter of loaded graphs.
        logger: Logger object.
    """

    def __init__(self, args: argparse.Namespace, id_seed: int = 0,
                 logger=None):
        """Initialize."""
        self.args = args
        self.id_seed = id_seed
        self.current_file: Optional[str] = None
        if logger is None:
            logger = module_logger
        self.logger = logger.getChild(__class__.__name__)

    @property
    def mode(self) -> ValueMode:
        return ValueMode(getattr(self.args, 'mode', 'symbolic'))

    def read_text(self, path: str) -> str:
        self.current_file = path
        self.logger.debug(f'Reading {path}')
        with open(path, encoding='utf-8') as f:
            return f.read()

    def read_json(self, path: str) -> Any:
        return json.loads(self.read_text(path))

    def require(self, name: str) -> str:
        """Returns a file argument, failing if it was not given."""
        path = getattr(self.args, name, None)
        if path is None:
            raise CommandError(f'--{name} is required')
        return path

    def graph(self, name: str) -> PropertyGraph:
        """Loads the graph named by a file argument."""
        return graph_from_json(self.read_json(self.require(name)),
                               self.id_seed)

    def index(self) -> TypeIndex:
        path = getattr(self.args, 'index', None)
        return TypeIndex.from_json(self.read_json(path) if path else None)

    def hom(self, source: PropertyGraph,
            target: PropertyGraph) -> Homomorphism:
        """Loads ``--hom``, or infers it when ``--infer`` is given."""
        if getattr(self.args, 'infer', False):
            found = find_homomorphisms(source, target, 1, self.mode)
            if not found:
                raise CommandError('No homomorphism exists')
            self.logger.info(f'Inferred {found[0].node_map}')
            return found[0]
        return Homomorphism.from_json(
            self.read_json(self.require('hom')), source, target
        )

    def rule(self) -> Rule:
        return Rule.from_json(self.read_json(self.require('rule')))

    def matching(self, rule: Rule, g: PropertyGraph) -> Homomorphism:
        """Loads ``--matching``, or takes the first matching found."""
        path = getattr(self.args, 'matching', None)
        if path is not None:
            return Homomorphism.from_json(self.read_json(path), rule.lhs, g)
        found = find_matchings(rule, g)
        if not found:
            raise CommandError(f'Rule {rule.name!r} has no matching')
        return found[0]

    def relation(self) -> PropagationRelation:
        path = getattr(self.args, 'relation', None)
        return PropagationRelation.from_json(
            self.read_json(path) if path else None
        )

    def state(self) -> SchemaState:
        """Loads ``--state``, or starts one from ``--ddl``."""
        path = getattr(self.args, 'state', None)
        if path is not None:
            return SchemaState.from_json(self.read_json(path), self.id_seed)
        gt = parse_ddl(self.read_text(self.require('ddl')))
        res = SchemaState.from_graph_type(gt, mode=self.mode,
                                          id_seed=self.id_seed)
        if getattr(self.args, 'instance', None):
            res.instance = self.graph('instance')
            res.hom = self.hom(res.instance, res.schema)
        return res


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Adds the output and mode options every command shares."""
    parser.add_argument(
        '--mode',
        help='Value mode of schemas',
        choices=[m.value for m in ValueMode],
        default=ValueMode.SYMBOLIC.value
    )
    parser.add_argument(
        '--pretty',
        help='Indent JSON output',
        action='store_true'
    )
    parser.add_argument(
        '--out',
        help='Output file, standard output by default'
    )


def add_file_arguments(parser: argparse.ArgumentParser,
                       names: Sequence[str]) -> None:
    helps = {
        'schema': 'Schema graph JSON file',
        'index': 'Schema labels JSON file',
        'instance': 'Instance graph JSON file',
        'graph': 'Host graph JSON file',
        'hom': 'Homomorphism JSON file',
        'rule': 'Rule JSON file',
        'matching': 'Matching JSON file, the first matching by default',
        'relation': 'Propagation relation JSON file',
        'trail': 'Audit trail JSON file',
    }
    for name in names:
        parser.add_argument(f'--{name}', help=helps[name])


def setup_argparse() -> argparse.ArgumentParser:
    """Sets up command line argument parser and returns it."""
    parser = argparse.ArgumentParser(prog='pgse')
    parser.add_argument(
        '-v', '--verbose',
        help='Verbosity level',
        choices=['CRITICAL', 'ERROR', 'WARNING', 'INFO', 'DEBUG'],
        default='WARNING'
    )
    commands = parser.add_subparsers(dest='command', required=True)

    ddl = commands.add_parser('ddl', help='Graph type statements')
    ddl_commands = ddl.add_subparsers(dest='action', required=True)
    p = ddl_commands.add_parser('check', help='Parse and check a DDL file')
    p.add_argument('file', help='DDL file')
    add_common_arguments(p)
    p = ddl_commands.add_parser('to-graph', help='Build the schema graph')
    p.add_argument('file', help='DDL file')
    p.add_argument(
        '--force',
        help='Keep the first of colliding edge types',
        action='store_true'
    )
    add_common_arguments(p)
    p = ddl_commands.add_parser('from-graph', help='Read a schema back')
    add_file_arguments(p, ['schema', 'index', 'trail'])
    p.add_argument('--name', help='Graph type name')
    add_common_arguments(p)

    p = commands.add_parser('validate', help='Check an instance')
    add_file_arguments(p, ['schema', 'instance', 'hom'])
    p.add_argument(
        '--infer',
        help='Search for a homomorphism instead of reading --hom',
        action='store_true'
    )
    add_common_arguments(p)

    p = commands.add_parser('match', help='List matchings of a rule')
    add_file_arguments(p, ['rule', 'graph'])
    add_common_arguments(p)

    p = commands.add_parser('rewrite', help='Apply a rule to a graph')
    add_file_arguments(p, ['rule', 'graph', 'matching'])
    add_common_arguments(p)

    propagate = commands.add_parser(
        'propagate', help='Rewrite one side and repair the other'
    )
    propagate_commands = propagate.add_subparsers(dest='action',
                                                  required=True)
    for action, what in [
            ('to-instance', 'Rewrite the schema, repair the instance'),
            ('to-schema', 'Rewrite the instance, repair the schema')]:
        p = propagate_commands.add_parser(action, help=what)
        add_file_arguments(p, ['schema', 'instance', 'hom', 'rule',
                               'matching', 'relation'])
        p.add_argument('--infer', action='store_true',
                       help='Search for a homomorphism')
        add_common_arguments(p)

    smo = commands.add_parser('smo', help='Schema manipulation operations')
    smo_commands = smo.add_subparsers(dest='action', required=True)
    p = smo_commands.add_parser('apply', help='Apply operations in order')
    p.add_argument('smo', nargs='+', help='Operation JSON files')
    p.add_argument('--state', help='State JSON file')
    p.add_argument('--ddl', help='DDL file starting a new state')
    add_file_arguments(p, ['instance', 'hom'])
    p.add_argument('--infer', action='store_true',
                   help='Search for a homomorphism')
    add_common_arguments(p)

    emit = commands.add_parser('emit', help='Emit Cypher queries')
    emit_commands = emit.add_subparsers(dest='action', required=True)
    p = emit_commands.add_parser('clone', help='Clone a node')
    p.add_argument('--key', default='id', help='Selector key')
    p.add_argument('--value', required=True, help='Selector value')
    emit_arguments(p)
    p = emit_commands.add_parser('merge', help='Merge two nodes')
    p.add_argument('--key', default='id', help='Selector key')
    p.add_argument('--value-a', required=True, help='Surviving node value')
    p.add_argument('--value-b', required=True, help='Merged node value')
    emit_arguments(p)
    p = emit_commands.add_parser('rule', help='Apply a rule')
    add_file_arguments(p, ['rule'])
    p.add_argument('--selectors', help='JSON file of L node selectors')
    emit_arguments(p)

    trail = commands.add_parser('trail', help='Audit trails')
    trail_commands = trail.add_subparsers(dest='action', required=True)
    p = trail_commands.add_parser('replay', help='Rebuild a trail head')
    add_file_arguments(p, ['trail'])
    p.add_argument('--upto', type=int, help='Number of entries to replay')
    p.add_argument('--ddl', action='store_true',
                   help='Print the head as a graph type')
    add_common_arguments(p)

    p = commands.add_parser('render', help='Draw graphs to an image')
    add_file_arguments(p, ['schema', 'index', 'instance', 'hom'])
    p.add_argument(
        '--example',
        help=(
            'Name of a module containing get_graphs() function, '
            'which returns a list of panels to draw'
        )
    )
    p.add_argument(
        '--example-args',
        help='Dictionary of arguments passed to get_graphs() function',
        type=parse_example_args,
        default=dict()
    )
    p.add_argument(
        '--matplotlib-style',
        help='Name of a Matplotlib style file',
    )
    add_common_arguments(p)
    return parser


def emit_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        '--non-simple',
        help='Target graphs may have parallel edges',
        action='store_true'
    )
    parser.add_argument(
        '--sections',
        help='Print the section map as JSON instead of the query text',
        action='store_true'
    )
    add_common_arguments(parser)


def post_process_args(args: argparse.Namespace) -> argparse.Namespace:
    """Processes complex arguments.

    Processes command-line arguments that require further processing
    after argparse. Arguments needing complex processing and/or error
    reporting should be handled here.
    """
    if getattr(args, 'example', None):
        args.example = parse_example(args.example)
    if args.command == 'render' and not args.out:
        raise CommandError('render needs --out')
    if args.command == 'smo' and not (args.state or args.ddl):
        raise CommandError('smo apply needs --state or --ddl')
    return args


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parses command-line arguments."""
    parser = setup_argparse()
    args = parser.parse_args(argv)
    return post_process_args(args)


def setup_logging(args: argparse.Namespace) -> None:
    """Sets up logging."""
    logging.basicConfig()
    module_logger.setLevel(args.verbose)
    logging.getLogger('pgse').setLevel(args.verbose)


class Output:
    """What a command prints and the status it exits with."""

    def __init__(self, body: Any, status: int = EXIT_OK):
        """Initialize."""
        self.body = body
        self.status = status


def run_ddl(ws: Workspace) -> Output:
    args = ws.args
    if args.action == 'check':
        gt = parse_ddl(ws.read_text(args.file))
        diagnostics = [d.to_json() for d in check_graph_type(gt)]
        return Output(
            {
                'name': gt.name,
                'element_types': len(gt.element_types),
                'node_types': len(gt.node_types),
                'edge_types': len(gt.edge_types),
                'diagnostics': diagnostics,
            },
            EXIT_VIOLATIONS if diagnostics else EXIT_OK
        )
    if args.action == 'to-graph':
        gt = parse_ddl(ws.read_text(args.file))
        schema, index = graph_type_to_schema(gt, ws.mode, args.force,
                                             ws.id_seed)
        return Output({
            'graph_type': graph_type_to_json(gt),
            'schema': graph_to_json(schema),
            'index': index.to_json(),
        })
    trail = None
    if args.trail:
        trail = AuditTrail.from_json(ws.read_json(args.trail))
    if args.schema or trail is None:
        schema, index = ws.graph('schema'), ws.index()
    else:
        schema, index = trail.head, trail.head_index
    gt = schema_to_graph_type(schema, index, trail, args.name)
    return Output(print_ddl(gt))


def run_validate(ws: Workspace) -> Output:
    schema = ws.graph('schema')
    instance = ws.graph('instance')
    h = ws.hom(instance, schema)
    violations = check_homomorphism(h, ws.mode)
    return Output(
        {
            'hom': h.to_json(),
            'violations': [v.to_json() for v in violations],
        },
        EXIT_VIOLATIONS if violations else EXIT_OK
    )


def run_match(ws: Workspace) -> Output:
    rule = ws.rule()
    g = ws.graph('graph')
    return Output({
        'matchings': [m.to_json() for m in find_matchings(rule, g)],
    })


def run_rewrite(ws: Workspace) -> Output:
    rule = ws.rule()
    g = ws.graph('graph')
    return Output(apply_rule(g, rule, ws.matching(rule, g)).to_json())


def run_propagate(ws: Workspace) -> Output:
    schema = ws.graph('schema')
    instance = ws.graph('instance')
    h = ws.hom(instance, schema)
    rule = ws.rule()
    relation = ws.relation()
    if ws.args.action == 'to-instance':
        rw = apply_rule(schema, rule, ws.matching(rule, schema))
        res = propagate_to_instance(instance, h, rw.back_map, ws.mode,
                                    relation)
        hom = compose(res.hom, rw.fwd_map)
        return Output({
            'schema': graph_to_json(rw.graph),
            'instance': graph_to_json(res.graph),
            'hom': hom.to_json(),
            'back_map': res.back_map.to_json(),
        })
    rw = apply_rule(instance, rule, ws.matching(rule, instance))
    h_minus = compose(rw.back_map, h)
    res = propagate_to_schema(schema, h_minus, rw.fwd_map, ws.mode, relation)
    return Output({
        'schema': graph_to_json(res.graph),
        'instance': graph_to_json(rw.graph),
        'hom': res.hom.to_json(),
        'schema_map': res.schema_map.to_json(),
        'relaxed': [list(p) for p in res.relaxed],
    })


def run_smo(ws: Workspace) -> Output:
    state = ws.state()
    for path in ws.args.smo:
        state = apply_smo(state, SchemaManipulation.from_json(
            ws.read_json(path)
        ))
    violations = state.violations()
    res = state.to_json()
    res['violations'] = [v.to_json() for v in violations]
    return Output(res, EXIT_VIOLATIONS if violations else EXIT_OK)


def run_emit(ws: Workspace) -> Output:
    args = ws.args
    simple = not args.non_simple
    if args.action == 'clone':
        query = emit_clone_query((args.key, args.value))
    elif args.action == 'merge':
        query = emit_merge_query((args.key, args.value_a),
                                 (args.key, args.value_b), simple)
    else:
        selectors = None
        if args.selectors:
            selectors = {
                x: tuple(sel)
                for x, sel in ws.read_json(args.selectors).items()
            }
        query = emit_rule_query(ws.rule(), selectors, simple)
    return Output(query.to_json() if args.sections else query.text)


def run_trail(ws: Workspace) -> Output:
    trail = AuditTrail.from_json(ws.read_json(ws.require('trail')))
    schema, index = trail.replay(ws.args.upto)
    if ws.args.ddl:
        if ws.args.upto is not None:
            trail = trail.with_entries(trail.entries[:ws.args.upto])
        return Output(print_ddl(schema_to_graph_type(schema, index, trail)))
    return Output({'schema': graph_to_json(schema), 'index': index.to_json()})


def run_render(ws: Workspace) -> Output:
    import pgse.render

    args = ws.args
    if args.example:
        panels = args.example(args.example_args)
    else:
        panels = []
        schema = ws.graph('schema') if args.schema else None
        index = ws.index() if args.index else None
        if schema is not None:
            panels.append(('schema', schema, index, None))
        if args.instance:
            instance = ws.graph('instance')
            h = ws.hom(instance, schema) if schema is not None else None
            panels.append(('instance', instance, index, h))
        if not panels:
            raise CommandError('Nothing to draw')
    pgse.render.render(panels, args.out, args.matplotlib_style)
    return Output({'out': args.out, 'panels': [p[0] for p in panels]})


COMMANDS = {
    'ddl': run_ddl,
    'validate': run_validate,
    'match': run_match,
    'rewrite': run_rewrite,
    'propagate': run_propagate,
    'smo': run_smo,
    'emit': run_emit,
    'trail': run_trail,
    'render': run_render,
}


def format_output(body: Any, pretty: bool) -> str:
    if isinstance(body, str):
        return body if body.endswith('\n') else body + '\n'
    return dumps(body, pretty) + '\n'


def error_report(e: Exception, ws: Optional[Workspace]) -> Dict[str, Any]:
    """Makes the JSON report of an input error."""
    if isinstance(e, PgseError):
        res = e.to_json()
    elif isinstance(e, json.JSONDecodeError):
        res = {'error': 'json-error', 'message': str(e)}
    elif isinstance(e, OSError):
        res = {'error': 'io-error', 'message': str(e)}
    else:
        res = {'error': getattr(e, 'code', 'value-error'), 'message': str(e)}
    if ws is not None and ws.current_file is not None:
        res['file'] = ws.current_file
    return res


def run_command(args: argparse.Namespace, out=None) -> int:
    """Runs a parsed command, printing its output.

    Returns:
        Exit status: 0 on success, 1 when violations were found, 2 on
        input errors.
    """
    out = out or sys.stdout
    ws = None
    try:
        ws = Workspace(args, seed_from_env())
        res = COMMANDS[args.command](ws)
    except (PgseError, CommandError, OSError, ValueError) as e:
        module_logger.debug('Command failed', exc_info=True)
        out.write(dumps(error_report(e, ws)) + '\n')
        return EXIT_INPUT_ERROR
    text = format_output(res.body, getattr(args, 'pretty', False))
    if getattr(args, 'out', None) and args.command != 'render':
        with open(args.out, 'w', encoding='utf-8') as f:
            f.write(text)
    else:
        out.write(text)
    return res.status


def main(argv: Optional[List[str]] = None) -> int:
    """The main function."""
    try:
        args = parse_args(argv)
    except (CommandError, ValueError, ImportError) as e:
        sys.stdout.write(dumps(error_report(e, None)) + '\n')
        return EXIT_INPUT_ERROR

    setup_logging(args)

    status = run_command(args)
    module_logger.info(f'{args.command} finished with status {status}')
    return status


if __name__ == '__main__':
    sys.exit(main())
