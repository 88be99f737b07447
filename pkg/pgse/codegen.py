# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Cypher-flavoured query text for clone, merge and rule application."""
from dataclasses import dataclass, field
from string import Template
from typing import Any, Dict, List, Mapping, Optional, Tuple
import datetime
import logging
import re

from pgse.common import UnknownElementError
from pgse.graph import (
    ObjectId,
    PropertyGraph,
    Value,
    dictionary_union,
)
from pgse.rewrite import Rule, derive_actions

module_logger = logging.getLogger(__name__)

Selector = Tuple[str, Any]
"""Key and value identifying a node, e.g. ``('id', 'a')``."""


@dataclass(frozen=True)
class Section:
    """Named clause group of a query.

    Attributes:
        name: Section name, e.g. ``copy-out-edges``.
        text: Query text of the section.
        group: Template instantiation the section belongs to, if any.
        params: Variable bindings used to fill the section.
    """
    name: str
    text: str
    group: Optional[str] = None
    params: Mapping[str, str] = field(default_factory=dict)


@dataclass
class QueryText:
    """Query text split into ordered sections."""
    sections: List[Section] = field(default_factory=list)

    @property
    def text(self) -> str:
        """Concatenated text of all sections."""
        return ''.join(s.text for s in self.sections)

    def names(self) -> List[str]:
        """Returns the section names in order."""
        return [s.name for s in self.sections]

    def groups(self) -> List[str]:
        """Returns the template instantiations in order of appearance."""
        res = []
        for s in self.sections:
            if s.group is not None and s.group not in res:
                res.append(s.group)
        return res

    def to_json(self) -> Dict[str, Any]:
        """Makes the section map."""
        return {
            'text': self.text,
            'sections': [
                {'name': s.name, 'group': s.group, 'text': s.text}
                for s in self.sections
            ],
        }


CLONE_TEMPLATE = [
    ('match', Template("""\
// Query performing clone of a node
MATCH ($node { $key : $value })
""")),
    ('create-clone', Template("""\
// create a node corresponding to the clone
CREATE ($clone)
WITH $node, $clone$carry
SET $clone = $node
WITH $node, $clone$carry
""")),
    ('collect-successors', Template("""\

// match successors and out-edges
OPTIONAL MATCH ($node)-[out_edge:edge]->(suc)
WITH $node, $clone$carry, filter(
  el IN collect(
    {neighbor: suc, edge: out_edge})
  WHERE NOT el.neighbor IS NULL) as suc_maps
""")),
    ('collect-predecessors', Template("""\
// match predecessors and in-edges
OPTIONAL MATCH (pred)-[in_edge:edge]->($node)
WITH $node, $clone$carry, suc_maps, filter(
  el IN collect(
    {neighbor: pred, edge: in_edge})
  WHERE NOT el.neighbor IS NULL) as pred_maps
""")),
    ('copy-out-edges', Template("""\

// copy all incident edges of the original node
FOREACH (suc_map IN suc_maps |
  FOREACH(suc IN [suc_map.neighbor] |
    CREATE ($clone)-[new_edge:edge]->(suc)
    SET new_edge = suc_map.edge))
""")),
    ('copy-in-edges', Template("""\
FOREACH (pred_map IN pred_maps |
  FOREACH(pred in [pred_map.neighbor] |
    CREATE (pred)-[new_edge:edge]->($clone)
    SET new_edge = pred_map.edge))
""")),
    ('copy-self-loops', Template("""\

// copy self loop
FOREACH (suc_map IN suc_maps |
  FOREACH (self_loop IN
    CASE WHEN suc_map.neighbor=$node
    THEN [suc_map.edge] ELSE [] END |
      CREATE ($clone)-[new_edge:edge]->($clone)
      SET new_edge = self_loop))
WITH $node, $clone$carry
""")),
    ('return', Template("""\
RETURN $clone
""")),
]

_UNION_KEYS = """\
FOREACH(key in keys($src) |
  FOREACH(dummy IN
    CASE WHEN key IN keys($dst)
    THEN [] ELSE [NULL] END |
      // SET $dst[key] = $src[key]
      SET $dst = apoc.map.setKey(
        $dst, key, $src[key]))
  FOREACH(dummy IN
    CASE WHEN key IN keys($dst)
    THEN [NULL] ELSE [] END |
      SET $dst = apoc.map.setKey(
        $dst, key, $dst[key] + filter(
          el IN $src[key] WHERE NOT el in $dst[key]))))"""


def _union_keys(src: str, dst: str, indent: str) -> str:
    text = Template(_UNION_KEYS).substitute(src=src, dst=dst)
    return '\n'.join(indent + line for line in text.split('\n'))


MERGE_COMMON = [
    ('match', Template("""\
// As the following is not allowed by Cypher
// `SET a[key] = b[key]`, so we use APOC instead:
// `SET a = apoc.map.setKey(a, key, b[key])`
MATCH ($a { $key_a : $value_a }), ($b { $key_b : $value_b })
""")),
    ('merge-props', Template("""\

// Add properties of '$b' to '$a'
""" + _union_keys('$b', '$a', '') + """
// list with ids of merged nodes to track self loops
WITH $a as $merged, $b$carry,
  [id($a), id($b)] as merged_nodes
""")),
    ('collect-successors', Template("""\

// match successors of '$b'
OPTIONAL MATCH ($b)-[out_edge:edge]->(suc)
WITH $merged, $b$carry, merged_nodes, filter(
  el IN collect({neighbor: suc, edge: out_edge})
  WHERE NOT el.neighbor IS NULL) AS all_suc_maps
WITH $merged, $b$carry, merged_nodes,
  filter(
    el in all_suc_maps
    WHERE NOT id(el.neighbor) IN merged_nodes)
      AS new_suc_maps,
  filter(
    el in all_suc_maps
    WHERE id(el.neighbor) IN merged_nodes)
      AS loop_suc_maps
""")),
    ('collect-predecessors', Template("""\

// match predecessors of '$b'
OPTIONAL MATCH (pred)-[in_edge:edge]->($b)
WITH $merged, $b$carry, merged_nodes, new_suc_maps,
  loop_suc_maps, filter(
  el IN collect({neighbor: pred, edge: in_edge})
  WHERE NOT el.neighbor IS NULL) AS all_pred_maps
WITH $merged, $b$carry, merged_nodes, new_suc_maps,
  loop_suc_maps, filter(
    el IN all_pred_maps
    WHERE NOT id(el.neighbor) IN merged_nodes)
      AS new_pred_maps,
  filter(
    el IN all_pred_maps
    WHERE id(el.neighbor) IN merged_nodes)
      AS loop_pred_maps
""")),
]

MERGE_SIMPLE = [
    ('merge-out-edges', Template("""\

// create edges for sucs/preds that
// didn't exist before and/or merge
// their attributes into existing edges
FOREACH (suc_map IN new_suc_maps |
  FOREACH(suc IN [suc_map.neighbor] |
    MERGE ($merged)-[edge:edge]->(suc)
    // Merge dicts
""" + _union_keys('suc_map.edge', 'edge', '    ') + """))
""")),
    ('merge-in-edges', Template("""\

FOREACH (pred_map IN new_pred_maps |
  FOREACH(pred in [pred_map.neighbor] |
    MERGE (pred)-[edge:edge]->($merged)
""" + _union_keys('pred_map.edge', 'edge', '    ') + """))
""")),
    ('handle-loops', Template("""\

// handle self loops
WITH $merged, $b$carry, loop_suc_maps, loop_pred_maps
OPTIONAL MATCH ($merged)-[old_loop:edge]->($merged)
FOREACH(dummy IN
  CASE WHEN NOT old_loop IS NULL OR
    length(loop_suc_maps) > 0 OR
    length(loop_pred_maps) > 0
  THEN [NULL] ELSE [] END |
  MERGE ($merged)-[
      old_loop:edge]->($merged)
  FOREACH (map IN loop_suc_maps + loop_pred_maps |
""" + _union_keys('map.edge', 'old_loop', '    ') + """))
""")),
]

MERGE_NON_SIMPLE = [
    ('copy-out-edges', Template("""\

// move every edge of '$b' to '$a'
FOREACH (suc_map IN new_suc_maps |
  FOREACH(suc IN [suc_map.neighbor] |
    CREATE ($merged)-[new_edge:edge]->(suc)
    SET new_edge = suc_map.edge))
""")),
    ('copy-in-edges', Template("""\
FOREACH (pred_map IN new_pred_maps |
  FOREACH(pred in [pred_map.neighbor] |
    CREATE (pred)-[new_edge:edge]->($merged)
    SET new_edge = pred_map.edge))
""")),
    ('copy-loops', Template("""\
FOREACH (map IN loop_suc_maps + filter(
    el IN loop_pred_maps WHERE NOT el.neighbor = $b) |
  CREATE ($merged)-[new_edge:edge]->($merged)
  SET new_edge = map.edge)
WITH $merged, $b$carry
""")),
]

MERGE_TAIL = [
    ('delete', Template("""\
DETACH DELETE $b
""")),
    ('return', Template("""\
RETURN $merged
""")),
]


def literal(v: Any) -> str:
    """Renders a scalar or :class:`~pgse.graph.Value` as a literal."""
    v = Value.of(v)
    if v.tag == 'str':
        escaped = v.data.replace('\\', '\\\\').replace("'", "\\'")
        return f"'{escaped}'"
    if v.tag == 'bool':
        return 'true' if v.data else 'false'
    if v.tag == 'date':
        return f"date('{v.data.isoformat()}')"
    return str(v.data)


def _list_literal(values) -> str:
    return '[' + ', '.join(literal(v) for v in sorted(values)) + ']'


def variable(x: ObjectId) -> str:
    """Turns an element id into a query variable name."""
    name = re.sub(r'\W', '_', str(x))
    if not name or name[0].isdigit():
        name = f'v_{name}'
    return name


def _instantiate(
        template: List[Tuple[str, Template]],
        params: Mapping[str, str],
        group: Optional[str] = None,
        skip: Tuple[str, ...] = ()
) -> List[Section]:
    return [
        Section(name, t.substitute(params), group, dict(params))
        for name, t in template if name not in skip
    ]


def _carry(names: List[str]) -> str:
    return ''.join(f', {n}' for n in names)


def emit_clone_query(
        selector: Selector,
        node: str = 'a',
        clone: Optional[str] = None
) -> QueryText:
    """Emits a query cloning the node picked by ``selector``.

    Args:
        selector: Key and value matched by the first clause.
        node: Variable naming the original node.
        clone: Optional; Variable naming the clone, ``node`` plus ``1``
            by default.
    """
    key, value = selector
    params = {
        'node': node,
        'clone': clone or f'{node}1',
        'key': key,
        'value': literal(value),
        'carry': '',
    }
    return QueryText(_instantiate(CLONE_TEMPLATE, params, f'clone {node}'))


def _merge_template(simple: bool) -> List[Tuple[str, Template]]:
    return (
        MERGE_COMMON
        + (MERGE_SIMPLE if simple else MERGE_NON_SIMPLE)
        + MERGE_TAIL
    )


def emit_merge_query(
        selector_a: Selector,
        selector_b: Selector,
        simple: bool = True,
        a: str = 'a',
        b: str = 'b',
        merged: str = 'merged_node'
) -> QueryText:
    """Emits a query merging the second selected node into the first.

    Args:
        selector_a: Selects the surviving node.
        selector_b: Selects the node merged away.
        simple: If True, parallel edges and loops are united as in a
            simple graph; otherwise every edge is moved.
    """
    params = {
        'a': a,
        'b': b,
        'merged': merged,
        'key_a': selector_a[0],
        'value_a': literal(selector_a[1]),
        'key_b': selector_b[0],
        'value_b': literal(selector_b[1]),
        'carry': '',
    }
    return QueryText(
        _instantiate(_merge_template(simple), params, f'merge {a} {b}')
    )


def _props_literal(props: Mapping[str, Any]) -> str:
    if not props:
        return ''
    body = ', '.join(
        f'{k}: {_list_literal(vs)}' for k, vs in sorted(props.items())
    )
    return f' {{{body}}}'


def emit_rule_query(
        rule: Rule,
        selectors: Optional[Mapping[ObjectId, Selector]] = None,
        simple: bool = True
) -> QueryText:
    """Emits a query applying a rule in place.

    The query matches ``L`` injectively, then deletes, clones, prunes,
    merges and adds following the rule's action plan. Clones and merges
    reuse the clone and merge templates.

    Args:
        rule: Rule to apply.
        selectors: Optional; Selector of each ``L`` node; by default a
            node is selected by its id.
        simple: Whether merges unite parallel edges.
    """
    selectors = dict(selectors or {})
    plan = derive_actions(rule)
    lhs, p, rhs = rule.lhs, rule.preserved, rule.rhs
    sections: List[Section] = []
    bound: List[str] = []

    def others(*names):
        return _carry([n for n in bound if n not in names])

    patterns = []
    for x in lhs.nodes():
        key, value = selectors.get(x, ('id', x))
        patterns.append(f'({variable(x)} {{ {key} : {literal(value)} }})')
        bound.append(variable(x))
    for e in lhs.edges():
        s, t = lhs.endpoints(e)
        patterns.append(
            f'({variable(s)})-[{variable(e)}:edge]->({variable(t)})'
        )
        bound.append(variable(e))
    text = ''
    if patterns:
        text = 'MATCH ' + ',\n  '.join(patterns) + '\n'
        nodes = [variable(x) for x in lhs.nodes()]
        distinct = [
            f'id({u}) <> id({v})'
            for i, u in enumerate(nodes) for v in nodes[i + 1:]
        ]
        if distinct:
            text += 'WHERE ' + ' AND\n  '.join(distinct) + '\n'
    sections.append(Section('match', text))

    def add(name, text):
        sections.append(Section(name, text))

    for e in plan.edge_deletes:
        add('delete-edges', f'DELETE {variable(e)}\n')
        bound.remove(variable(e))
    for x in plan.node_deletes:
        add('delete-nodes', f'DETACH DELETE {variable(x)}\n')
        bound.remove(variable(x))
    for edit in plan.prop_deletes:
        add('delete-properties', _remove_text(variable(edit.element), edit))

    p_vars = {}
    for x in lhs.nodes():
        for i, q in enumerate(rule.l_map.preimages(x)):
            p_vars[q] = variable(x) if i == 0 else f'{variable(x)}{i}'
    for e in p.edges():
        p_vars[e] = variable(rule.l_map(e))
    for x, k in plan.clones:
        for q in rule.l_map.preimages(x)[1:]:
            params = {
                'node': variable(x),
                'clone': p_vars[q],
                'key': '', 'value': '',
                'carry': others(variable(x)),
            }
            sections.extend(_instantiate(
                CLONE_TEMPLATE, params, f'clone {x} {q}', ('match', 'return')
            ))
            bound.append(p_vars[q])
    for edit in plan.key_prunes:
        add('prune-keys', _remove_text(p_vars[edit.element], edit))
    pruned = 0
    for e in lhs.edges():
        s, t = lhs.endpoints(e)
        for qs in rule.l_map.preimages(s):
            for qt in rule.l_map.preimages(t):
                if p.edge_between(qs, qt) is not None:
                    continue
                if len(rule.l_map.preimages(s)) == 1 \
                        and len(rule.l_map.preimages(t)) == 1:
                    continue
                name = f'pruned_{pruned}'
                pruned += 1
                add('prune-edges', (
                    f'WITH {", ".join(bound)}\n'
                    f'OPTIONAL MATCH ({p_vars[qs]})-[{name}:edge]->'
                    f'({p_vars[qt]})\n'
                    f'DELETE {name}\n'
                ))

    r_vars = {}
    for group in plan.merges:
        survivor = p_vars[group[0]]
        for q in group[1:]:
            params = {
                'a': survivor, 'b': p_vars[q], 'merged': survivor,
                'key_a': '', 'value_a': '', 'key_b': '', 'value_b': '',
                'carry': others(survivor, p_vars[q]),
            }
            sections.extend(_instantiate(
                _merge_template(simple), params,
                f'merge {group[0]} {q}', ('match', 'return')
            ))
            bound.remove(p_vars[q])
    for y in rhs.elements():
        pre = rule.r_map.preimages(y)
        if pre:
            r_vars[y] = p_vars[pre[0]]
    for y in plan.node_adds:
        r_vars[y] = variable(y)
        add('create-nodes', (
            f'CREATE ({r_vars[y]}{_props_literal(rhs.props(y))})\n'
        ))
        bound.append(r_vars[y])
    for y in plan.edge_adds:
        s, t = rhs.endpoints(y)
        r_vars[y] = variable(y)
        verb = 'MERGE' if simple else 'CREATE'
        text = f'{verb} ({r_vars[s]})-[{r_vars[y]}:edge]->({r_vars[t]})\n'
        if rhs.props(y):
            text += f'SET {r_vars[y]} +={_props_literal(rhs.props(y))}\n'
        add('create-edges', text)
        bound.append(r_vars[y])
    for edit in plan.prop_adds:
        x = r_vars[edit.element]
        values = _list_literal(edit.values or rhs.values(edit.element,
                                                          edit.key))
        add('add-properties', (
            f"SET {x} = apoc.map.setKey({x}, '{edit.key}', "
            f"coalesce({x}['{edit.key}'], []) + filter(\n"
            f"  el IN {values} WHERE NOT el IN "
            f"coalesce({x}['{edit.key}'], [])))\n"
        ))
    for y, k in plan.mandatory_adds:
        add('mark-mandatory', f'// {r_vars[y]}.{k} is mandatory\n')
    if plan.clones or plan.merges or plan.node_adds or plan.edge_adds:
        add('return', f'RETURN {", ".join(bound)}\n')
    module_logger.debug(
        f'Emitted {len(sections)} sections for rule {rule.name!r}'
    )
    return QueryText(sections)


def _remove_text(var: str, edit) -> str:
    if edit.values is None:
        return f'REMOVE {var}.{edit.key}\n'
    return (
        f'SET {var}.{edit.key} = filter(\n'
        f'  el IN {var}.{edit.key} WHERE NOT el IN '
        f'{_list_literal(edit.values)})\n'
    )


def _select(g: PropertyGraph, key: str, value: str) -> ObjectId:
    wanted = Value.of(_parse_literal(value))
    for n in g.nodes():
        if key == 'id' and n == wanted.data:
            return n
        if wanted in g.values(n, key):
            return n
    raise UnknownElementError(f'No node with {key} = {value}')


def _parse_literal(text: str) -> Any:
    if text.startswith("date('"):
        return datetime.date.fromisoformat(text[6:-2])
    if text.startswith("'"):
        return text[1:-1].replace("\\'", "'").replace('\\\\', '\\')
    if text in ('true', 'false'):
        return text == 'true'
    return int(text)


def run_query(query: QueryText, g: PropertyGraph) -> PropertyGraph:
    """Executes emitted clone and merge queries on a copy of a graph.

    Each section is interpreted by its name, step by step as the query
    text describes it, which makes the result comparable with
    :func:`pgse.graph.clone_node` and :func:`pgse.graph.merge_nodes`.

    Raises:
        NotImplementedError: The query holds a section other than those
            of the clone and merge templates.
        UnknownElementError: A selector matches no node.
    """
    unknown = [s.name for s in query.sections if s.name not in _STEPS]
    if unknown:
        raise NotImplementedError(f'Cannot run section {unknown[0]!r}')
    g = g.copy()
    env: Dict[str, Any] = {}
    for section in query.sections:
        _STEPS[section.name](g, env, section.params)
    return g


def _step_match(g, env, params):
    if 'node' in params:
        env['node'] = _select(g, params['key'], params['value'])
    else:
        env['a'] = _select(g, params['key_a'], params['value_a'])
        env['b'] = _select(g, params['key_b'], params['value_b'])


def _step_create_clone(g, env, params):
    n = env['node']
    env['clone'] = g.fresh_id(f'{n}_clone', start=1)
    g.add_node(env['clone'], g.props(n), g.mandatory(n))


def _edge_maps(g, edges, neighbor):
    return [(neighbor(e), g.props(e), g.mandatory(e)) for e in edges]


def _step_collect_successors(g, env, params):
    n = env.get('node', env.get('b'))
    env['suc_maps'] = _edge_maps(g, g.out_edges(n), g.target)


def _step_collect_predecessors(g, env, params):
    n = env.get('node', env.get('b'))
    env['pred_maps'] = _edge_maps(g, g.in_edges(n), g.source)


def _step_copy_out_edges(g, env, params):
    if 'clone' in env:
        for s, props, marks in env['suc_maps']:
            g.add_edge(env['clone'], s, None, props, marks)
        return
    pair = (env['a'], env['b'])
    for s, props, marks in env['suc_maps']:
        if s not in pair:
            g.add_edge(env['a'], s, None, props, marks)


def _step_copy_in_edges(g, env, params):
    if 'clone' in env:
        for s, props, marks in env['pred_maps']:
            g.add_edge(s, env['clone'], None, props, marks)
        return
    pair = (env['a'], env['b'])
    for s, props, marks in env['pred_maps']:
        if s not in pair:
            g.add_edge(s, env['a'], None, props, marks)


def _step_copy_self_loops(g, env, params):
    for s, props, marks in env['suc_maps']:
        if s == env['node']:
            g.add_edge(env['clone'], env['clone'], None, props, marks)


def _step_copy_loops(g, env, params):
    a, b = env['a'], env['b']
    loops = [m for m in env['suc_maps'] if m[0] in (a, b)]
    loops += [m for m in env['pred_maps'] if m[0] == a]
    for _, props, marks in loops:
        g.add_edge(a, a, None, props, marks)


def _unite_edge(g, s, t, props, marks):
    e = g.edge_between(s, t)
    if e is None:
        g.add_edge(s, t, None, props, marks)
    else:
        g.set_dictionary(
            e, dictionary_union(g.props(e), props), g.mandatory(e) | marks
        )


def _step_merge_props(g, env, params):
    a, b = env['a'], env['b']
    g.set_dictionary(
        a, dictionary_union(g.props(a), g.props(b)),
        g.mandatory(a) | g.mandatory(b)
    )


def _step_merge_out_edges(g, env, params):
    pair = (env['a'], env['b'])
    for s, props, marks in env['suc_maps']:
        if s not in pair:
            _unite_edge(g, env['a'], s, props, marks)


def _step_merge_in_edges(g, env, params):
    pair = (env['a'], env['b'])
    for s, props, marks in env['pred_maps']:
        if s not in pair:
            _unite_edge(g, s, env['a'], props, marks)


def _step_handle_loops(g, env, params):
    a, b = env['a'], env['b']
    loops = [m for m in env['suc_maps'] + env['pred_maps'] if m[0] in (a, b)]
    if g.edge_between(a, a) is None and not loops:
        return
    for _, props, marks in loops:
        _unite_edge(g, a, a, props, marks)


def _step_delete(g, env, params):
    g.remove_node(env['b'])


def _step_return(g, env, params):
    pass


_STEPS = {
    'match': _step_match,
    'create-clone': _step_create_clone,
    'collect-successors': _step_collect_successors,
    'collect-predecessors': _step_collect_predecessors,
    'copy-out-edges': _step_copy_out_edges,
    'copy-in-edges': _step_copy_in_edges,
    'copy-self-loops': _step_copy_self_loops,
    'copy-loops': _step_copy_loops,
    'merge-props': _step_merge_props,
    'merge-out-edges': _step_merge_out_edges,
    'merge-in-edges': _step_merge_in_edges,
    'handle-loops': _step_handle_loops,
    'delete': _step_delete,
    'return': _step_return,
}
