# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Node placement for drawing graphs."""
from typing import Dict, Iterable, List, Optional, Sequence
import logging

import networkx as nx
import numpy as np

from pgse.graph import ObjectId, PropertyGraph, to_networkx

module_logger = logging.getLogger(__name__)

Positions = Dict[ObjectId, np.ndarray]


def shells_by_degree(g: PropertyGraph) -> List[List[ObjectId]]:
    """Groups nodes into shells, highest degree innermost.

    Nodes of equal degree share a shell; a single hub gets the centre.
    """
    degree = {n: len(g.incident_edges(n)) for n in g.nodes()}
    res = []
    for d in sorted(set(degree.values()), reverse=True):
        res.append(sorted(n for n in g.nodes() if degree[n] == d))
    return res


def shell_layout(
        g: PropertyGraph,
        shells: Optional[Sequence[Iterable[ObjectId]]] = None,
        scale: float = 1.0
) -> Positions:
    """Places nodes on concentric circles with :func:`nx.shell_layout`.

    Args:
        g: Graph to place.
        shells: Optional; Node groups from the centre outwards. By default
            nodes are grouped by :func:`shells_by_degree`. Nodes left out
            go on an extra outer shell.
        scale: Radius of the outermost shell.

    Returns:
        Position vector of every node.
    """
    if g.number_of_nodes() == 0:
        return {}
    if shells is None:
        shells = shells_by_degree(g)
    shells = [[n for n in s if g.has_node(n)] for s in shells]
    shells = [s for s in shells if s]
    placed = {n for s in shells for n in s}
    rest = [n for n in g.nodes() if n not in placed]
    if rest:
        shells.append(rest)
    res = nx.shell_layout(to_networkx(g, 'structure'), nlist=shells,
                          scale=scale)
    module_logger.debug(f'Placed {len(res)} nodes on {len(shells)} shells')
    return {n: np.asarray(p, dtype=float) for n, p in res.items()}
