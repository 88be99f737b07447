# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Drawing property graphs with matplotlib."""
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import matplotlib
import matplotlib.patches
import matplotlib.pyplot as plt
import numpy as np

from pgse.ddl import TypeIndex
from pgse.graph import ObjectId, PropertyGraph
from pgse.hom import Homomorphism
from pgse.layout import Positions, shell_layout

module_logger = logging.getLogger(__name__)


def element_caption(
        g: PropertyGraph,
        x: ObjectId,
        label: Optional[str] = None,
        max_values: int = 2
) -> str:
    """Makes the text drawn next to a node or edge."""
    lines = [x if label is None or label == x else f'{x}: {label}']
    for k in g.keys(x):
        values = sorted(g.values(x, k))
        shown = ', '.join(str(v) for v in values[:max_values])
        if len(values) > max_values:
            shown += ', ...'
        mark = '!' if g.is_mandatory(x, k) else ''
        lines.append(f'{k}{mark} = {shown}')
    return '\n'.join(lines)


class GraphView:
    """Draws one property graph on a matplotlib axes.

    Args:
        graph: Graph to draw.
        ax: Axes for graphics output.
        index: Optional; Labels of schema elements.
        hom: Optional; Typing of ``graph``; nodes are coloured by their
            image.
        positions: Optional; Node positions, a shell layout by default.
        logger: Logger object.
    """

    def __init__(
            self,
            graph: PropertyGraph,
            ax,
            index: Optional[TypeIndex] = None,
            hom: Optional[Homomorphism] = None,
            positions: Optional[Positions] = None,
            logger=None
    ):
        """Initialize."""
        self.graph = graph
        self.ax = ax
        self.index = index
        self.hom = hom
        self.positions = positions or shell_layout(graph)
        if logger is None:
            logger = module_logger
        self.logger = logger.getChild(__class__.__name__)

    def colours(self) -> Dict[ObjectId, Tuple[float, ...]]:
        """Picks a colour per node, shared by nodes of one type."""
        if self.hom is not None:
            keys = {n: self.hom.node_map.get(n) for n in self.graph.nodes()}
        else:
            keys = {n: n for n in self.graph.nodes()}
        palette = sorted({str(k) for k in keys.values()})
        cmap = matplotlib.colormaps['tab10']
        return {
            n: cmap(palette.index(str(k)) % cmap.N) for n, k in keys.items()
        }

    def label(self, x: ObjectId) -> Optional[str]:
        """Returns the type of an instance element or a schema label."""
        if self.hom is not None:
            x = self.hom(x)
            if x is None:
                return None
        if self.index is not None:
            return self.index.label(x)
        return x if self.hom is not None else None

    def draw_edges(self) -> None:
        for e in self.graph.edges():
            s, t = self.graph.endpoints(e)
            xs, xt = self.positions[s], self.positions[t]
            if s == t:
                loop = matplotlib.patches.Circle(
                    xs + np.array([0.0, 0.08]), 0.08, fill=False, lw=0.8
                )
                self.ax.add_patch(loop)
                middle = xs + np.array([0.0, 0.16])
            else:
                self.ax.annotate(
                    '', xy=xt, xytext=xs,
                    arrowprops={
                        'arrowstyle': '-|>', 'lw': 0.8,
                        'shrinkA': 12, 'shrinkB': 12,
                        'connectionstyle': 'arc3,rad=0.1',
                    }
                )
                middle = (xs + xt) / 2
            self.ax.text(
                *middle, element_caption(self.graph, e, self.label(e)),
                fontsize=5, ha='center', va='center', color='dimgray'
            )

    def draw_nodes(self) -> None:
        colours = self.colours()
        for n in self.graph.nodes():
            x = self.positions[n]
            self.ax.scatter(*x, s=300, color=colours[n], zorder=3)
            self.ax.text(
                *(x + np.array([0.0, -0.12])),
                element_caption(self.graph, n, self.label(n)),
                fontsize=6, ha='center', va='top', zorder=4
            )

    def draw(self, title: Optional[str] = None) -> None:
        """Draws edges, then nodes, then the title."""
        self.ax.set_axis_off()
        self.ax.set_aspect(1)
        self.ax.set_xlim(-1.5, 1.5)
        self.ax.set_ylim(-1.5, 1.5)
        self.draw_edges()
        self.draw_nodes()
        if title:
            self.ax.set_title(title)
        self.logger.debug(
            f'Drew {self.graph.number_of_nodes()} nodes'
            + (f' of {title!r}' if title else '')
        )


def render(
        panels: Sequence[Tuple[str, PropertyGraph, Optional[TypeIndex],
                               Optional[Homomorphism]]],
        path: Optional[str] = None,
        style: Optional[str] = None
):
    """Draws graphs side by side and optionally saves the figure.

    Args:
        panels: Title, graph, labels and typing of each panel.
        path: Optional; Image file to write.
        style: Optional; Name of a matplotlib style.

    Returns:
        The matplotlib figure.
    """
    if style:
        plt.style.use(style)
    fig, axes = plt.subplots(
        1, max(len(panels), 1), figsize=(6 * max(len(panels), 1), 6),
        squeeze=False
    )
    views: List[GraphView] = []
    for ax, (title, graph, index, hom) in zip(axes[0], panels):
        view = GraphView(graph, ax, index, hom)
        view.draw(title)
        views.append(view)
    if path is not None:
        fig.savefig(path, bbox_inches='tight')
        module_logger.info(f'Wrote {len(views)} panels to {path}')
    return fig
