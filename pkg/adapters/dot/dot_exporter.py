# adapters/dot/dot_exporter.py
import logging
from typing import List

from core.domain.interfaces import NetworkExporter
from core.domain.models import DecompositionTree, EdgeLeaf, Network, Series
from core.domain.services import format_cost

logger = logging.getLogger(__name__)


def _quote(text: str) -> str:
    escaped = str(text).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def edge_label(cost, capacity: int) -> str:
    """'p/q | c', the cost and capacity of one edge."""
    return f"{format_cost(cost)} | {capacity}"


class DotExporter(NetworkExporter):
    """
    Renders networks and decomposition trees as Graphviz DOT text.

    Output is deterministic: nodes are listed in sorted order and edges in
    network order, so the same network always gives the same bytes.
    """

    def export_network(self, network: Network, title: str = "G") -> str:
        keyword, arrow = ("digraph", "->") if network.directed else ("graph", "--")
        lines: List[str] = [f"{keyword} {_quote(title)} {{", "  rankdir=LR;"]
        for node in sorted(network.nodes):
            if node in (network.source, network.sink):
                lines.append(f"  {_quote(node)} [shape=doublecircle];")
            else:
                lines.append(f"  {_quote(node)} [shape=circle];")
        for edge in network.edges:
            label = f"{edge.id}: {edge_label(edge.cost, edge.capacity)}"
            lines.append(
                f"  {_quote(edge.tail)} {arrow} {_quote(edge.head)} "
                f"[key={_quote(edge.id)}, label={_quote(label)}];"
            )
        lines.append("}")
        logger.debug(f"Rendered network '{title}' with {len(network.edges)} edges")
        return "\n".join(lines) + "\n"

    def export_tree(self, tree: DecompositionTree, title: str = "T") -> str:
        lines: List[str] = [f"digraph {_quote(title)} {{"]
        counter = [0]

        def visit(node: DecompositionTree) -> str:
            name = f"n{counter[0]}"
            counter[0] += 1
            if isinstance(node, EdgeLeaf):
                lines.append(f"  {name} [shape=box, label={_quote(node.edge)}];")
                return name
            kind = "S" if isinstance(node, Series) else "P"
            lines.append(f"  {name} [shape=circle, label={_quote(kind)}];")
            for child in node.children:
                lines.append(f"  {name} -> {visit(child)};")
            return name

        visit(tree)
        lines.append("}")
        return "\n".join(lines) + "\n"
