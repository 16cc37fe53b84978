# core/domain/topology.py
"""
Series-parallel decomposition and the network classes built on it.

A network is reduced by merging parallel edges and contracting interior
nodes with one incoming and one outgoing edge; it is series-parallel when a
single source->sink edge remains. Every edge carries the decomposition
subtree it stands for, so the surviving edge holds the whole tree.
"""
import itertools
import logging
from collections import Counter
from dataclasses import replace
from functools import lru_cache
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from .exceptions import InputError, edges_error
from .models import (
    DecompositionTree,
    Edge,
    EdgeId,
    EdgeLeaf,
    Network,
    NodeId,
    NotSP,
    Parallel,
    Path,
    Series,
    TopologyClass,
)
from .services import DEFAULT_PATH_CAP, enumerate_paths, path_from_edges

logger = logging.getLogger(__name__)


# --- Tree construction helpers ---

def make_series(children: Sequence[DecompositionTree]) -> DecompositionTree:
    flat: List[DecompositionTree] = []
    for child in children:
        flat.extend(child.children if isinstance(child, Series) else (child,))
    return flat[0] if len(flat) == 1 else Series(tuple(flat))


def make_parallel(children: Sequence[DecompositionTree]) -> DecompositionTree:
    flat: List[DecompositionTree] = []
    for child in children:
        flat.extend(child.children if isinstance(child, Parallel) else (child,))
    if len(flat) == 1:
        return flat[0]
    return Parallel(tuple(sorted(flat, key=lambda t: t.key())))


def canonicalize(tree: DecompositionTree) -> DecompositionTree:
    """Flattens nested Series/Parallel nodes and sorts Parallel children."""
    if isinstance(tree, EdgeLeaf):
        return tree
    children = [canonicalize(child) for child in tree.children]
    if isinstance(tree, Series):
        return make_series(children)
    return make_parallel(children)


def block_factors(tree: DecompositionTree) -> Tuple[DecompositionTree, ...]:
    """The maximal series chain G_1 -> ... -> G_k of a canonical tree."""
    return tree.children if isinstance(tree, Series) else (tree,)


# --- Orientation and dead edges ---

def edges_on_paths(network: Network, path_cap: int = DEFAULT_PATH_CAP) -> Set[EdgeId]:
    covered: Set[EdgeId] = set()
    for path in enumerate_paths(network, network.source, network.sink, path_cap):
        covered.update(path.edges)
    return covered


def prune_dead_edges(network: Network) -> Network:
    """Drops edges that lie on no source->sink path. Callers opt into this explicitly."""
    return network.restricted_to(edges_on_paths(network))


def orient_network(network: Network, path_cap: int = DEFAULT_PATH_CAP) -> Optional[Network]:
    """
    Directs every edge of an undirected network the way simple s-t paths
    traverse it. Returns None when some edge is traversed both ways, which
    never happens on a series-parallel network.
    """
    if network.directed:
        return network
    direction: Dict[EdgeId, Tuple[NodeId, NodeId]] = {}
    for path in enumerate_paths(network, network.source, network.sink, path_cap):
        for position, edge_id in enumerate(path.edges):
            step = (path.nodes[position], path.nodes[position + 1])
            if direction.setdefault(edge_id, step) != step:
                logger.debug(f"Edge '{edge_id}' is traversed in both directions")
                return None
    missing = set(network.edge_ids) - set(direction)
    if missing:
        raise edges_error("edges not on any source-sink path", missing, "prune them first")
    edges = []
    for edge in network.edges:
        tail, head = direction[edge.id]
        edges.append(replace(edge, tail=tail, head=head))
    return replace(network, edges=tuple(edges), directed=True)


# --- Reduction ---

def _merge_parallels(graph: nx.MultiDiGraph, edges: List[tuple]) -> bool:
    groups: Dict[Tuple[NodeId, NodeId], List[tuple]] = {}
    for u, v, key in edges:
        groups.setdefault((u, v), []).append((u, v, key))
    merged = False
    for (u, v), group in groups.items():
        if len(group) < 2:
            continue
        trees = [graph.edges[u, v, key]["tree"] for _, _, key in group]
        graph.remove_edges_from(group)
        graph.add_edge(u, v, tree=make_parallel(trees))
        merged = True
    return merged


def _process_vertex(graph: nx.MultiDiGraph, node: NodeId, terminals: Tuple[NodeId, NodeId], pending: Set[NodeId]) -> None:
    if node not in graph:
        return
    if _merge_parallels(graph, list(graph.in_edges(node, keys=True))):
        pending.update(u for u, _ in graph.in_edges(node))
    if _merge_parallels(graph, list(graph.out_edges(node, keys=True))):
        pending.update(v for _, v in graph.out_edges(node))
    if node in terminals:
        return
    if graph.in_degree(node) == 1 and graph.out_degree(node) == 1:
        (u, _, k1), = graph.in_edges(node, keys=True)
        (_, v, k2), = graph.out_edges(node, keys=True)
        if u == v:
            return
        tree = make_series([graph.edges[u, node, k1]["tree"], graph.edges[node, v, k2]["tree"]])
        graph.remove_node(node)
        graph.add_edge(u, v, tree=tree)
        pending.update({u, v})


def decompose_sp(network: Network, path_cap: int = DEFAULT_PATH_CAP) -> Union[DecompositionTree, NotSP]:
    """
    Canonical decomposition tree of a series-parallel network, or NotSP.

    Raises InputError when the network has no edges or some edge lies on no
    source->sink path.
    """
    if not network.edges:
        raise InputError("cannot decompose a network without edges")
    working = orient_network(network, path_cap)
    if working is None:
        return NotSP(tuple(sorted(set(network.nodes) - {network.source, network.sink})), len(network.edges))
    missing = set(working.edge_ids) - edges_on_paths(working, path_cap)
    if missing:
        raise edges_error("edges not on any source-sink path", missing, "prune them first")

    graph = nx.MultiDiGraph()
    for edge in working.edges:
        graph.add_edge(edge.tail, edge.head, tree=EdgeLeaf(edge.id))
    terminals = (working.source, working.sink)

    pending = {n for n in graph.nodes if n not in terminals}
    while pending:
        _process_vertex(graph, pending.pop(), terminals, pending)
    pending = set(terminals)
    while pending:
        _process_vertex(graph, pending.pop(), terminals, pending)

    if graph.number_of_edges() == 1:
        (u, v, data), = graph.edges(data=True)
        if (u, v) == terminals:
            return canonicalize(data["tree"])
    interior = tuple(sorted(n for n in graph.nodes if n not in terminals and graph.degree(n) > 0))
    logger.debug(f"Reduction stalled with {graph.number_of_edges()} edges over {interior}")
    return NotSP(interior, graph.number_of_edges())


# --- Classification ---

def _is_edge_chain(tree: DecompositionTree) -> bool:
    if isinstance(tree, EdgeLeaf):
        return True
    return isinstance(tree, Series) and all(isinstance(c, EdgeLeaf) for c in tree.children)


def _is_parallel_paths_block(tree: DecompositionTree) -> bool:
    if isinstance(tree, EdgeLeaf):
        return True
    return isinstance(tree, Parallel) and all(_is_edge_chain(c) for c in tree.children)


def _chain_is_ep(chain: Sequence[DecompositionTree]) -> bool:
    if len(chain) == 1:
        return is_ep_tree(chain[0])
    if isinstance(chain[0], EdgeLeaf) and _chain_is_ep(chain[1:]):
        return True
    return isinstance(chain[-1], EdgeLeaf) and _chain_is_ep(chain[:-1])


def is_ep_tree(tree: DecompositionTree) -> bool:
    if isinstance(tree, EdgeLeaf):
        return True
    if isinstance(tree, Parallel):
        return all(is_ep_tree(c) for c in tree.children)
    return _chain_is_ep(tree.children)


def is_series_of_ep(tree: DecompositionTree) -> bool:
    """True when every factor of the maximal series chain is EP."""
    return all(is_ep_tree(f) for f in block_factors(tree))


def classify_tree(tree: DecompositionTree) -> TopologyClass:
    spp = all(_is_parallel_paths_block(f) for f in block_factors(tree))
    if isinstance(tree, Parallel):
        parallel_paths = all(_is_edge_chain(c) for c in tree.children)
        parallel_edges = all(isinstance(c, EdgeLeaf) for c in tree.children)
    else:
        parallel_paths = _is_edge_chain(tree)
        parallel_edges = isinstance(tree, EdgeLeaf)
    return TopologyClass(
        is_parallel_edges=parallel_edges,
        is_parallel_paths=parallel_paths,
        is_spp=spp,
        is_ep=is_ep_tree(tree),
        is_sp=True,
    )


def classify(network: Network) -> TopologyClass:
    result = decompose_sp(network)
    if isinstance(result, NotSP):
        return TopologyClass(False, False, False, False, False)
    return classify_tree(result)


# --- Subtrees as networks ---

def tree_terminals(tree: DecompositionTree, network: Network) -> Tuple[NodeId, NodeId]:
    """Entry and exit node of a subtree of an oriented network."""
    if isinstance(tree, EdgeLeaf):
        edge = network.edge(tree.edge)
        return edge.tail, edge.head
    if isinstance(tree, Series):
        return tree_terminals(tree.children[0], network)[0], tree_terminals(tree.children[-1], network)[1]
    return tree_terminals(tree.children[0], network)


def _edge_sequences(tree: DecompositionTree) -> List[Tuple[EdgeId, ...]]:
    if isinstance(tree, EdgeLeaf):
        return [(tree.edge,)]
    if isinstance(tree, Series):
        parts = [_edge_sequences(c) for c in tree.children]
        return [tuple(e for seg in combo for e in seg) for combo in itertools.product(*parts)]
    return [seq for c in tree.children for seq in _edge_sequences(c)]


def tree_paths(tree: DecompositionTree, network: Network) -> List[Path]:
    """Entry->exit paths of a subtree, canonically ordered."""
    entry, _ = tree_terminals(tree, network)
    return sorted(path_from_edges(network, entry, seq) for seq in _edge_sequences(tree))


def subtree_network(tree: DecompositionTree, network: Network) -> Network:
    entry, exit_ = tree_terminals(tree, network)
    leaves = set(tree.leaves())
    edges = tuple(e for e in network.edges if e.id in leaves)
    touched = {entry, exit_} | {n for e in edges for n in (e.tail, e.head)}
    nodes = tuple(n for n in network.nodes if n in touched)
    return Network(nodes=nodes, edges=edges, source=entry, sink=exit_, directed=True)


# --- Composition ---

def _compose(networks: Sequence[Network], series: bool) -> Network:
    if not networks:
        raise InputError("composition needs at least one network")
    directed = {net.directed for net in networks}
    if len(directed) != 1:
        raise InputError("cannot compose directed and undirected networks")
    k = len(networks)

    def terminal_names(i: int) -> Tuple[NodeId, NodeId]:
        if not series:
            return "s", "t"
        return ("s" if i == 0 else f"j{i}"), ("t" if i == k - 1 else f"j{i + 1}")

    reserved = {"s", "t"} | {f"j{i}" for i in range(1, k)}
    inner_counts = Counter(
        n for net in networks for n in net.nodes if n not in (net.source, net.sink)
    )
    edge_counts = Counter(e.id for net in networks for e in net.edges)

    nodes: List[NodeId] = ["s"]
    edges: List[Edge] = []
    for i, net in enumerate(networks):
        entry, exit_ = terminal_names(i)
        rename: Dict[NodeId, NodeId] = {net.source: entry, net.sink: exit_}
        for node in net.nodes:
            if node in rename:
                continue
            fresh = node if inner_counts[node] == 1 and node not in reserved else f"{node}#{i}"
            rename[node] = fresh
            nodes.append(fresh)
        if series and i < k - 1:
            nodes.append(exit_)
        for edge in net.edges:
            edge_id = edge.id if edge_counts[edge.id] == 1 else f"{edge.id}#{i}"
            edges.append(replace(edge, id=edge_id, tail=rename[edge.tail], head=rename[edge.head]))
    nodes.append("t")
    return Network(nodes=tuple(nodes), edges=tuple(edges), source="s", sink="t", directed=directed.pop())


def compose_series(networks: Sequence[Network]) -> Network:
    """G_1 -> ... -> G_k: the sink of G_i is identified with the source of G_{i+1}."""
    return _compose(networks, series=True)


def compose_parallel(networks: Sequence[Network]) -> Network:
    """G_1 || ... || G_k: all sources identified, all sinks identified."""
    return _compose(networks, series=False)


def network_from_tree(
    tree: DecompositionTree,
    values: Optional[Mapping[EdgeId, Tuple[object, int]]] = None,
    directed: bool = True,
) -> Network:
    """Recomposes a tree into a network with nodes s, v1, v2, ..., t."""
    values = values or {}
    nodes: List[NodeId] = ["s"]
    edges: List[Edge] = []

    def fresh() -> NodeId:
        name = f"v{len(nodes)}"
        nodes.append(name)
        return name

    def build(sub: DecompositionTree, u: NodeId, v: NodeId) -> None:
        if isinstance(sub, EdgeLeaf):
            cost, capacity = values.get(sub.edge, (1, 1))
            edges.append(Edge(sub.edge, u, v, cost, capacity))
        elif isinstance(sub, Series):
            joints = [u] + [fresh() for _ in sub.children[:-1]] + [v]
            for child, a, b in zip(sub.children, joints, joints[1:]):
                build(child, a, b)
        else:
            for child in sub.children:
                build(child, u, v)

    build(tree, "s", "t")
    nodes.append("t")
    return Network(nodes=tuple(nodes), edges=tuple(edges), source="s", sink="t", directed=directed)


# --- Exhaustive shapes ---

@lru_cache(maxsize=None)
def _sequences(k: int) -> Tuple[tuple, ...]:
    """Ordered sequences (length >= 1) of non-series shapes with k edges in total."""
    result = []
    for first_size in range(1, k + 1):
        for first in _non_series(first_size):
            if first_size == k:
                result.append((first,))
            else:
                result.extend((first,) + rest for rest in _sequences(k - first_size))
    return tuple(result)


@lru_cache(maxsize=None)
def _series_shapes(k: int) -> Tuple[tuple, ...]:
    return tuple(("S", seq) for seq in _sequences(k) if len(seq) >= 2)


def _multisets(k: int, smallest: tuple) -> Iterator[Tuple[tuple, ...]]:
    """Non-decreasing lists of (size, shape) non-parallel parts summing to k."""
    for size in range(1, k + 1):
        for shape in _non_parallel(size):
            part = (size, shape)
            if part < smallest:
                continue
            if size == k:
                yield (part,)
            else:
                for rest in _multisets(k - size, part):
                    yield (part,) + rest


@lru_cache(maxsize=None)
def _parallel_shapes(k: int) -> Tuple[tuple, ...]:
    return tuple(
        ("P", tuple(shape for _, shape in parts))
        for parts in _multisets(k, (0, ()))
        if len(parts) >= 2
    )


@lru_cache(maxsize=None)
def _non_series(k: int) -> Tuple[tuple, ...]:
    return ((("E",),) if k == 1 else ()) + _parallel_shapes(k)


@lru_cache(maxsize=None)
def _non_parallel(k: int) -> Tuple[tuple, ...]:
    return ((("E",),) if k == 1 else ()) + _series_shapes(k)


def _label(shape: tuple, counter: List[int]) -> DecompositionTree:
    if shape[0] == "E":
        counter[0] += 1
        return EdgeLeaf(f"e{counter[0]}")
    children = tuple(_label(child, counter) for child in shape[1])
    return Series(children) if shape[0] == "S" else Parallel(children)


def iter_sp_trees(max_edges: int) -> Iterator[DecompositionTree]:
    """Every series-parallel shape with 1..max_edges edges, once, edges labelled e1, e2, ..."""
    for k in range(1, max_edges + 1):
        shapes = ((("E",),) if k == 1 else ()) + _series_shapes(k) + _parallel_shapes(k)
        for shape in shapes:
            yield canonicalize(_label(shape, [0]))
