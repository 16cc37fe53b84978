# core/domain/embedding.py
"""
Detection of the three minimal networks that forbid strong equilibria.

A pattern embeds in a host when three host s-t paths span a subnetwork with
no other s-t path, and every pattern edge finds host edges used by exactly
the image of the pattern paths through it. Subdivision, edge addition and
terminal extension all preserve this picture: subdivided edges keep their
usage set, added edges fall outside the three paths and extension edges are
used by all three. Paths are compared by the direction they cross each
edge, so on undirected hosts a reversed crossing is not a fourth path.
"""
import itertools
import logging
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .models import EdgeId, EmbeddingWitness, ForbiddenPattern, Network, NodeId, Path
from .services import DEFAULT_PATH_CAP, enumerate_paths

logger = logging.getLogger(__name__)

# Pattern edges as (label, indices of the pattern paths that use them).
BRAESS_PATHS = ("P1", "P2", "P3")
BRAESS_EDGES: Tuple[Tuple[str, FrozenSet[int]], ...] = (
    ("su", frozenset({0, 2})),
    ("ut", frozenset({0})),
    ("sv", frozenset({1})),
    ("vt", frozenset({1, 2})),
    ("uv", frozenset({2})),
)
SPLIT_PATHS = ("PA", "P2", "P3")
SPLIT_EDGES: Tuple[Tuple[str, FrozenSet[int]], ...] = (
    ("A", frozenset({0})),
    ("B", frozenset({1, 2})),
    ("C1", frozenset({1})),
    ("C2", frozenset({2})),
)

Triple = Tuple[Path, Path, Path]
# (edge, tail, head) as traversed; undirected edges can appear either way.
Arc = Tuple[EdgeId, NodeId, NodeId]


def _usage_classes(triple: Triple) -> Dict[FrozenSet[int], Tuple[EdgeId, ...]]:
    edges = sorted({e for path in triple for e in path.edges})
    classes: Dict[FrozenSet[int], List[EdgeId]] = {}
    for e in edges:
        usage = frozenset(i for i, path in enumerate(triple) if e in path.edges)
        classes.setdefault(usage, []).append(e)
    return {usage: tuple(ids) for usage, ids in classes.items()}


def _match(
    triple: Triple,
    classes: Dict[FrozenSet[int], Tuple[EdgeId, ...]],
    placement: Sequence[int],
    pattern_edges: Tuple[Tuple[str, FrozenSet[int]], ...],
) -> Optional[Dict[str, Tuple[EdgeId, ...]]]:
    """placement[k] is the triple position standing in for pattern path k."""
    edge_map: Dict[str, Tuple[EdgeId, ...]] = {}
    for label, pattern_usage in pattern_edges:
        wanted = frozenset(placement[k] for k in pattern_usage)
        if wanted not in classes:
            return None
        edge_map[label] = classes[wanted]
    return edge_map


def _witness(
    pattern: ForbiddenPattern,
    triple: Triple,
    placement: Sequence[int],
    labels: Sequence[str],
    edge_map: Dict[str, Tuple[EdgeId, ...]],
) -> EmbeddingWitness:
    owned = {e for ids in edge_map.values() for e in ids}
    spanned = sorted({e for path in triple for e in path.edges})
    return EmbeddingWitness(
        pattern=pattern,
        path_map={label: triple[placement[k]] for k, label in enumerate(labels)},
        edge_map=edge_map,
        glue_edges=tuple(e for e in spanned if e not in owned),
    )


def _arcs(path: Path) -> FrozenSet[Arc]:
    return frozenset(zip(path.edges, path.nodes[:-1], path.nodes[1:]))


def _spanning_triples(paths: List[Path]) -> List[Triple]:
    """
    Triples of distinct paths that cross every shared edge the same way and
    whose oriented union carries no fourth s-t path.
    """
    arc_sets = [_arcs(p) for p in paths]
    triples = []
    for i, j, k in itertools.combinations(range(len(paths)), 3):
        union = arc_sets[i] | arc_sets[j] | arc_sets[k]
        if len({arc[0] for arc in union}) != len(union):
            continue
        inside = sum(1 for arcs in arc_sets if arcs <= union)
        if inside == 3:
            triples.append((paths[i], paths[j], paths[k]))
    return triples


def _braess(triple: Triple) -> Optional[EmbeddingWitness]:
    classes = _usage_classes(triple)
    for placement in itertools.permutations(range(3)):
        edge_map = _match(triple, classes, placement, BRAESS_EDGES)
        if edge_map is not None:
            return _witness(ForbiddenPattern.BRAESS, triple, placement, BRAESS_PATHS, edge_map)
    return None


def _edge_beside_split(triple: Triple) -> Optional[EmbeddingWitness]:
    classes = _usage_classes(triple)
    for lone in range(3):
        rest = [p for p in range(3) if p != lone]
        placement = (lone, rest[0], rest[1])
        edge_map = _match(triple, classes, placement, SPLIT_EDGES)
        if edge_map is None:
            continue
        shared_path = triple[rest[0]].edges
        shared_first = shared_path.index(edge_map["B"][0]) < shared_path.index(edge_map["C1"][0])
        pattern = ForbiddenPattern.EDGE_THEN_PARALLEL if shared_first else ForbiddenPattern.PARALLEL_THEN_EDGE
        return _witness(pattern, triple, placement, SPLIT_PATHS, edge_map)
    return None


def find_forbidden_embedding(network: Network, path_cap: int = DEFAULT_PATH_CAP) -> Optional[EmbeddingWitness]:
    """
    Witness for the Braess graph, an edge beside (edge -> two parallel edges),
    or an edge beside (two parallel edges -> edge); None when nothing embeds.
    The Braess graph is preferred when both kinds exist.
    """
    paths = enumerate_paths(network, network.source, network.sink, path_cap)
    if len(paths) < 3:
        return None
    triples = _spanning_triples(paths)
    logger.debug(f"{len(triples)} spanning path triples out of {len(paths)} paths")
    for triple in triples:
        witness = _braess(triple)
        if witness is not None:
            return witness
    for triple in triples:
        witness = _edge_beside_split(triple)
        if witness is not None:
            return witness
    return None
