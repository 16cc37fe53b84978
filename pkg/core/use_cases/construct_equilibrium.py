# core/use_cases/construct_equilibrium.py
"""
Constructive strong equilibria.

All procedures share one greedy rule: among the options still open, give the
next agents to the option with the smallest fractional cost p / min(c, r),
where r is the number of agents still waiting. Series chains of blocks are
handled block by block, and the per-block results are stitched together so
that cheaper segments go to the agents that are served first.
"""
import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, TypeVar

from ..domain.exceptions import InfeasibleGameError, PreconditionError
from ..domain.models import (
    AgentIndex,
    DecompositionTree,
    Edge,
    EdgeId,
    EdgeLeaf,
    Game,
    GreedyAssignment,
    Network,
    NodeId,
    NotSP,
    Parallel,
    Path,
    Series,
    StrategyProfile,
)
from ..domain.services import enumerate_paths, path_capacity, path_cost
from ..domain.topology import (
    block_factors,
    classify_tree,
    decompose_sp,
    orient_network,
    subtree_network,
    tree_paths,
    tree_terminals,
)

logger = logging.getLogger(__name__)

K = TypeVar("K")


def greedy_fill(options: Sequence[Tuple[K, Fraction, int]], demand: int) -> List[Tuple[K, int]]:
    """
    The fractional-cost greedy over (key, cost, capacity) options.

    Returns (key, agents) blocks in the order they were filled. Ties go to
    the smallest key. Raises InfeasibleGameError when the options cannot host
    `demand` agents.
    """
    remaining = demand
    available = sorted(options, key=lambda option: option[0])
    blocks: List[Tuple[K, int]] = []
    while remaining > 0:
        best = None
        for option in available:
            key, cost, capacity = option
            take = min(capacity, remaining)
            if take <= 0:
                continue
            share = Fraction(cost) / take
            if best is None or share < best[1]:
                best = (option, share, take)
        if best is None:
            raise InfeasibleGameError(f"capacities cannot host {demand} agents ({remaining} left over)")
        option, _, take = best
        available.remove(option)
        blocks.append((option[0], take))
        remaining -= take
    return blocks


def _concat(segments: Sequence[Path]) -> Path:
    edges = tuple(e for segment in segments for e in segment.edges)
    nodes = segments[0].nodes + tuple(n for segment in segments[1:] for n in segment.nodes[1:])
    return Path(edges, nodes)


def _decompose_directed(network: Network) -> Tuple[Network, DecompositionTree]:
    oriented = orient_network(network)
    if oriented is None:
        raise PreconditionError("network is not series-parallel")
    tree = decompose_sp(oriented)
    if isinstance(tree, NotSP):
        raise PreconditionError(f"network is not series-parallel (stuck at {list(tree.obstruction)})")
    return oriented, tree


# --- Parallel edges and parallel paths ---

def construct_se_parallel_edges(game: Game) -> GreedyAssignment:
    """Symmetric game on parallel edges; agent 0 gets the first filled block."""
    if not game.is_symmetric:
        raise PreconditionError("the parallel-edge construction needs a symmetric game")
    network = game.network
    _, tree = _decompose_directed(network)
    if not classify_tree(tree).is_parallel_edges:
        raise PreconditionError("network is not a set of parallel edges")

    options = [(edge.id, edge.cost, edge.capacity) for edge in network.edges]
    blocks = greedy_fill(options, game.n)
    paths = []
    for edge_id, count in blocks:
        path = Path((edge_id,), (network.source, network.sink))
        paths.extend([path] * count)
    logger.info(f"Parallel-edge SE built from {len(blocks)} block(s)")
    return GreedyAssignment(StrategyProfile(tuple(paths)), tuple(blocks))


def reduce_parallel_paths(network: Network) -> Tuple[Network, Dict[EdgeId, Path]]:
    """
    Replaces every source-sink path by one edge of the path's total cost and
    minimal capacity. The map sends each synthetic edge id back to its path.
    """
    _, tree = _decompose_directed(network)
    if not classify_tree(tree).is_parallel_paths:
        raise PreconditionError("network is not a set of parallel paths")

    expansion: Dict[EdgeId, Path] = {}
    edges = []
    for path in enumerate_paths(network, network.source, network.sink):
        edge_id = path.edges[0] if len(path.edges) == 1 else "+".join(path.edges)
        expansion[edge_id] = path
        edges.append(Edge(edge_id, network.source, network.sink, path_cost(network, path), path_capacity(network, path)))
    reduced = Network(
        nodes=(network.source, network.sink),
        edges=tuple(edges),
        source=network.source,
        sink=network.sink,
        directed=True,
    )
    return reduced, expansion


def _ranked_segments(network: Network, fills: Sequence[Tuple[Path, int]], forced: Mapping[EdgeId, int]) -> List[Path]:
    """One path per served agent, cheapest share first (stable)."""
    priced = []
    for path, count in fills:
        share = sum((network.edge(e).cost / (forced.get(e, 0) + count) for e in path.edges), Fraction(0))
        priced.extend([(share, path)] * count)
    priced.sort(key=lambda item: item[0])
    return [path for _, path in priced]


def construct_se_spp(game: Game) -> StrategyProfile:
    """
    Symmetric game on an SPP network: the greedy runs on every block after
    reducing it to parallel edges, and agent j gets the j-th cheapest segment
    of every block.
    """
    if not game.is_symmetric:
        raise PreconditionError("the SPP construction needs a symmetric game")
    oriented, tree = _decompose_directed(game.network)
    if not classify_tree(tree).is_spp:
        raise PreconditionError("network is not a series of parallel-path blocks")

    per_block: List[List[Path]] = []
    for factor in block_factors(tree):
        block = subtree_network(factor, oriented)
        reduced, expansion = reduce_parallel_paths(block)
        options = [(expansion[edge.id], edge.cost, edge.capacity) for edge in reduced.edges]
        fills = greedy_fill(options, game.n)
        per_block.append(_ranked_segments(block, fills, {}))
    paths = tuple(_concat([segments[j] for segments in per_block]) for j in range(game.n))
    logger.info(f"SPP SE built over {len(per_block)} block(s)")
    return StrategyProfile(paths)


# --- Asymmetric chains ---

@dataclass(frozen=True)
class _Position:
    """A junction J_index, or an inner node of block `index`."""
    index: int
    inner: bool


@dataclass(frozen=True)
class _Route:
    """Which blocks an agent crosses completely, plus its partial segments."""
    agent: AgentIndex
    first_full: int
    last_full: int
    partial: Mapping[int, Path]
    source: _Position
    sink: _Position


class ChainLayout:
    """Blocks G_1 -> ... -> G_k of an SPP-like chain, its junctions and where every node sits."""

    def __init__(self, game: Game):
        self.network, self.tree = _decompose_directed(game.network)
        self.factors = block_factors(self.tree)
        self.blocks = [subtree_network(f, self.network) for f in self.factors]
        self.junctions = [tree_terminals(f, self.network)[0] for f in self.factors]
        self.junctions.append(self.network.sink)
        self.position: Dict[NodeId, _Position] = {j: _Position(i, False) for i, j in enumerate(self.junctions)}
        for i, block in enumerate(self.blocks):
            for node in block.nodes:
                if node not in (block.source, block.sink):
                    self.position[node] = _Position(i, True)
        self.block_of: Dict[EdgeId, int] = {e: i for i, f in enumerate(self.factors) for e in f.leaves()}

    def segment(self, block: int, start: NodeId, end: NodeId) -> Path:
        paths = enumerate_paths(self.blocks[block], start, end)
        if not paths:
            raise InfeasibleGameError(f"no route from '{start}' to '{end}'")
        if len(paths) > 1:
            raise PreconditionError(f"block {block} offers several routes from '{start}' to '{end}'")
        return paths[0]

    def route(self, agent: AgentIndex, source: NodeId, sink: NodeId) -> _Route:
        if source not in self.position or sink not in self.position:
            raise InfeasibleGameError(f"agent {agent} has a terminal off every source-sink path")
        start, end = self.position[source], self.position[sink]
        partial: Dict[int, Path] = {}
        if start.inner and end.inner and start.index == end.index:
            partial[start.index] = self.segment(start.index, source, sink)
            return _Route(agent, start.index + 1, start.index + 1, partial, start, end)
        first_full = start.index + 1 if start.inner else start.index
        last_full = end.index
        if last_full < first_full:
            raise InfeasibleGameError(f"agent {agent} cannot reach '{sink}' from '{source}'")
        if start.inner:
            partial[start.index] = self.segment(start.index, source, self.junctions[start.index + 1])
        if end.inner:
            partial[end.index] = self.segment(end.index, self.junctions[end.index], sink)
        return _Route(agent, first_full, last_full, partial, start, end)


def _fill_block(
    block: Network,
    paths: Sequence[Path],
    forced: Mapping[EdgeId, int],
    demand: int,
) -> List[Tuple[Path, int]]:
    """
    The fractional-cost greedy with edges already carrying `forced` users.

    A forced user already sits on its edge and splits the cost with whoever
    joins, so each edge costs cost / (forced + take) to the newcomers.
    """
    remaining = demand
    available = list(paths)
    fills: List[Tuple[Path, int]] = []
    while remaining > 0:
        best = None
        for path in available:
            room = min(block.edge(e).capacity - forced.get(e, 0) for e in path.edges)
            take = min(room, remaining)
            if take <= 0:
                continue
            share = sum((block.edge(e).cost / (forced.get(e, 0) + take) for e in path.edges), Fraction(0))
            if best is None or share < best[0]:
                best = (share, path, take)
        if best is None:
            raise InfeasibleGameError(f"block from '{block.source}' cannot host {demand} agents")
        _, path, take = best
        available.remove(path)
        fills.append((path, take))
        remaining -= take
    return fills


def _construct_on_chain(game: Game, chain: ChainLayout, order: Callable[[_Route], tuple]) -> StrategyProfile:
    if not game.is_symmetric and not game.network.directed:
        raise PreconditionError("asymmetric constructions need a directed network")
    routes = [chain.route(agent, *game.terminals(agent)) for agent in range(game.n)]
    segments: Dict[AgentIndex, Dict[int, Path]] = {r.agent: dict(r.partial) for r in routes}

    for index, (factor, block) in enumerate(zip(chain.factors, chain.blocks)):
        forced: Counter = Counter()
        for r in routes:
            if index in r.partial:
                forced.update(r.partial[index].edges)
        for e, load in forced.items():
            if load > block.edge(e).capacity:
                raise InfeasibleGameError(f"edge '{e}' is forced on {load} agents but has capacity {block.edge(e).capacity}")
        served = sorted((r for r in routes if r.first_full <= index < r.last_full), key=order)
        if not served:
            continue
        fills = _fill_block(block, tree_paths(factor, chain.network), forced, len(served))
        for r, path in zip(served, _ranked_segments(block, fills, forced)):
            segments[r.agent][index] = path

    paths = tuple(_concat([segments[a][i] for i in sorted(segments[a])]) for a in range(game.n))
    return StrategyProfile(paths)


def construct_se_single_source(game: Game) -> StrategyProfile:
    """
    Agents share one source on an SPP network. Agents that reach further
    along the chain are served first; within a block, the ones ending at its
    exit come before the ones ending inside it.
    """
    sources = {source for source, _ in game.terminal_list()}
    if len(sources) != 1:
        raise PreconditionError("agents do not share a source")
    chain = ChainLayout(game)
    if not classify_tree(chain.tree).is_spp:
        raise PreconditionError("network is not a series of parallel-path blocks")

    def order(r: _Route) -> tuple:
        return (-r.sink.index if r.sink.inner else -(r.sink.index - 1), r.sink.inner, r.agent)

    profile = _construct_on_chain(game, chain, order)
    logger.info(f"Single-source SE built for {game.n} agents")
    return profile


def _edge_bundle(tree: DecompositionTree) -> bool:
    return isinstance(tree, EdgeLeaf) or (
        isinstance(tree, Parallel) and all(isinstance(c, EdgeLeaf) for c in tree.children)
    )


def _path_bundle(tree: DecompositionTree) -> bool:
    return isinstance(tree, Parallel) and all(
        isinstance(c, EdgeLeaf) or (isinstance(c, Series) and all(isinstance(x, EdgeLeaf) for x in c.children))
        for c in tree.children
    )


def construct_se_multi_source(game: Game) -> StrategyProfile:
    """
    Chain of parallel-edge blocks with at most one parallel-path block G_l.
    Agents with a terminal inside G_l are served last.
    """
    chain = ChainLayout(game)
    path_blocks = [i for i, f in enumerate(chain.factors) if not _edge_bundle(f)]
    if len(path_blocks) > 1 or not all(_path_bundle(chain.factors[i]) for i in path_blocks):
        raise PreconditionError("network must be parallel-edge blocks with at most one parallel-path block")
    special: Optional[int] = path_blocks[0] if path_blocks else None

    def order(r: _Route) -> tuple:
        inside = any(p.inner and p.index == special for p in (r.source, r.sink))
        return (inside, r.agent)

    profile = _construct_on_chain(game, chain, order)
    logger.info(f"Multi-source SE built for {game.n} agents")
    return profile


METHODS = ("auto", "parallel-edges", "spp", "single-source", "multi-source")


class ConstructEquilibriumUseCase:
    """
    Single Responsibility: build a strong equilibrium with the procedure
    matching the game's topology.
    """

    def execute(self, game: Game, method: str = "auto") -> StrategyProfile:
        """
        Args:
            game: The game to solve.
            method: One of METHODS; "auto" picks from the topology.

        Raises:
            PreconditionError: No procedure applies, or the forced one does not.
            InfeasibleGameError: The game has no feasible profile.
        """
        if method not in METHODS:
            raise PreconditionError(f"unknown construction method '{method}'")
        if method == "auto":
            method = self.choose_method(game)
            logger.info(f"Construction method chosen: {method}")
        if method == "parallel-edges":
            return construct_se_parallel_edges(game).profile
        if method == "spp":
            return construct_se_spp(game)
        if method == "single-source":
            return construct_se_single_source(game)
        return construct_se_multi_source(game)

    @staticmethod
    def choose_method(game: Game) -> str:
        """The construction "auto" resolves to for this game."""
        _, tree = _decompose_directed(game.network)
        topology = classify_tree(tree)
        if game.is_symmetric:
            if topology.is_parallel_edges:
                return "parallel-edges"
            if topology.is_spp:
                return "spp"
            raise PreconditionError("no SE construction exists for symmetric games off SPP networks")
        if topology.is_spp and len({s for s, _ in game.terminal_list()}) == 1:
            return "single-source"
        factors = block_factors(tree)
        rich = [f for f in factors if not _edge_bundle(f)]
        if len(rich) <= 1 and all(_path_bundle(f) for f in rich):
            return "multi-source"
        raise PreconditionError("no SE construction applies to this asymmetric game")
