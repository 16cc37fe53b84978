# core/use_cases/solve_optimum.py
"""
Social optimum and the optimal profiles paired with a strong equilibrium.

The social cost of a feasible profile is the total cost of its used edges,
so the optimum is searched over edge subsets: branch on edges (expensive
first, include before exclude), bound by the cost of the included edges and
by a max-flow test on everything not yet excluded, and route the agents
exactly once the included edges can carry them.
"""
import itertools
import logging
from collections import Counter
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from ..domain.exceptions import DomainError, InfeasibleGameError, InputError, PreconditionError
from ..domain.models import (
    AgentIndex,
    CombinedFeasibilityViolation,
    DecompositionTree,
    EdgeId,
    EdgeLeaf,
    Game,
    Network,
    NotSP,
    OptimumResult,
    Parallel,
    PartialProfile,
    Path,
    StrategyProfile,
)
from ..domain.services import (
    DEFAULT_PATH_CAP,
    DEFAULT_PROFILE_CAP,
    edge_users,
    enumerate_paths,
    ensure_within_cap,
    is_feasible,
    iter_profiles,
    count_profiles,
    path_from_edges,
    strategy_sets,
)
from ..domain.topology import classify, decompose_sp, is_ep_tree, make_series, orient_network, tree_paths
from .construct_equilibrium import ChainLayout

logger = logging.getLogger(__name__)

_SUPER_SOURCE = ("super", "source")
_SUPER_SINK = ("super", "sink")

OptimumKey = Tuple[Fraction, int, Tuple[EdgeId, ...]]


def _key(game: Game, profile: StrategyProfile) -> OptimumKey:
    used = tuple(sorted(profile.used_edges))
    cost = sum((game.network.edge(e).cost for e in used), Fraction(0))
    return cost, len(used), used


# --- Feasibility of edge subsets ---

def _flow_feasible(game: Game, allowed: Iterable[EdgeId]) -> bool:
    """
    Max-flow test on the allowed edges. Exact when all agents share a source,
    a necessary condition otherwise.
    """
    graph = nx.DiGraph()
    network = game.network
    for edge_id in allowed:
        edge = network.edge(edge_id)
        arcs = [(edge.tail, edge.head)] if network.directed else [(edge.tail, edge.head), (edge.head, edge.tail)]
        for u, v in arcs:
            if graph.has_edge(u, v):
                graph[u][v]["capacity"] += edge.capacity
            else:
                graph.add_edge(u, v, capacity=edge.capacity)
    sources = Counter(source for source, _ in game.terminal_list())
    sinks = Counter(sink for _, sink in game.terminal_list())
    for node, count in sources.items():
        graph.add_edge(_SUPER_SOURCE, node, capacity=count)
    for node, count in sinks.items():
        graph.add_edge(node, _SUPER_SINK, capacity=count)
    return nx.maximum_flow_value(graph, _SUPER_SOURCE, _SUPER_SINK) >= game.n


def _route(
    game: Game,
    allowed: FrozenSet[EdgeId],
    strategies: Sequence[Sequence[Path]],
) -> Optional[StrategyProfile]:
    """First feasible profile inside `allowed` by backtracking in canonical path order."""
    options = [[p for p in paths if all(e in allowed for e in p.edges)] for paths in strategies]
    if not all(options):
        return None
    edge_map = game.network.edge_map
    load: Counter = Counter()
    chosen: List[Path] = []

    def place(agent: int, start: int) -> bool:
        if agent == game.n:
            return True
        first = start if game.is_symmetric else 0
        for index in range(first, len(options[agent])):
            path = options[agent][index]
            if all(load[e] < edge_map[e].capacity for e in path.edges):
                load.update(path.edges)
                chosen.append(path)
                if place(agent + 1, index):
                    return True
                load.subtract(path.edges)
                chosen.pop()
        return False

    return StrategyProfile(tuple(chosen)) if place(0, 0) else None


def is_game_feasible(game: Game, path_cap: int = DEFAULT_PATH_CAP) -> bool:
    strategies = strategy_sets(game, path_cap)
    return _route(game, frozenset(game.network.edge_ids), strategies) is not None


# --- Social optimum ---

def solve_optimal(
    game: Game,
    profile_cap: int = DEFAULT_PROFILE_CAP,
    path_cap: int = DEFAULT_PATH_CAP,
) -> OptimumResult:
    """
    Minimum social cost with a witness profile.

    Ties go to fewer used edges, then to the smallest sorted tuple of used
    edge ids. Branch-and-bound nodes count against `profile_cap`.
    """
    strategies = strategy_sets(game, path_cap)
    if not all(strategies):
        raise InfeasibleGameError("some agent has no path to its sink")
    edges = sorted((e for e in game.network.edges if e.capacity > 0), key=lambda e: (-e.cost, e.id))
    best: List[Tuple[OptimumKey, StrategyProfile]] = []
    explored = 0

    def search(index: int, included: List[EdgeId], cost: Fraction) -> None:
        nonlocal explored
        explored += 1
        ensure_within_cap(explored, profile_cap, "branch-and-bound nodes")
        if best and cost > best[0][0][0]:
            return
        if not _flow_feasible(game, included + [e.id for e in edges[index:]]):
            return
        if _flow_feasible(game, included):
            profile = _route(game, frozenset(included), strategies)
            if profile is not None:
                key = _key(game, profile)
                if not best or key < best[0][0]:
                    best[:] = [(key, profile)]
                return
        if index == len(edges):
            return
        edge = edges[index]
        search(index + 1, included + [edge.id], cost + edge.cost)
        search(index + 1, included, cost)

    search(0, [], Fraction(0))
    if not best:
        raise InfeasibleGameError("no feasible strategy profile exists")
    (cost, _, _), profile = best[0]
    logger.info(f"Optimum {cost} found after {explored} branch-and-bound nodes")
    return OptimumResult(profile=profile, cost=cost, nodes_explored=explored)


def solve_optimal_exhaustive(
    game: Game,
    profile_cap: int = DEFAULT_PROFILE_CAP,
    path_cap: int = DEFAULT_PATH_CAP,
) -> OptimumResult:
    """Reference optimum by scanning every profile, with the same tie rule."""
    strategies = strategy_sets(game, path_cap)
    total = count_profiles(game, strategies)
    ensure_within_cap(total, profile_cap, "strategy profiles")
    best: Optional[Tuple[OptimumKey, StrategyProfile]] = None
    for profile in iter_profiles(game, strategies):
        if not is_feasible(game, profile):
            continue
        key = _key(game, profile)
        if best is None or key < best[0]:
            best = (key, profile)
    if best is None:
        raise InfeasibleGameError("no feasible strategy profile exists")
    return OptimumResult(profile=best[1], cost=best[0][0], nodes_explored=total)


def optimal_subnetwork(network: Network, profile: StrategyProfile) -> Network:
    """G_OPT: the edges an optimal profile uses."""
    return network.restricted_to(profile.used_edges)


# --- Optimal profile matched to an equilibrium ---

def _walk(tree: DecompositionTree, agents: FrozenSet[AgentIndex], se_profile: StrategyProfile,
          oriented: Network) -> Dict[AgentIndex, Tuple[EdgeId, ...]]:
    """Edge sequences through `tree` for the agents it decides to serve."""
    if isinstance(tree, EdgeLeaf):
        return {i: (tree.edge,) for i in sorted(agents) if tree.edge in se_profile.paths[i]}

    if isinstance(tree, Parallel):
        result: Dict[AgentIndex, Tuple[EdgeId, ...]] = {}
        claimed: set = set()
        for child in tree.children:
            leaves = set(child.leaves())
            mine = frozenset(
                i for i in agents
                if i not in claimed and any(e in leaves for e in se_profile.paths[i].edges)
            )
            claimed |= mine
            result.update(_walk(child, mine, se_profile, oriented))
        return result

    children = tree.children
    ends = []
    for position in (0, len(children) - 1):
        child = children[position]
        rest = children[1:] if position == 0 else children[:-1]
        remainder = make_series(rest)
        if isinstance(child, EdgeLeaf) and is_ep_tree(remainder):
            users = sum(1 for i in agents if child.edge in se_profile.paths[i])
            ends.append((users, position, child.edge, remainder))
    # the later end wins ties
    _, position, edge_id, remainder = max(ends, key=lambda item: (item[0], item[1]))

    inner = _walk(remainder, agents, se_profile, oriented)
    edge_map = oriented.edge_map
    load: Counter = Counter()
    for sequence in inner.values():
        load.update(sequence)

    def attach(sequence: Tuple[EdgeId, ...]) -> Tuple[EdgeId, ...]:
        return (edge_id,) + sequence if position == 0 else sequence + (edge_id,)

    result = {i: attach(seq) for i, seq in inner.items()}
    load[edge_id] = len(result)
    candidates = tree_paths(remainder, oriented)
    for agent in sorted(agents):
        if agent in result or edge_id not in se_profile.paths[agent]:
            continue
        if load[edge_id] + 1 > edge_map[edge_id].capacity:
            break
        for path in candidates:
            if all(load[e] + 1 <= edge_map[e].capacity for e in path.edges):
                load.update(path.edges)
                load[edge_id] += 1
                result[agent] = attach(path.edges)
                break
    return result


def choose_optimal_profile(
    g_opt: Network,
    agents: Iterable[AgentIndex],
    se_profile: StrategyProfile,
) -> PartialProfile:
    """
    Partial optimal profile on an EP network G_OPT that follows the SE's
    edge usage as closely as possible. Agents it cannot place stay unassigned.
    """
    oriented = orient_network(g_opt)
    if oriented is None:
        raise PreconditionError("G_OPT is not series-parallel")
    tree = decompose_sp(oriented)
    if isinstance(tree, NotSP) or not is_ep_tree(tree):
        raise PreconditionError("G_OPT is not an extension-parallel network")

    sequences = _walk(tree, frozenset(agents), se_profile, oriented)
    assignments = {
        agent: path_from_edges(oriented, oriented.source, sequence)
        for agent, sequence in sorted(sequences.items())
    }
    logger.debug(f"Optimal choice placed {len(assignments)} of {se_profile.n} agents")
    return PartialProfile(n=se_profile.n, assignments=assignments)


def extend_partial_profile(g_opt: Network, template: StrategyProfile, partial: PartialProfile) -> StrategyProfile:
    """Completes `partial` one agent at a time with paths over the template's edges."""
    if template.n != partial.n:
        raise InputError(f"template has {template.n} agents, partial profile {partial.n}")
    allowed = template.used_edges
    candidates = [
        p for p in enumerate_paths(g_opt, g_opt.source, g_opt.sink)
        if all(e in allowed for e in p.edges)
    ]
    load = partial.usage()
    assignments = dict(partial.assignments)
    for agent in partial.unassigned:
        for path in candidates:
            if all(load[e] + 1 <= g_opt.edge(e).capacity for e in path.edges):
                assignments[agent] = path
                load.update(path.edges)
                break
        else:
            raise PreconditionError(f"no available path over the template's edges for agent {agent}")
    return PartialProfile(n=partial.n, assignments=assignments).to_profile()


def se_compatible_optimum(
    game: Game,
    se_profile: StrategyProfile,
    optimum: OptimumResult,
) -> StrategyProfile:
    """An optimal profile built from the SE: the EP pipeline, or block by block on SPP networks."""
    topology = classify(game.network)
    if game.is_symmetric and topology.is_ep:
        g_opt = optimal_subnetwork(game.network, optimum.profile)
        partial = choose_optimal_profile(g_opt, range(game.n), se_profile)
        return extend_partial_profile(g_opt, optimum.profile, partial)
    if topology.is_spp:
        return construct_spp_optimal_profile(game, se_profile, optimum.profile)
    raise PreconditionError("an SE-compatible optimum is only built on EP or SPP networks")


# --- Combined profiles ---

def check_combined_feasibility(
    game: Game,
    se_profile: StrategyProfile,
    opt_profile: StrategyProfile,
) -> Optional[CombinedFeasibilityViolation]:
    """
    None when (s*_C, s_-C) is feasible for every coalition C. An edge e is safe
    for all coalitions exactly when |M_e ∪ M*_e| <= c_e.
    """
    if not (is_feasible(game, se_profile) and is_feasible(game, opt_profile)):
        raise DomainError("combined feasibility needs two feasible profiles")
    users = edge_users(se_profile)
    opt_users = edge_users(opt_profile)
    for edge in game.network.edges:
        before = users.get(edge.id, frozenset())
        after = opt_users.get(edge.id, frozenset())
        load = len(before | after)
        if load > edge.capacity:
            return CombinedFeasibilityViolation(edge.id, tuple(sorted(after - before)), load, edge.capacity)
    return None


def check_combined_feasibility_exhaustive(
    game: Game,
    se_profile: StrategyProfile,
    opt_profile: StrategyProfile,
) -> Optional[CombinedFeasibilityViolation]:
    """Same question answered by trying every coalition."""
    capacity = {e.id: e.capacity for e in game.network.edges}
    for size in range(1, game.n + 1):
        for coalition in itertools.combinations(range(game.n), size):
            mixed = se_profile.with_paths({i: opt_profile.paths[i] for i in coalition})
            for edge_id in sorted(mixed.usage):
                if mixed.usage[edge_id] > capacity[edge_id]:
                    return CombinedFeasibilityViolation(edge_id, coalition, mixed.usage[edge_id], capacity[edge_id])
    return None


def construct_spp_optimal_profile(
    game: Game,
    se_profile: StrategyProfile,
    opt_profile: StrategyProfile,
) -> StrategyProfile:
    """
    Optimal profile built block by block on an SPP network: a block path used
    in the SE and by the optimum keeps its SE agents, forced segments stay,
    and everybody else takes the first open optimum path of the block.
    """
    chain = ChainLayout(game)
    g_opt = opt_profile.used_edges
    capacity = {e.id: e.capacity for e in chain.network.edges}
    pieces: Dict[AgentIndex, Dict[int, Path]] = {}
    waiting: List[Tuple[AgentIndex, int]] = []
    load: Counter = Counter()

    for agent, path in enumerate(se_profile.paths):
        pieces[agent] = {}
        route = chain.route(agent, *game.terminals(agent))
        grouped: Dict[int, List[EdgeId]] = {}
        for e in path.edges:
            grouped.setdefault(chain.block_of[e], []).append(e)
        for block in sorted(grouped):
            if block in route.partial:
                segment = route.partial[block]
            else:
                segment = path_from_edges(chain.network, chain.junctions[block], grouped[block])
                if not all(e in g_opt for e in segment.edges):
                    waiting.append((agent, block))
                    continue
            pieces[agent][block] = segment
            load.update(segment.edges)

    for agent, block in waiting:
        open_paths = [p for p in tree_paths(chain.factors[block], chain.network) if all(e in g_opt for e in p.edges)]
        for path in open_paths:
            if all(load[e] + 1 <= capacity[e] for e in path.edges):
                pieces[agent][block] = path
                load.update(path.edges)
                break
        else:
            raise DomainError(f"no open optimum path in block {block} for agent {agent}")

    paths = []
    for agent in range(game.n):
        edges = [e for block in sorted(pieces[agent]) for e in pieces[agent][block].edges]
        paths.append(path_from_edges(chain.network, game.terminals(agent)[0], edges))
    return StrategyProfile(tuple(paths))


class SolveOptimumUseCase:
    """
    Single Responsibility: exact social optimum of one game.
    """

    def __init__(self, profile_cap: int = DEFAULT_PROFILE_CAP, path_cap: int = DEFAULT_PATH_CAP):
        self.profile_cap = profile_cap
        self.path_cap = path_cap

    def execute(self, game: Game) -> OptimumResult:
        return solve_optimal(game, profile_cap=self.profile_cap, path_cap=self.path_cap)
