# core/domain/services.py
"""
Cost model of capacitated cost-sharing games.

Every agent on edge e pays p_e / x_e, where x_e is the number of agents using
e. A profile is feasible when x_e <= c_e everywhere; in an infeasible profile
every agent pays INF.
"""
import itertools
import logging
import math
import re
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from .exceptions import DomainError, InputError, ResourceLimitError
from .models import (
    INF,
    AgentIndex,
    CostValue,
    EdgeId,
    Game,
    Network,
    NodeId,
    Path,
    StrategyProfile,
)

logger = logging.getLogger(__name__)

DEFAULT_PROFILE_CAP = 1_000_000
DEFAULT_PATH_CAP = 100_000

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")
_DECIMAL_HINT = "decimals are not accepted, write a fraction such as '1/10'"


# --- Rationals ---

def parse_rational(value) -> Fraction:
    """Parses an integer or a 'p/q' literal. Decimal literals are rejected."""
    if isinstance(value, bool):
        raise InputError(f"expected a rational, got {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise InputError(f"{value!r}: {_DECIMAL_HINT}")
    if not isinstance(value, str):
        raise InputError(f"expected a rational, got {value!r}")
    match = _RATIONAL.match(value)
    if not match:
        if "." in value or "e" in value.lower():
            raise InputError(f"'{value}': {_DECIMAL_HINT}")
        raise InputError(f"'{value}' is not a rational literal (use an integer or 'p/q')")
    numerator, denominator = int(match.group(1)), int(match.group(2) or 1)
    if denominator == 0:
        raise InputError(f"'{value}' has a zero denominator")
    return Fraction(numerator, denominator)


def format_cost(value: Optional[CostValue]) -> str:
    if value is None:
        return "undefined"
    if value is INF:
        return "inf"
    return str(value)


@lru_cache(maxsize=None)
def harmonic(k: int) -> Fraction:
    """H_k with H_0 = 0."""
    if k < 0:
        raise InputError("harmonic numbers need k >= 0")
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


# --- Graph plumbing ---

def to_networkx(network: Network, edge_ids: Optional[Iterable[EdgeId]] = None):
    """MultiDiGraph (or MultiGraph) keyed by edge id, restricted to `edge_ids` if given."""
    graph = nx.MultiDiGraph() if network.directed else nx.MultiGraph()
    graph.add_nodes_from(network.nodes)
    wanted = None if edge_ids is None else set(edge_ids)
    for edge in network.edges:
        if wanted is not None and edge.id not in wanted:
            continue
        graph.add_edge(edge.tail, edge.head, key=edge.id, cost=edge.cost, capacity=edge.capacity)
    return graph


def enumerate_paths(
    network: Network,
    source: NodeId,
    sink: NodeId,
    path_cap: int = DEFAULT_PATH_CAP,
) -> List[Path]:
    """
    All simple source->sink paths in canonical order (by edge-id sequence).

    Undirected networks allow both traversal directions; Path.nodes records the
    direction taken. Capacity-0 edges are included.
    """
    for node in (source, sink):
        if not network.has_node(node):
            raise InputError(f"unknown node id '{node}'")
    if source == sink:
        raise InputError("source and sink must differ")

    graph = to_networkx(network)
    paths: List[Path] = []
    for edge_path in nx.all_simple_edge_paths(graph, source, sink):
        nodes = [source]
        ids = []
        for _, head, key in edge_path:
            ids.append(key)
            nodes.append(head)
        paths.append(Path(tuple(ids), tuple(nodes)))
        if len(paths) > path_cap:
            raise ResourceLimitError(f"simple paths from '{source}' to '{sink}'", len(paths), path_cap)
    paths.sort()
    return paths


def path_cost(network: Network, path: Path) -> Fraction:
    """Cost of a path used by a single agent."""
    return sum((network.edge(e).cost for e in path.edges), Fraction(0))


def path_capacity(network: Network, path: Path) -> int:
    return min(network.edge(e).capacity for e in path.edges)


def path_from_edges(network: Network, source: NodeId, edge_ids: Sequence[EdgeId]) -> Path:
    """Walks `edge_ids` from `source`, recording the node sequence."""
    if not edge_ids:
        raise InputError("a path needs at least one edge")
    nodes = [source]
    current = source
    for edge_id in edge_ids:
        edge = network.edge(edge_id)
        if edge.tail == current:
            current = edge.head
        elif not network.directed and edge.head == current:
            current = edge.tail
        else:
            raise InputError(f"edge '{edge_id}' does not continue the walk at node '{current}'")
        nodes.append(current)
    if len(set(nodes)) != len(nodes):
        raise InputError(f"walk {list(edge_ids)} repeats a node")
    return Path(tuple(edge_ids), tuple(nodes))


def validate_path(network: Network, path: Path, source: NodeId, sink: NodeId) -> None:
    if path.source != source or path.sink != sink:
        raise InputError(
            f"path {path.label()} runs {path.source}->{path.sink}, expected {source}->{sink}"
        )
    rebuilt = path_from_edges(network, source, path.edges)
    if rebuilt.nodes != path.nodes:
        raise InputError(f"path {path.label()} records an inconsistent node sequence")


def validate_profile(game: Game, profile: StrategyProfile) -> None:
    if profile.n != game.n:
        raise InputError(f"profile has {profile.n} paths for {game.n} agents")
    for agent, path in enumerate(profile.paths):
        source, sink = game.terminals(agent)
        validate_path(game.network, path, source, sink)


def profile_from_edge_lists(game: Game, edge_lists: Sequence[Sequence[EdgeId]]) -> StrategyProfile:
    if len(edge_lists) != game.n:
        raise InputError(f"expected {game.n} paths, got {len(edge_lists)}")
    paths = []
    for agent, edge_ids in enumerate(edge_lists):
        source, sink = game.terminals(agent)
        path = path_from_edges(game.network, source, list(edge_ids))
        validate_path(game.network, path, source, sink)
        paths.append(path)
    return StrategyProfile(tuple(paths))


# --- Costs ---

def usage_is_feasible(network: Network, usage: Mapping[EdgeId, int]) -> bool:
    edge_map = network.edge_map
    return all(count <= edge_map[e].capacity for e, count in usage.items())


def shared_cost(network: Network, path: Path, usage: Mapping[EdgeId, int]) -> Fraction:
    """Σ p_e / x_e along `path` for a usage map that already counts this path."""
    edge_map = network.edge_map
    return sum((edge_map[e].cost / usage[e] for e in path.edges), Fraction(0))


def is_feasible(game: Game, profile: StrategyProfile) -> bool:
    if profile.n != game.n:
        raise InputError(f"profile has {profile.n} paths for {game.n} agents")
    return usage_is_feasible(game.network, profile.usage)


def agent_cost(game: Game, profile: StrategyProfile, agent: AgentIndex) -> CostValue:
    if not is_feasible(game, profile):
        return INF
    return shared_cost(game.network, profile.paths[agent], profile.usage)


def agent_costs(game: Game, profile: StrategyProfile) -> Tuple[CostValue, ...]:
    if not is_feasible(game, profile):
        return tuple(INF for _ in profile.paths)
    return tuple(shared_cost(game.network, path, profile.usage) for path in profile.paths)


def social_cost(game: Game, profile: StrategyProfile) -> CostValue:
    """Σ_i p_i(s), computed as the total cost of the used edges."""
    if not is_feasible(game, profile):
        return INF
    edge_map = game.network.edge_map
    return sum((edge_map[e].cost for e in profile.usage), Fraction(0))


def potential(game: Game, profile: StrategyProfile) -> Fraction:
    """Φ(s) = Σ_e p_e · H_{x_e(s)}."""
    if not is_feasible(game, profile):
        raise DomainError("the potential is only defined on feasible profiles")
    edge_map = game.network.edge_map
    return sum((edge_map[e].cost * harmonic(x) for e, x in profile.usage.items()), Fraction(0))


# --- Strategy spaces ---

def strategy_sets(game: Game, path_cap: int = DEFAULT_PATH_CAP) -> List[List[Path]]:
    """Σ_i for every agent; agents sharing terminals share one list."""
    cache: Dict[Tuple[NodeId, NodeId], List[Path]] = {}
    sets = []
    for source, sink in game.terminal_list():
        if (source, sink) not in cache:
            cache[(source, sink)] = enumerate_paths(game.network, source, sink, path_cap)
        sets.append(cache[(source, sink)])
    return sets


def count_profiles(game: Game, strategies: Sequence[Sequence[Path]]) -> int:
    if game.is_symmetric:
        count = len(strategies[0])
        return math.comb(count + game.n - 1, game.n) if count else 0
    return math.prod(len(paths) for paths in strategies)


def ensure_within_cap(required: int, cap: int, what: str) -> None:
    if required > cap:
        raise ResourceLimitError(what, required, cap)


def iter_profiles(game: Game, strategies: Sequence[Sequence[Path]]) -> Iterator[StrategyProfile]:
    """Symmetric games yield one sorted multiset per orbit; others the full product."""
    if game.is_symmetric:
        for combo in itertools.combinations_with_replacement(strategies[0], game.n):
            yield StrategyProfile(combo)
    else:
        for combo in itertools.product(*strategies):
            yield StrategyProfile(combo)


def edge_users(profile: StrategyProfile) -> Dict[EdgeId, frozenset]:
    users: Dict[EdgeId, set] = {}
    for agent, path in enumerate(profile.paths):
        for e in path.edges:
            users.setdefault(e, set()).add(agent)
    return {e: frozenset(agents) for e, agents in users.items()}


def usage_counter(paths: Iterable[Path]) -> Counter:
    counts: Counter = Counter()
    for path in paths:
        counts.update(path.edges)
    return counts


def standalone_costs(network: Network, paths: Iterable[Path]) -> List[Fraction]:
    """Cost of each path when its user is alone on it."""
    return [path_cost(network, path) for path in paths]


# --- Orbits of symmetric games ---

def canonical_profile(game: Game, profile: StrategyProfile) -> StrategyProfile:
    """Orbit representative: sorted for symmetric games, unchanged otherwise."""
    return profile.canonical() if game.is_symmetric else profile


def expand_orbit(profile: StrategyProfile) -> List[StrategyProfile]:
    """Every distinct assignment of the profile's paths to agents, in canonical order."""
    orbit = {StrategyProfile(perm) for perm in itertools.permutations(profile.paths)}
    return sorted(orbit, key=lambda p: p.paths)


# --- Walks ---

def strip_zero_cost_cycles(network: Network, source: NodeId, edge_ids: Sequence[EdgeId]) -> Path:
    """
    Turns a walk into a simple path by cutting out its closed sub-walks.
    Raises DomainError when a removed cycle has positive cost.
    """
    if not edge_ids:
        raise InputError("a walk needs at least one edge")
    nodes: List[NodeId] = [source]
    kept: List[EdgeId] = []
    current = source
    for edge_id in edge_ids:
        edge = network.edge(edge_id)
        if edge.tail == current:
            current = edge.head
        elif not network.directed and edge.head == current:
            current = edge.tail
        else:
            raise InputError(f"edge '{edge_id}' does not continue the walk at node '{current}'")
        kept.append(edge_id)
        if current in nodes:
            start = nodes.index(current)
            cycle = kept[start:]
            cycle_cost = sum((network.edge(e).cost for e in cycle), Fraction(0))
            if cycle_cost != 0:
                raise DomainError(f"walk closes a cycle {cycle} of positive cost {cycle_cost}")
            del kept[start:]
            del nodes[start + 1:]
        else:
            nodes.append(current)
    return Path(tuple(kept), tuple(nodes))
