# core/use_cases/build_instance.py
"""
Named example games, the no-SE emulation on non-SPP networks, and seeded
random game generators.

Every named builder carries the list of facts its frozen values were checked
against; the unit tests re-check them by enumeration.
"""
import itertools
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx

from ..domain.embedding import find_forbidden_embedding
from ..domain.exceptions import DomainError, InputError, PreconditionError
from ..domain.models import (
    Agents,
    AsymmetricAgents,
    DecompositionTree,
    Edge,
    EdgeId,
    EdgeLeaf,
    ForbiddenPattern,
    Game,
    InstanceSpec,
    Network,
    NodeId,
    SymmetricAgents,
    TopologyClass,
    TopologyTarget,
)
from ..domain.services import parse_rational
from ..domain.topology import (
    classify,
    compose_series,
    edges_on_paths,
    make_parallel,
    make_series,
    network_from_tree,
)
from .find_equilibria import enumerate_equilibria
from .solve_optimum import is_game_feasible

logger = logging.getLogger(__name__)

F = Fraction
Value = Tuple[Fraction, int]

COST_GRID: Tuple[Fraction, ...] = tuple(F(k, 2) for k in range(7))
MAX_ATTEMPTS = 200


def _network(nodes: Sequence[NodeId], edges: Sequence[Tuple[EdgeId, NodeId, NodeId, Fraction, int]],
             source: NodeId = "s", sink: NodeId = "t") -> Network:
    return Network(
        nodes=tuple(nodes),
        edges=tuple(Edge(i, u, v, F(p), c) for i, u, v, p, c in edges),
        source=source,
        sink=sink,
    )


# --- Named instances ---

FIG1_CONSTRAINTS = (
    "cost of [a] alone is 1",
    "cost of [b,c] alone is 13/10",
    "joint move to ([b,c],[b,d]) costs (7/10, 11/10)",
    "the unique NE orbit is ([a],[b,c])",
    "no strong equilibrium exists",
)


def build_fig1() -> Game:
    """Two agents on Parallel(a, Series(b, Parallel(c, d))) without a strong equilibrium."""
    network = _network(
        ("s", "v", "t"),
        [
            ("a", "s", "t", F(1), 1),
            ("b", "s", "v", F(6, 5), 2),
            ("c", "v", "t", F(1, 10), 1),
            ("d", "v", "t", F(1, 2), 1),
        ],
    )
    return Game(network, SymmetricAgents(2))


BRAESS_VALUES: Dict[str, Value] = {
    "su": (F(6, 5), 2),
    "ut": (F(1, 10), 1),
    "sv": (F(1), 1),
    "vt": (F(0), 1),
    "uv": (F(1, 2), 1),
}
SPLIT_VALUES: Dict[str, Value] = {
    "A": (F(1), 1),
    "B": (F(6, 5), 2),
    "C1": (F(1, 10), 1),
    "C2": (F(1, 2), 1),
}

FIG2_CONSTRAINTS = (
    "NE set is {([su,ut],[sv,vt])}",
    "no strong equilibrium exists",
    "optimum is 9/5",
)


def build_fig2_braess() -> Game:
    """Two agents on the Braess graph without a strong equilibrium."""
    ends = {"su": ("s", "u"), "ut": ("u", "t"), "sv": ("s", "v"), "vt": ("v", "t"), "uv": ("u", "v")}
    network = _network(
        ("s", "u", "v", "t"),
        [(e, *ends[e], *BRAESS_VALUES[e]) for e in ("su", "ut", "sv", "vt", "uv")],
    )
    return Game(network, SymmetricAgents(2))


FIG4_CONSTRAINTS = (
    "every agent on one cost-1 edge and free edges elsewhere is a strong equilibrium of cost n",
    "optimum is 1+eps",
    "SPoA is n/(1+eps)",
)


def build_fig4_sp_spoa(n: int, eps: Fraction, homogeneous: bool = False) -> Game:
    """
    Chain s = w0 -> ... -> wn = t where each step offers a free edge of
    capacity n-1 and a cost-1 edge of capacity 1, beside a lower s->t edge of
    cost 1+eps. With `homogeneous` every free edge is split into n-1 parallel
    capacity-1 edges.
    """
    eps = parse_rational(eps)
    if n < 2:
        raise InputError("this instance needs n >= 2")
    if not 0 < eps < 1:
        raise InputError("this instance needs 0 < eps < 1")
    nodes = ["s"] + [f"w{i}" for i in range(1, n)] + ["t"]
    edges = []
    for i in range(n):
        u, v = nodes[i], nodes[i + 1]
        if homogeneous:
            edges.extend((f"z{i + 1}_{j + 1}", u, v, F(0), 1) for j in range(n - 1))
        else:
            edges.append((f"z{i + 1}", u, v, F(0), n - 1))
        edges.append((f"o{i + 1}", u, v, F(1), 1))
    edges.append(("low", "s", "t", 1 + eps, 1))
    return Game(_network(nodes, edges), SymmetricAgents(n))


FIG5_CONSTRAINTS = (
    "the profile avoiding the inner edges is a strong equilibrium of cost 24R+5",
    "optimum is 24",
    "network is not series-parallel",
)


def build_fig5_unbounded_spoa(r: Fraction) -> Game:
    """Two agents; the inner crossing edges make the cheap optimum reachable only jointly."""
    r = parse_rational(r)
    if r < 1:
        raise InputError("this instance needs R >= 1")
    network = _network(
        ("s", "u1", "u2", "v1", "v2", "t"),
        [
            ("su1", "s", "u1", F(1), 1),
            ("u1u2", "u1", "u2", F(1), 1),
            ("u2t", "u2", "t", F(1), 1),
            ("sv1", "s", "v1", F(1), 1),
            ("v1v2", "v1", "v2", 24 * r, 1),
            ("v2t", "v2", "t", F(1), 1),
            ("u1v2", "u1", "v2", F(10), 1),
            ("v1u2", "v1", "u2", F(10), 1),
        ],
    )
    return Game(network, SymmetricAgents(2))


FIG6_CONSTRAINTS = (
    "every strong equilibrium has social cost n",
    "optimum is 3/2+eps",
    "SPoS is n/(3/2+eps)",
)


def build_fig6_sp_spos(n: int, eps: Fraction) -> Game:
    """
    Upper chain of n-1 steps, each a free edge of capacity n-2 and a cost-1
    edge; lower part a direct (1, 1) edge and s->u (1+eps, 2) followed by two
    u->t branches costing 0 and 1/2.
    """
    eps = parse_rational(eps)
    if n < 3:
        raise InputError("this instance needs n >= 3")
    if not 0 < eps < 1:
        raise InputError("this instance needs 0 < eps < 1")
    upper = ["s"] + [f"v{i}" for i in range(1, n - 1)] + ["t"]
    edges = []
    for i in range(n - 1):
        u, v = upper[i], upper[i + 1]
        edges.append((f"z{i + 1}", u, v, F(0), n - 2))
        edges.append((f"o{i + 1}", u, v, F(1), 1))
    edges.extend([
        ("d", "s", "t", F(1), 1),
        ("su", "s", "u", 1 + eps, 2),
        ("z", "u", "t", F(0), 1),
        ("h", "u", "t", F(1, 2), 1),
    ])
    nodes = upper[:-1] + ["u", "t"]
    return Game(_network(nodes, edges), SymmetricAgents(n))


FIG7_CONSTRAINTS = (
    "the unique SE orbit is ([se,ec,cd,db,bt], [sa,ab,bt_r]) with costs (3/5, R+13/10)",
    "([sa,ac,cd,db,bt], [se,et]) is a NE but not a SE",
    "optimum is 19/10",
    "in the undirected twin every SE uses bt_r",
)


def build_fig7_unbounded_spos(r: Fraction) -> Game:
    """Two agents; the only strong equilibrium pays R on the parallel copy of (b, t)."""
    r = parse_rational(r)
    if r < 1:
        raise InputError("this instance needs R >= 1")
    network = _network(
        ("s", "a", "b", "c", "d", "e", "t"),
        [
            ("sa", "s", "a", F(11, 10), 2),
            ("se", "s", "e", F(1, 5), 1),
            ("ab", "a", "b", F(1, 5), 1),
            ("ac", "a", "c", F(0), 1),
            ("bt", "b", "t", F(0), 1),
            ("bt_r", "b", "t", r, 1),
            ("cd", "c", "d", F(1, 10), 1),
            ("db", "d", "b", F(0), 1),
            ("dt", "d", "t", F(1, 2), 1),
            ("ec", "e", "c", F(3, 10), 1),
            ("et", "e", "t", F(4, 5), 1),
        ],
    )
    return Game(network, SymmetricAgents(2))


FIG8_CONSTRAINTS = (
    "(r, [z1,z2]) is a SE of cost R",
    "(z1, [o]) is a SE of cost 1",
    "SPoA is R",
    "network is EP but not SPP",
)


def build_fig8_asymmetric(r: Fraction) -> Game:
    """Agent 0 travels s->t1 and agent 1 travels s->t2 over a shared free edge."""
    r = parse_rational(r)
    if r < 1:
        raise InputError("this instance needs R >= 1")
    network = _network(
        ("s", "t1", "t2"),
        [
            ("r", "s", "t1", r, 1),
            ("z1", "s", "t1", F(0), 1),
            ("z2", "t1", "t2", F(0), 1),
            ("o", "s", "t2", F(1), 1),
        ],
        sink="t2",
    )
    return Game(network, AsymmetricAgents((("s", "t1"), ("s", "t2"))))


WALKTHROUGH_CONSTRAINTS = (
    "agents 0-2 on [e8,e5], 3-4 on [x,e5], 5 on [low] is a SE",
    "optimum is 21 on {e8, e5, low}",
    "the optimal choice leaves agent 4 without a path; completion sends it to [low]",
    "combined feasibility holds",
)


def build_optimal_choice_walkthrough() -> Game:
    """Six agents on Parallel(low, Series(Parallel(e8, x), e5))."""
    network = _network(
        ("s", "m", "t"),
        [
            ("e8", "s", "m", F(8), 4),
            ("x", "s", "m", F(4), 2),
            ("e5", "m", "t", F(5), 5),
            ("low", "s", "t", F(8), 2),
        ],
    )
    return Game(network, SymmetricAgents(6))


# --- No-SE emulation ---

def build_no_se_game(network: Network) -> Game:
    """
    Two-agent game without a strong equilibrium on any non-SPP network.

    A forbidden pattern is located on three s-t paths and loaded with the
    values of the smallest games without SE: the first host edge of every
    pattern edge carries its value, further host edges of the same pattern
    edge are free, edges shared by all three paths are free with capacity 2,
    and every other edge is closed (capacity 0).
    """
    if classify(network).is_spp:
        raise PreconditionError("every game on an SPP network has a strong equilibrium")
    witness = find_forbidden_embedding(network)
    if witness is None:
        raise DomainError("no forbidden pattern found in a non-SPP network")
    seeds = BRAESS_VALUES if witness.pattern is ForbiddenPattern.BRAESS else SPLIT_VALUES

    values: Dict[EdgeId, Value] = {e.id: (F(0), 0) for e in network.edges}
    for e in witness.glue_edges:
        values[e] = (F(0), 2)
    for label, host_edges in witness.edge_map.items():
        cost, capacity = seeds[label]
        values[host_edges[0]] = (cost, capacity)
        for e in host_edges[1:]:
            values[e] = (F(0), capacity)
    logger.info(f"Emulating the {witness.pattern.value} pattern")
    return Game(network.with_values(values), SymmetricAgents(2))


CostChoices = Union[Sequence[Fraction], Mapping[EdgeId, Sequence[Fraction]]]
CapacityChoices = Union[Sequence[int], Mapping[EdgeId, Sequence[int]]]


def search_no_se_game(
    network: Network,
    agents: Agents,
    cost_choices: CostChoices,
    capacity_choices: CapacityChoices,
    max_trials: int = 10_000,
) -> Optional[Game]:
    """
    First valuation, in itertools.product order over the edges, that gives a
    feasible game without a strong equilibrium; None when the grid or the
    trial budget runs out. Choices can be shared or given per edge.
    """
    def per_edge(choices, edge_id):
        return choices[edge_id] if isinstance(choices, Mapping) else choices

    grids = [
        [(F(c), k) for c in per_edge(cost_choices, e.id) for k in per_edge(capacity_choices, e.id)]
        for e in network.edges
    ]
    for trial, combo in enumerate(itertools.product(*grids)):
        if trial >= max_trials:
            break
        game = Game(network.with_values(dict(zip(network.edge_ids, combo))), agents)
        sets = enumerate_equilibria(game)
        if sets.stats.feasible_profiles and not sets.se:
            logger.info(f"No-SE valuation found after {trial + 1} trial(s)")
            return game
    return None


# --- Random generators ---

class _Labels:
    def __init__(self):
        self.count = 0

    def leaf(self) -> EdgeLeaf:
        self.count += 1
        return EdgeLeaf(f"e{self.count}")


def _random_sp_tree(rng: random.Random, k: int, labels: _Labels) -> DecompositionTree:
    if k == 1:
        return labels.leaf()
    left = rng.randint(1, k - 1)
    parts = [_random_sp_tree(rng, left, labels), _random_sp_tree(rng, k - left, labels)]
    return make_series(parts) if rng.random() < 0.5 else make_parallel(parts)


def _random_ep_tree(rng: random.Random, k: int, labels: _Labels) -> DecompositionTree:
    if k == 1:
        return labels.leaf()
    if rng.random() < 0.5:
        left = rng.randint(1, k - 1)
        return make_parallel([_random_ep_tree(rng, left, labels), _random_ep_tree(rng, k - left, labels)])
    edge = labels.leaf()
    rest = _random_ep_tree(rng, k - 1, labels)
    return make_series([edge, rest] if rng.random() < 0.5 else [rest, edge])


def _random_chain(length: int, labels: _Labels) -> DecompositionTree:
    return make_series([labels.leaf() for _ in range(length)])


def _random_paths_block(rng: random.Random, k: int, labels: _Labels, max_length: int = 3) -> DecompositionTree:
    """Parallel simple paths with k edges in total."""
    paths = []
    while k > 0:
        length = rng.randint(1, min(max_length, k))
        paths.append(_random_chain(length, labels))
        k -= length
    return make_parallel(paths)


def _random_edges_block(rng: random.Random, k: int, labels: _Labels) -> DecompositionTree:
    return make_parallel([labels.leaf() for _ in range(k)])


def _split(rng: random.Random, total: int, parts: int) -> List[int]:
    """`parts` positive sizes summing to `total`."""
    cuts = sorted(rng.sample(range(1, total), parts - 1)) if parts > 1 else []
    bounds = [0] + cuts + [total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def _random_spp_tree(rng: random.Random, k: int, labels: _Labels) -> DecompositionTree:
    blocks = rng.randint(1, min(3, k))
    return make_series([_random_paths_block(rng, size, labels) for size in _split(rng, k, blocks)])


def _general_network(rng: random.Random, max_edges: int) -> Optional[Network]:
    inner = rng.randint(1, 4)
    order = ["s"] + [f"v{i}" for i in range(1, inner + 1)] + ["t"]
    count = rng.randint(3, max(3, max_edges))
    edges = []
    for index in range(count):
        i, j = sorted(rng.sample(range(len(order)), 2))
        edges.append(Edge(f"e{index + 1}", order[i], order[j], F(1), 1))
    draft = Network(nodes=tuple(order), edges=tuple(edges), source="s", sink="t")
    live = edges_on_paths(draft)
    if not live:
        return None
    kept = tuple(e for e in edges if e.id in live)
    touched = {n for e in kept for n in (e.tail, e.head)}
    return Network(nodes=tuple(n for n in order if n in touched), edges=kept, source="s", sink="t")


def random_general_network(seed: int, max_edges: int) -> Network:
    """Random two-terminal DAG in which every edge lies on an s-t path."""
    rng = random.Random(seed)
    for _ in range(MAX_ATTEMPTS):
        network = _general_network(rng, max_edges)
        if network is not None:
            return network
    raise DomainError(f"no connected network drawn for seed {seed}")


def _topology_matches(target: TopologyTarget, topology: TopologyClass) -> bool:
    return {
        TopologyTarget.PARALLEL_EDGES: topology.is_parallel_edges,
        TopologyTarget.PARALLEL_PATHS: topology.is_parallel_paths,
        TopologyTarget.SPP: topology.is_spp,
        TopologyTarget.EP: topology.is_ep,
        TopologyTarget.SP: topology.is_sp,
        TopologyTarget.NON_SPP: not topology.is_spp,
        TopologyTarget.GENERAL: True,
    }[target]


def _random_shape(rng: random.Random, target: TopologyTarget, max_edges: int) -> Optional[Network]:
    labels = _Labels()
    k = rng.randint(1, max_edges)
    if target is TopologyTarget.PARALLEL_EDGES:
        tree = _random_edges_block(rng, k, labels)
    elif target is TopologyTarget.PARALLEL_PATHS:
        tree = _random_paths_block(rng, k, labels)
    elif target is TopologyTarget.SPP:
        tree = _random_spp_tree(rng, k, labels)
    elif target is TopologyTarget.EP:
        tree = _random_ep_tree(rng, k, labels)
    elif target is TopologyTarget.SP:
        tree = _random_sp_tree(rng, k, labels)
    else:
        return _general_network(rng, max_edges)
    return network_from_tree(tree)


def _assign_values(rng: random.Random, network: Network, n: int, homogeneous_capacity: Optional[int]) -> Network:
    values = {}
    for edge in network.edges:
        capacity = homogeneous_capacity if homogeneous_capacity is not None else rng.randint(0, n + 1)
        values[edge.id] = (rng.choice(COST_GRID), capacity)
    return network.with_values(values)


def random_game(
    target: TopologyTarget,
    n: int,
    max_edges: int,
    seed: int,
    homogeneous_capacity: Optional[int] = None,
) -> Game:
    """
    Seeded feasible symmetric game on a network of the requested family.
    Costs come from COST_GRID, capacities from 0..n+1 unless fixed.
    """
    if n < 1 or max_edges < 1:
        raise InputError("random games need n >= 1 and max_edges >= 1")
    rng = random.Random(seed)
    for attempt in range(MAX_ATTEMPTS):
        shape = _random_shape(rng, target, max_edges)
        if shape is None or not _topology_matches(target, classify(shape)):
            continue
        game = Game(_assign_values(rng, shape, n, homogeneous_capacity), SymmetricAgents(n))
        if is_game_feasible(game):
            logger.debug(f"Random {target.value} game accepted after {attempt + 1} draw(s)")
            return game
    raise DomainError(f"no feasible {target.value} game found for seed {seed}")


def _draw_agents(rng: random.Random, network: Network, n: int, same_source: bool) -> AsymmetricAgents:
    graph = nx.MultiDiGraph()
    graph.add_edges_from((e.tail, e.head) for e in network.edges)
    starts = [network.source] if same_source else [v for v in network.nodes if nx.descendants(graph, v)]
    terminals = []
    for _ in range(n):
        source = rng.choice(starts)
        sink = rng.choice(sorted(nx.descendants(graph, source), key=network.nodes.index))
        terminals.append((source, sink))
    return AsymmetricAgents(tuple(terminals))


def random_single_source_game(seed: int, n: int, max_edges: int) -> Game:
    """Seeded feasible asymmetric game on an SPP network where every agent starts at s."""
    rng = random.Random(seed)
    for _ in range(MAX_ATTEMPTS):
        shape = network_from_tree(_random_spp_tree(rng, rng.randint(1, max_edges), _Labels()))
        game = Game(_assign_values(rng, shape, n, None), _draw_agents(rng, shape, n, same_source=True))
        if is_game_feasible(game):
            return game
    raise DomainError(f"no feasible single-source game found for seed {seed}")


def random_multi_source_game(seed: int, n: int, max_edges: int) -> Game:
    """
    Seeded feasible asymmetric game on a chain of parallel-edge blocks with at
    most one parallel-path block; sources and sinks anywhere along the chain.
    """
    rng = random.Random(seed)
    for _ in range(MAX_ATTEMPTS):
        labels = _Labels()
        k = rng.randint(1, max_edges)
        sizes = _split(rng, k, rng.randint(1, min(3, k)))
        special = rng.randrange(len(sizes)) if rng.random() < 0.7 else None
        blocks = [
            _random_paths_block(rng, size, labels) if index == special else _random_edges_block(rng, size, labels)
            for index, size in enumerate(sizes)
        ]
        shape = network_from_tree(make_series(blocks))
        game = Game(_assign_values(rng, shape, n, None), _draw_agents(rng, shape, n, same_source=False))
        if is_game_feasible(game):
            return game
    raise DomainError(f"no feasible multi-source game found for seed {seed}")


def compose_series_games(first: Game, second: Game) -> Game:
    """Symmetric game on first -> second with the same number of agents."""
    if not (first.is_symmetric and second.is_symmetric) or first.n != second.n:
        raise InputError("series composition needs two symmetric games with equal n")
    return Game(compose_series([first.network, second.network]), SymmetricAgents(first.n))


def undirected_twin(game: Game) -> Game:
    return game.with_network(game.network.as_undirected())


# --- Registry ---

@dataclass(frozen=True)
class InstanceRecipe:
    build: Callable[..., Game]
    params: Tuple[str, ...]
    constraints: Tuple[str, ...]


RECIPES: Dict[str, InstanceRecipe] = {
    "fig1": InstanceRecipe(lambda **_: build_fig1(), (), FIG1_CONSTRAINTS),
    "fig2": InstanceRecipe(lambda **_: build_fig2_braess(), (), FIG2_CONSTRAINTS),
    "fig4": InstanceRecipe(lambda n, eps, **_: build_fig4_sp_spoa(n, eps), ("n", "eps"), FIG4_CONSTRAINTS),
    "fig4-homogeneous": InstanceRecipe(
        lambda n, eps, **_: build_fig4_sp_spoa(n, eps, homogeneous=True), ("n", "eps"), FIG4_CONSTRAINTS
    ),
    "fig5": InstanceRecipe(lambda r, **_: build_fig5_unbounded_spoa(r), ("r",), FIG5_CONSTRAINTS),
    "fig6": InstanceRecipe(lambda n, eps, **_: build_fig6_sp_spos(n, eps), ("n", "eps"), FIG6_CONSTRAINTS),
    "fig7": InstanceRecipe(lambda r, **_: build_fig7_unbounded_spos(r), ("r",), FIG7_CONSTRAINTS),
    "fig8": InstanceRecipe(lambda r, **_: build_fig8_asymmetric(r), ("r",), FIG8_CONSTRAINTS),
    "walkthrough": InstanceRecipe(lambda **_: build_optimal_choice_walkthrough(), (), WALKTHROUGH_CONSTRAINTS),
    "random": InstanceRecipe(
        lambda n, seed, family, max_edges, **_: random_game(TopologyTarget(family), n, max_edges, seed),
        ("n", "seed", "family", "max_edges"),
        ("classification flags match the family", "the game is feasible"),
    ),
}


class BuildInstanceUseCase:
    """
    Single Responsibility: turn an instance tag and parameters into a game.
    """

    def __init__(self, default_eps: Fraction = F(1, 10), default_r: Fraction = F(100), default_seed: int = 0):
        self.default_eps = default_eps
        self.default_r = default_r
        self.default_seed = default_seed

    def execute(
        self,
        tag: str,
        n: Optional[int] = None,
        eps: Optional[Fraction] = None,
        r: Optional[Fraction] = None,
        seed: Optional[int] = None,
        family: str = TopologyTarget.SPP.value,
        max_edges: int = 6,
    ) -> Tuple[Game, InstanceSpec]:
        """
        Args:
            tag: One of RECIPES.
            n: Agent count for the parametric instances and random games.
            eps, r: Rational parameters; settings defaults when None.
            seed: Random seed for "random".
            family: TopologyTarget value for "random".
            max_edges: Edge budget for "random".

        Raises:
            InputError: Unknown tag or parameters outside an instance's range.
        """
        if tag not in RECIPES:
            raise InputError(f"unknown instance '{tag}' (choose from {', '.join(RECIPES)})")
        recipe = RECIPES[tag]
        arguments = {
            "n": n if n is not None else (2 if tag == "random" else 3),
            "eps": parse_rational(eps) if eps is not None else self.default_eps,
            "r": parse_rational(r) if r is not None else self.default_r,
            "seed": seed if seed is not None else self.default_seed,
            "family": family,
            "max_edges": max_edges,
        }
        try:
            game = recipe.build(**arguments)
        except ValueError as e:
            if isinstance(e, InputError):
                raise
            raise InputError(str(e)) from e
        params = {name: arguments[name] for name in recipe.params}
        logger.info(f"Built instance '{tag}' with {params}")
        return game, InstanceSpec(tag=tag, params=params, constraints=recipe.constraints)
