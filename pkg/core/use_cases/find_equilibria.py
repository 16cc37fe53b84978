# core/use_cases/find_equilibria.py
"""
Nash and strong equilibrium verification by exhaustive deviation search.

Agents that share terminals and a current path are interchangeable, so a
coalition is described by how many members it takes from each such class.
Joint moves of one class are multisets of candidate paths; a candidate must
fit next to the non-members and must be able to beat the member's cost even
under the most favourable sharing inside the coalition.
"""
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from ..domain.exceptions import DomainError
from ..domain.interfaces import TaskRunner
from ..domain.models import (
    AgentIndex,
    CostValue,
    DeviationWitness,
    EnumerationStats,
    EquilibriumSets,
    Game,
    Path,
    StrategyProfile,
)
from ..domain.services import (
    DEFAULT_PATH_CAP,
    DEFAULT_PROFILE_CAP,
    agent_costs,
    count_profiles,
    ensure_within_cap,
    is_feasible,
    iter_profiles,
    shared_cost,
    strategy_sets,
    usage_counter,
    validate_profile,
)

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 512


def _require_feasible(game: Game, profile: StrategyProfile) -> None:
    if not is_feasible(game, profile):
        raise DomainError("equilibrium checks need a feasible profile")


def verify_ne(
    game: Game,
    profile: StrategyProfile,
    strategies: Optional[Sequence[Sequence[Path]]] = None,
) -> Optional[DeviationWitness]:
    """
    Returns None when no agent can strictly lower its cost alone, otherwise
    the first improving move in (agent, canonical path) order.
    """
    _require_feasible(game, profile)
    strategies = strategies or strategy_sets(game)
    network = game.network
    usage = profile.usage
    costs = agent_costs(game, profile)

    for agent, current in enumerate(profile.paths):
        old = costs[agent]
        if old == 0:
            continue
        for path in strategies[agent]:
            if path == current:
                continue
            new = Fraction(0)
            for e in path.edges:
                load = usage[e] if e in current.edges else usage[e] + 1
                edge = network.edge_map[e]
                if load > edge.capacity:
                    break
                new += edge.cost / load
            else:
                if new < old:
                    return DeviationWitness((agent,), (path,), (old,), (new,))
    return None


@dataclass(frozen=True)
class _AgentClass:
    path: Path
    members: Tuple[AgentIndex, ...]
    strategies: Tuple[Path, ...]
    cost: Fraction


def _agent_classes(
    game: Game,
    profile: StrategyProfile,
    strategies: Sequence[Sequence[Path]],
    costs: Sequence[CostValue],
) -> List[_AgentClass]:
    grouped: Dict[tuple, List[AgentIndex]] = {}
    for agent, path in enumerate(profile.paths):
        if costs[agent] == 0:
            continue
        grouped.setdefault((game.terminals(agent), path), []).append(agent)
    return [
        _AgentClass(path, tuple(members), tuple(strategies[members[0]]), costs[members[0]])
        for (_, path), members in grouped.items()
    ]


def _coalition_shapes(sizes: Sequence[int], total: int) -> Iterator[Tuple[int, ...]]:
    """Tuples (k_1, ..., k_m) with 0 <= k_j <= sizes[j] summing to `total`."""
    if not sizes:
        if total == 0:
            yield ()
        return
    rest_capacity = sum(sizes[1:])
    for k in range(min(sizes[0], total), -1, -1):
        if total - k > rest_capacity:
            break
        for tail in _coalition_shapes(sizes[1:], total - k):
            yield (k,) + tail


def _candidates(
    game: Game,
    agent_class: _AgentClass,
    outside: Counter,
    coalition_size: int,
) -> List[Path]:
    """Paths a member could move to that fit beside the non-members and might pay off."""
    edge_map = game.network.edge_map
    result = []
    for path in agent_class.strategies:
        best = Fraction(0)
        for e in path.edges:
            edge = edge_map[e]
            if outside[e] + 1 > edge.capacity:
                break
            best += edge.cost / min(edge.capacity, outside[e] + coalition_size)
        else:
            if best < agent_class.cost:
                result.append(path)
    return result


def verify_se(
    game: Game,
    profile: StrategyProfile,
    max_coalition_size: Optional[int] = None,
    profile_cap: int = DEFAULT_PROFILE_CAP,
    strategies: Optional[Sequence[Sequence[Path]]] = None,
) -> Optional[DeviationWitness]:
    """
    Searches coalitions of size 1..max_coalition_size (default n) for a joint
    move that strictly lowers every member's cost.

    Coalitions are scanned smallest first, so a witness is a minimal one. The
    number of joint moves examined counts against `profile_cap`.
    """
    _require_feasible(game, profile)
    strategies = strategies or strategy_sets(game)
    costs = agent_costs(game, profile)
    limit = game.n if max_coalition_size is None else min(max_coalition_size, game.n)
    classes = _agent_classes(game, profile, strategies, costs)
    sizes = [len(c.members) for c in classes]
    network = game.network
    examined = 0

    for size in range(1, min(limit, sum(sizes)) + 1):
        for shape in _coalition_shapes(sizes, size):
            outside = Counter(profile.usage)
            chosen = [(c, k) for c, k in zip(classes, shape) if k]
            for agent_class, k in chosen:
                for e in agent_class.path.edges:
                    outside[e] -= k
            candidate_lists = [_candidates(game, c, outside, size) for c, _ in chosen]
            if not all(candidate_lists):
                continue
            joint = math.prod(math.comb(len(paths) + k - 1, k) for paths, (_, k) in zip(candidate_lists, chosen))
            examined += joint
            ensure_within_cap(examined, profile_cap, "joint coalition deviations")

            members = [agent for c, k in chosen for agent in c.members[:k]]
            old_costs = [c.cost for c, k in chosen for _ in range(k)]
            moves = [itertools.combinations_with_replacement(paths, k) for paths, (_, k) in zip(candidate_lists, chosen)]
            for move in itertools.product(*moves):
                new_paths = [path for group in move for path in group]
                usage = outside + usage_counter(new_paths)
                if any(usage[e] > network.edge_map[e].capacity for path in new_paths for e in path.edges):
                    continue
                new_costs = [shared_cost(network, path, usage) for path in new_paths]
                if all(new < old for new, old in zip(new_costs, old_costs)):
                    order = sorted(range(len(members)), key=lambda i: members[i])
                    logger.debug(f"Coalition of size {size} deviates after {examined} joint moves")
                    return DeviationWitness(
                        coalition=tuple(members[i] for i in order),
                        new_paths=tuple(new_paths[i] for i in order),
                        old_costs=tuple(old_costs[i] for i in order),
                        new_costs=tuple(new_costs[i] for i in order),
                    )
    return None


def _scan_chunk(task: tuple) -> List[Tuple[bool, bool, bool]]:
    """(feasible, NE, SE) flags for every profile of one chunk."""
    game, profiles, strategies, max_coalition, profile_cap = task
    flags = []
    for profile in profiles:
        if not is_feasible(game, profile):
            flags.append((False, False, False))
            continue
        ne = verify_ne(game, profile, strategies) is None
        se = ne and verify_se(game, profile, max_coalition, profile_cap, strategies) is None
        flags.append((True, ne, se))
    return flags


def enumerate_equilibria(
    game: Game,
    profile_cap: int = DEFAULT_PROFILE_CAP,
    max_coalition: Optional[int] = None,
    runner: Optional[TaskRunner] = None,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    path_cap: int = DEFAULT_PATH_CAP,
) -> EquilibriumSets:
    """
    NE and SE of a game by testing every feasible profile.

    Symmetric games are scanned one sorted multiset per orbit. With a runner
    the profile list is cut into contiguous chunks; results are merged in
    chunk order so the output does not depend on the runner.
    """
    strategies = strategy_sets(game, path_cap)
    total = count_profiles(game, strategies)
    ensure_within_cap(total, profile_cap, "strategy profiles")
    profiles = list(iter_profiles(game, strategies))
    chunks = [profiles[i:i + chunk_size] for i in range(0, len(profiles), chunk_size)] or [[]]
    tasks = [(game, chunk, strategies, max_coalition, profile_cap) for chunk in chunks]
    logger.info(f"Scanning {total} profiles in {len(tasks)} chunk(s)")

    if runner is None:
        results = [_scan_chunk(task) for task in tasks]
    else:
        results = runner.map(_scan_chunk, tasks)

    ne: List[StrategyProfile] = []
    se: List[StrategyProfile] = []
    feasible = 0
    for chunk, flags in zip(chunks, results):
        for profile, (ok, is_ne, is_se) in zip(chunk, flags):
            feasible += ok
            if is_ne:
                ne.append(profile)
            if is_se:
                se.append(profile)
    logger.info(f"{feasible} feasible profiles, {len(ne)} NE, {len(se)} SE")
    return EquilibriumSets(
        ne=tuple(ne),
        se=tuple(se),
        stats=EnumerationStats(
            profiles_scanned=total,
            feasible_profiles=feasible,
            profile_cap=profile_cap,
            chunks=len(tasks),
        ),
    )


def best_se_cost_for_first_agent(game: Game, profile_cap: int = DEFAULT_PROFILE_CAP) -> Optional[Fraction]:
    """
    Lowest cost any agent pays in any SE, None when no SE exists.

    In a symmetric game the agents of a profile can be relabelled freely, so
    this is the best cost agent 0 can get in a SE.
    """
    sets = enumerate_equilibria(game, profile_cap=profile_cap)
    if not sets.se:
        return None
    return min(min(agent_costs(game, profile)) for profile in sets.se)


class FindEquilibriaUseCase:
    """
    Single Responsibility: decide and enumerate equilibria of one game.
    """

    def __init__(
        self,
        task_runner: Optional[TaskRunner] = None,
        profile_cap: int = DEFAULT_PROFILE_CAP,
        max_coalition: Optional[int] = None,
        path_cap: int = DEFAULT_PATH_CAP,
    ):
        self.runner = task_runner
        self.profile_cap = profile_cap
        self.max_coalition = max_coalition
        self.path_cap = path_cap

    def execute(self, game: Game) -> EquilibriumSets:
        return enumerate_equilibria(
            game,
            profile_cap=self.profile_cap,
            max_coalition=self.max_coalition,
            runner=self.runner,
            path_cap=self.path_cap,
        )

    def verify(
        self, game: Game, profile: StrategyProfile
    ) -> Tuple[Optional[DeviationWitness], Optional[DeviationWitness]]:
        """NE and SE witnesses for one profile; the SE search is skipped when the NE check fails."""
        validate_profile(game, profile)
        strategies = strategy_sets(game, self.path_cap)
        ne_witness = verify_ne(game, profile, strategies)
        if ne_witness is not None:
            return ne_witness, ne_witness
        se_witness = verify_se(game, profile, self.max_coalition, self.profile_cap, strategies)
        return None, se_witness
