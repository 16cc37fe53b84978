# core/use_cases/compute_metrics.py
"""
Prices of anarchy and stability over NE and SE, and the known upper bounds
they must respect for each network family.
"""
import logging
from dataclasses import replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from ..domain.exceptions import DomainError, InputError
from ..domain.interfaces import TaskRunner
from ..domain.models import (
    INF,
    BoundVerdict,
    CostValue,
    Game,
    MetricsReport,
    NotSP,
    OptimumResult,
    Ratio,
    StrategyProfile,
    TopologyClass,
    VerdictStatus,
)
from ..domain.services import (
    DEFAULT_PATH_CAP,
    DEFAULT_PROFILE_CAP,
    format_cost,
    harmonic,
    potential,
    social_cost,
)
from ..domain.topology import classify, decompose_sp, is_series_of_ep, orient_network
from .find_equilibria import enumerate_equilibria
from .solve_optimum import check_combined_feasibility, se_compatible_optimum, solve_optimal

logger = logging.getLogger(__name__)


def ratio(cost: CostValue, opt: Fraction) -> CostValue:
    """cost / opt, with 0/0 = 1 and x/0 = INF for x > 0."""
    if opt == 0:
        return Fraction(1) if cost == 0 else INF
    if cost is INF:
        return INF
    return cost / opt


def _extremes(game: Game, profiles: Sequence[StrategyProfile]) -> Tuple[Optional[StrategyProfile], Optional[StrategyProfile]]:
    """(worst, best) by social cost; the earliest profile wins ties."""
    if not profiles:
        return None, None
    costs = [social_cost(game, p) for p in profiles]
    worst = max(range(len(profiles)), key=lambda i: (costs[i], -i))
    best = min(range(len(profiles)), key=lambda i: (costs[i], i))
    return profiles[worst], profiles[best]


def _series_of_ep(game: Game) -> bool:
    oriented = orient_network(game.network)
    if oriented is None:
        return False
    try:
        tree = decompose_sp(oriented)
    except InputError:
        return False
    return not isinstance(tree, NotSP) and is_series_of_ep(tree)


def _topology(game: Game) -> TopologyClass:
    """Flags of the network; networks with dead edges count as unclassified."""
    try:
        return classify(game.network)
    except InputError:
        return TopologyClass(False, False, False, False, False)


def compute_metrics(
    game: Game,
    profile_cap: int = DEFAULT_PROFILE_CAP,
    max_coalition: Optional[int] = None,
    runner: Optional[TaskRunner] = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> MetricsReport:
    """Enumerates NE/SE, solves the optimum and evaluates every applicable bound."""
    sets = enumerate_equilibria(game, profile_cap, max_coalition, runner, path_cap=path_cap)
    optimum = solve_optimal(game, profile_cap, path_cap)
    worst_ne, best_ne = _extremes(game, sets.ne)
    worst_se, best_se = _extremes(game, sets.se)

    def measure(profile: Optional[StrategyProfile]) -> Ratio:
        return None if profile is None else ratio(social_cost(game, profile), optimum.cost)

    report = MetricsReport(
        opt_cost=optimum.cost,
        opt_profile=optimum.profile,
        poa=measure(worst_ne),
        pos=measure(best_ne),
        spoa=measure(worst_se),
        spos=measure(best_se),
        worst_ne=worst_ne,
        best_ne=best_ne,
        worst_se=worst_se,
        best_se=best_se,
        topology=_topology(game),
        equilibria=sets,
    )
    report = replace(report, verdicts=check_bounds(game, report))
    logger.info(
        f"opt={format_cost(report.opt_cost)} poa={format_cost(report.poa)} spoa={format_cost(report.spoa)}"
    )
    return report


def _skip(name: str, reason: str) -> BoundVerdict:
    return BoundVerdict(name, VerdictStatus.NOT_APPLICABLE, reason)


def _compare(name: str, value: CostValue, bound: CostValue, detail: str) -> BoundVerdict:
    status = VerdictStatus.PASS if value <= bound else VerdictStatus.FAIL
    return BoundVerdict(name, status, detail, value, bound)


def _harmonic_verdict(game: Game, report: MetricsReport) -> BoundVerdict:
    topology = report.topology
    if game.is_symmetric:
        applies = topology.is_ep or topology.is_spp or _series_of_ep(game)
    else:
        applies = topology.is_spp
    if not applies:
        return _skip("h_n", "network is outside the EP/SPP families")
    if report.spoa is None:
        return _skip("h_n", "no strong equilibrium")
    return _compare("h_n", report.spoa, harmonic(game.n), f"SPoA <= H_{game.n}")


def _sp_verdict(game: Game, report: MetricsReport) -> BoundVerdict:
    if not (game.is_symmetric and report.topology.is_sp):
        return _skip("sp_n", "needs a symmetric game on a series-parallel network")
    if report.spoa is None:
        return _skip("sp_n", "no strong equilibrium")
    return _compare("sp_n", report.spoa, Fraction(game.n), f"SPoA <= {game.n}")


def _homogeneous_verdict(game: Game, report: MetricsReport) -> BoundVerdict:
    capacities = game.network.capacities
    if not (game.is_symmetric and len(capacities) == 1 and (report.topology.is_ep or report.topology.is_spp)):
        return _skip("homogeneous", "needs a symmetric EP/SPP game with one capacity value")
    if report.spoa is None:
        return _skip("homogeneous", "no strong equilibrium")
    status = VerdictStatus.PASS if report.spoa == 1 else VerdictStatus.FAIL
    return BoundVerdict("homogeneous", status, "SPoA = 1", report.spoa, Fraction(1))


def _potential_verdict(game: Game, report: MetricsReport) -> BoundVerdict:
    if not report.equilibria.se:
        return _skip("potential", "no strong equilibrium")
    optimum = OptimumResult(report.opt_profile, report.opt_cost)
    c_max = max(game.network.capacities)
    ceiling = harmonic(c_max) * report.opt_cost
    worst_gap: Optional[Tuple[CostValue, Fraction]] = None
    for se in report.equilibria.se:
        try:
            matched = se_compatible_optimum(game, se, optimum)
        except DomainError as e:
            return _skip("potential", f"no SE-compatible optimum: {e}")
        if check_combined_feasibility(game, se, matched) is not None:
            return _skip("potential", "combined profile is infeasible for some coalition")
        cost, phi = social_cost(game, se), potential(game, matched)
        if not (cost <= phi <= ceiling):
            return BoundVerdict(
                "potential", VerdictStatus.FAIL,
                f"cost(s)={format_cost(cost)}, Phi(s*)={format_cost(phi)}, H_{c_max}*opt={format_cost(ceiling)}",
                cost, ceiling,
            )
        if worst_gap is None or cost > worst_gap[0]:
            worst_gap = (cost, phi)
    return BoundVerdict(
        "potential", VerdictStatus.PASS,
        f"cost(s) <= Phi(s*) <= H_{c_max}*opt over {len(report.equilibria.se)} SE",
        worst_gap[0], ceiling,
    )


def _ordering_verdict(report: MetricsReport) -> BoundVerdict:
    if report.poa is None:
        return _skip("orderings", "no Nash equilibrium")
    pairs = [(report.pos, report.poa, "PoS <= PoA")]
    if report.spoa is not None:
        pairs += [(report.spos, report.spoa, "SPoS <= SPoA"), (report.pos, report.spos, "PoS <= SPoS")]
    ratios = [value for value in (report.poa, report.pos, report.spoa, report.spos) if value is not None]
    broken = [label for low, high, label in pairs if not low <= high]
    if any(value < 1 for value in ratios):
        broken.append("ratios >= 1")
    if broken:
        return BoundVerdict("orderings", VerdictStatus.FAIL, "violated: " + ", ".join(broken))
    return BoundVerdict("orderings", VerdictStatus.PASS, "; ".join(label for _, _, label in pairs))


def check_bounds(game: Game, report: MetricsReport) -> Tuple[BoundVerdict, ...]:
    """Every bound verdict for a computed report, in a fixed order."""
    return (
        _harmonic_verdict(game, report),
        _sp_verdict(game, report),
        _homogeneous_verdict(game, report),
        _potential_verdict(game, report),
        _ordering_verdict(report),
    )


def check_chain_bound(block_reports: Sequence[MetricsReport], composite: MetricsReport) -> BoundVerdict:
    """SPoA of G_1 -> ... -> G_k against the largest SPoA of its blocks."""
    spoas: List[Ratio] = [r.spoa for r in block_reports]
    if composite.spoa is None or any(value is None for value in spoas):
        return _skip("chain", "some network in the chain has no strong equilibrium")
    return _compare("chain", composite.spoa, max(spoas), "SPoA(G) <= max_i SPoA(G_i)")


class ComputeMetricsUseCase:
    """
    Single Responsibility: metrics report with bound verdicts for one game.
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

    def execute(self, game: Game) -> MetricsReport:
        return compute_metrics(game, self.profile_cap, self.max_coalition, self.runner, self.path_cap)
