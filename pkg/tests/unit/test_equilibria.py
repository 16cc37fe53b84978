import logging
from fractions import Fraction as F

import pytest

from core.domain.exceptions import DomainError, InputError, ResourceLimitError
from core.domain.models import StrategyProfile, TopologyTarget
from core.domain.services import agent_costs, profile_from_edge_lists, social_cost
from core.use_cases.build_instance import (
    build_fig1,
    build_fig2_braess,
    build_fig5_unbounded_spoa,
    build_fig6_sp_spos,
    build_fig7_unbounded_spos,
    build_fig8_asymmetric,
    random_game,
    undirected_twin,
)
from core.use_cases.find_equilibria import (
    FindEquilibriaUseCase,
    best_se_cost_for_first_agent,
    enumerate_equilibria,
    verify_ne,
    verify_se,
)
from tests.mocks import RecordingTaskRunner, ReversingTaskRunner

# Configure basic logging for tests
logging.basicConfig(level=logging.INFO)

# --- Test Fixtures ---


@pytest.fixture
def fig1():
    return build_fig1()


@pytest.fixture
def fig7():
    """Two agents whose only strong equilibrium pays R = 10."""
    return build_fig7_unbounded_spos(F(10))


def _lists(profiles):
    return [p.edge_lists() for p in profiles]


# --- Verification ---


def test_fig1_nash_profile_is_not_strong(fig1):
    """Both agents gain by moving to [b,c] and [b,d] together."""
    # Arrange
    nash = profile_from_edge_lists(fig1, [["a"], ["b", "c"]])

    # Act
    ne_witness = verify_ne(fig1, nash)
    se_witness = verify_se(fig1, nash)

    # Assert
    assert ne_witness is None
    assert se_witness.coalition == (0, 1)
    assert [p.edges for p in se_witness.new_paths] == [("b", "c"), ("b", "d")]
    assert se_witness.old_costs == (F(1), F(13, 10))
    assert se_witness.new_costs == (F(7, 10), F(11, 10))
    assert agent_costs(fig1, se_witness.apply(nash)) == se_witness.new_costs


def test_fig1_optimum_is_not_nash(fig1):
    """From the optimum, agent 1 prefers edge a alone."""
    optimum = profile_from_edge_lists(fig1, [["b", "c"], ["b", "d"]])

    witness = verify_ne(fig1, optimum)

    assert witness.coalition == (1,)
    assert witness.new_paths[0].edges == ("a",)
    assert witness.new_costs == (F(1),)


def test_verify_rejects_infeasible_profiles(fig1):
    """Equilibrium checks are only defined on feasible profiles."""
    crowded = profile_from_edge_lists(fig1, [["a"], ["a"]])

    with pytest.raises(DomainError, match="feasible profile"):
        verify_ne(fig1, crowded)
    with pytest.raises(DomainError, match="feasible profile"):
        verify_se(fig1, crowded)


def test_coalitions_of_one_reduce_to_nash(fig1):
    """Capping coalitions at size 1 makes the SE check a NE check."""
    nash = profile_from_edge_lists(fig1, [["a"], ["b", "c"]])
    assert verify_se(fig1, nash, max_coalition_size=1) is None


def test_use_case_verify_short_circuits_on_nash_failure(fig1):
    """A failed NE check doubles as the SE witness."""
    # Arrange
    finder = FindEquilibriaUseCase()
    optimum = profile_from_edge_lists(fig1, [["b", "c"], ["b", "d"]])
    nash = profile_from_edge_lists(fig1, [["a"], ["b", "c"]])

    # Act
    ne_witness, se_witness = finder.verify(fig1, optimum)
    nash_ne, nash_se = finder.verify(fig1, nash)

    # Assert
    assert ne_witness is se_witness
    assert nash_ne is None
    assert nash_se.coalition == (0, 1)


# --- Enumeration of the named instances ---


def test_fig1_has_one_nash_orbit_and_no_strong_equilibrium(fig1):
    """The smallest game without a strong equilibrium."""
    # Act
    sets = enumerate_equilibria(fig1)

    # Assert
    assert _lists(sets.ne) == [[["a"], ["b", "c"]]]
    assert agent_costs(fig1, sets.ne[0]) == (F(1), F(13, 10))
    assert sets.se == ()
    assert sets.stats.profiles_scanned == 6
    assert sets.stats.feasible_profiles == 3


def test_braess_has_one_nash_orbit_and_no_strong_equilibrium():
    """The Braess values admit a single NE that a coalition breaks."""
    sets = enumerate_equilibria(build_fig2_braess())

    assert _lists(sets.ne) == [[["su", "ut"], ["sv", "vt"]]]
    assert sets.se == ()


def test_fig5_has_an_expensive_strong_equilibrium():
    """Avoiding the crossing edges is stable although it costs 24R+5."""
    game = build_fig5_unbounded_spoa(F(100))

    sets = enumerate_equilibria(game)

    assert F(2405) in {social_cost(game, p) for p in sets.se}


def test_fig6_strong_equilibria_all_cost_n():
    """Every strong equilibrium of the four-agent instance costs 4."""
    game = build_fig6_sp_spos(4, F(1, 10))

    sets = enumerate_equilibria(game)

    assert sets.se
    assert {social_cost(game, p) for p in sets.se} == {F(4)}


def test_fig7_strong_equilibrium_is_unique(fig7):
    """The only SE orbit puts one agent on the R edge."""
    # Act
    sets = enumerate_equilibria(fig7)

    # Assert
    assert _lists(sets.se) == [[["sa", "ab", "bt_r"], ["se", "ec", "cd", "db", "bt"]]]
    assert sorted(agent_costs(fig7, sets.se[0])) == [F(3, 5), F(113, 10)]
    decoy = profile_from_edge_lists(fig7, [["sa", "ac", "cd", "db", "bt"], ["se", "et"]])
    assert decoy in sets.ne
    assert decoy not in sets.se


def test_fig8_strong_equilibria():
    """Agent 0 on r with agent 1 on the free detour, or agent 0 free and agent 1 on o."""
    game = build_fig8_asymmetric(F(50))

    sets = enumerate_equilibria(game)

    assert _lists(sets.se) == [[["r"], ["z1", "z2"]], [["z1"], ["o"]]]
    assert [social_cost(game, p) for p in sets.se] == [F(50), F(1)]


def test_best_se_cost_oracle(fig1, fig7):
    """Cheapest agent cost over all SE, None without SE."""
    assert best_se_cost_for_first_agent(fig1) is None
    assert best_se_cost_for_first_agent(fig7) == F(3, 5)


# --- Caps and runners ---


def test_profile_cap_is_enforced():
    """Too many profiles is a resource error naming the count."""
    game = build_fig6_sp_spos(4, F(1, 10))

    with pytest.raises(ResourceLimitError) as info:
        enumerate_equilibria(game, profile_cap=10)

    assert info.value.limit == 10
    assert info.value.required == 1001


def test_max_coalition_one_gives_nash_set(fig1):
    """With singleton coalitions the SE set equals the NE set."""
    sets = enumerate_equilibria(fig1, max_coalition=1)
    assert sets.se == sets.ne


@pytest.mark.parametrize("runner_type", [RecordingTaskRunner, ReversingTaskRunner])
def test_chunked_scan_matches_serial_scan(fig7, runner_type):
    """Results do not depend on how chunks are evaluated."""
    # Arrange
    runner = runner_type()

    # Act
    serial = enumerate_equilibria(fig7)
    chunked = enumerate_equilibria(fig7, runner=runner, chunk_size=4)

    # Assert
    assert chunked.ne == serial.ne
    assert chunked.se == serial.se
    assert chunked.stats.feasible_profiles == serial.stats.feasible_profiles
    assert chunked.stats.chunks > 1


def test_runner_receives_every_chunk(fig1):
    """Six profiles in chunks of two give one map call over three chunks."""
    runner = RecordingTaskRunner()

    sets = enumerate_equilibria(fig1, runner=runner, chunk_size=2)

    assert runner.calls == [3]
    assert sets.stats.chunks == 3


# --- Undirected networks ---


def test_undirected_fig1_keeps_its_equilibria(fig1):
    """Dropping direction on an SP network changes no equilibrium."""
    directed = enumerate_equilibria(fig1)
    twin = enumerate_equilibria(undirected_twin(fig1))

    assert _lists(twin.ne) == _lists(directed.ne)
    assert twin.se == ()


def test_undirected_fig7_still_pays_r(fig7):
    """Without direction every strong equilibrium still uses bt_r."""
    sets = enumerate_equilibria(undirected_twin(fig7))

    assert sets.se
    assert all(any("bt_r" in path for path in profile.paths) for profile in sets.se)


@pytest.mark.slow
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("seed", range(50))
def test_undirected_sp_games_have_the_same_strong_equilibria(n, seed):
    """Simple paths of an SP network follow its orientation, so SE sets coincide."""
    game = random_game(TopologyTarget.SP, n=n, max_edges=6, seed=seed)

    directed = enumerate_equilibria(game)
    twin = enumerate_equilibria(undirected_twin(game))

    assert [social_cost(game, p) for p in twin.se] == [social_cost(game, p) for p in directed.se]
    assert _lists(twin.se) == _lists(directed.se)


def test_use_case_verify_checks_the_profile_shape(fig1):
    """A profile for the wrong number of agents is rejected before any search."""
    short = StrategyProfile(profile_from_edge_lists(fig1, [["a"], ["b", "c"]]).paths[:1])

    with pytest.raises(InputError, match="profile has 1 paths for 2 agents"):
        FindEquilibriaUseCase().verify(fig1, short)
