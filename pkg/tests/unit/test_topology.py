import logging
from fractions import Fraction as F

import pytest

from core.domain.embedding import find_forbidden_embedding
from core.domain.exceptions import InputError, ResourceLimitError
from core.domain.models import Edge, EdgeLeaf, ForbiddenPattern, Network, NotSP, Parallel, Series, TopologyTarget
from core.domain.services import enumerate_paths
from core.domain.topology import (
    canonicalize,
    classify,
    compose_parallel,
    compose_series,
    decompose_sp,
    iter_sp_trees,
    network_from_tree,
    orient_network,
    prune_dead_edges,
)
from core.use_cases.build_instance import (
    build_fig1,
    build_fig2_braess,
    build_fig4_sp_spoa,
    build_fig5_unbounded_spoa,
    build_fig8_asymmetric,
    build_optimal_choice_walkthrough,
    random_game,
    random_general_network,
)
from core.use_cases.classify_network import ClassifyNetworkUseCase

# Configure basic logging for tests
logging.basicConfig(level=logging.INFO)

# --- Test Fixtures ---


@pytest.fixture
def parallel_edges():
    """Three parallel s->t edges."""
    return Network(
        nodes=("s", "t"),
        edges=(
            Edge("a", "s", "t", F(3), 2),
            Edge("b", "s", "t", F(2), 1),
            Edge("c", "s", "t", F(5), 3),
        ),
        source="s",
        sink="t",
    )


@pytest.fixture
def spp_network():
    """Block of two parallel edges followed by a single edge."""
    return Network(
        nodes=("s", "m", "t"),
        edges=(
            Edge("a", "s", "m", F(0), 1),
            Edge("b", "s", "m", F(10), 2),
            Edge("c", "m", "t", F(0), 2),
        ),
        source="s",
        sink="t",
    )


@pytest.fixture
def classifier():
    return ClassifyNetworkUseCase()


def _flags(network):
    return classify(network).as_dict()


# --- Decomposition ---


def test_decompose_fig1_gives_edge_beside_split():
    """The two-agent counterexample reduces to a || (b -> (c || d))."""
    # Arrange
    expected = canonicalize(
        Parallel((EdgeLeaf("a"), Series((EdgeLeaf("b"), Parallel((EdgeLeaf("c"), EdgeLeaf("d")))))))
    )

    # Act
    tree = decompose_sp(build_fig1().network)

    # Assert
    assert tree == expected
    assert sorted(tree.leaves()) == ["a", "b", "c", "d"]


def test_decompose_braess_is_not_sp():
    """The Braess graph stalls the reduction on its two inner nodes."""
    result = decompose_sp(build_fig2_braess().network)

    assert isinstance(result, NotSP)
    assert set(result.remaining_nodes) == {"u", "v"}


def test_decompose_rejects_empty_network():
    """A network without edges has no decomposition."""
    network = Network(nodes=("s", "t"), edges=(), source="s", sink="t")
    with pytest.raises(InputError, match="without edges"):
        decompose_sp(network)


def test_decompose_rejects_dead_edges():
    """Edges off every s-t path are reported instead of silently pruned."""
    # Arrange
    network = Network(
        nodes=("s", "t", "x"),
        edges=(Edge("a", "s", "t", F(1), 1), Edge("b", "t", "x", F(1), 1)),
        source="s",
        sink="t",
    )

    # Act / Assert
    with pytest.raises(InputError, match="not on any source-sink path: b"):
        decompose_sp(network)
    assert prune_dead_edges(network).edge_ids == ("a",)


@pytest.mark.parametrize("max_edges", [1, 2, 3, 4, 5])
def test_trees_survive_recomposition(max_edges):
    """Every canonical tree is recovered from the network it describes."""
    for tree in iter_sp_trees(max_edges):
        assert decompose_sp(network_from_tree(tree)) == tree


def test_iter_sp_trees_counts_small_shapes():
    """One shape with one edge, two with two edges, five with three edges."""
    trees = list(iter_sp_trees(3))
    sizes = [len(t.leaves()) for t in trees]
    assert sizes.count(1) == 1
    assert sizes.count(2) == 2
    assert sizes.count(3) == 5


# --- Classification ---


def test_classify_fig1(classifier):
    """The two-agent counterexample is extension-parallel but not SPP."""
    report = classifier.execute(build_fig1().network)

    assert report.topology.as_dict() == {
        "sp": True, "ep": True, "spp": False, "parallel_paths": False, "parallel_edges": False,
    }
    assert report.witness.pattern is ForbiddenPattern.EDGE_THEN_PARALLEL


def test_classify_braess(classifier):
    """The Braess graph is not SP and yields a Braess witness."""
    # Act
    report = classifier.execute(build_fig2_braess().network)

    # Assert
    assert not any(report.topology.as_dict().values())
    assert isinstance(report.decomposition, NotSP)
    witness = report.witness
    assert witness.pattern is ForbiddenPattern.BRAESS
    assert witness.path_map["P1"].edges == ("su", "ut")
    assert witness.path_map["P2"].edges == ("sv", "vt")
    assert witness.path_map["P3"].edges == ("su", "uv", "vt")
    assert witness.edge_map["uv"] == ("uv",)
    assert witness.glue_edges == ()


def test_classifier_applies_its_path_cap():
    """The path cap bounds the walks behind decomposition and pattern search."""
    with pytest.raises(ResourceLimitError):
        ClassifyNetworkUseCase(path_cap=2).execute(build_fig1().network)


def test_classify_fig4_is_sp_only():
    """A chain of parallel blocks beside one edge is SP, neither EP nor SPP."""
    flags = _flags(build_fig4_sp_spoa(3, F(1, 10)).network)
    assert flags["sp"] and not flags["ep"] and not flags["spp"]


def test_classify_fig5_is_not_sp():
    """Crossing inner edges break series-parallel structure."""
    assert not _flags(build_fig5_unbounded_spoa(F(100)).network)["sp"]


def test_classify_fig8_is_ep_not_spp():
    """The asymmetric instance sits in EP minus SPP."""
    flags = _flags(build_fig8_asymmetric(F(50)).network)
    assert flags["ep"] and not flags["spp"]


def test_walkthrough_witness_puts_the_split_first(classifier):
    """Parallel(e8, x) followed by e5 beside low embeds (two parallel edges -> edge)."""
    report = classifier.execute(build_optimal_choice_walkthrough().network)

    assert report.topology.is_ep and not report.topology.is_spp
    assert report.witness.pattern is ForbiddenPattern.PARALLEL_THEN_EDGE
    assert report.witness.edge_map["B"] == ("e5",)
    assert report.witness.edge_map["A"] == ("low",)


def test_parallel_edges_satisfy_every_class(parallel_edges, classifier):
    """Parallel edges are the bottom of the hierarchy."""
    report = classifier.execute(parallel_edges)

    assert all(report.topology.as_dict().values())
    assert report.witness is None
    assert find_forbidden_embedding(parallel_edges) is None


def test_spp_chain_flags(spp_network):
    """Parallel block in series with an edge is SPP but not parallel paths."""
    assert _flags(spp_network) == {
        "sp": True, "ep": True, "spp": True, "parallel_paths": False, "parallel_edges": False,
    }


def test_undirected_braess_cannot_be_oriented():
    """Simple paths cross uv both ways once direction is dropped."""
    network = build_fig2_braess().network.as_undirected()

    assert orient_network(network) is None
    assert not classify(network).is_sp


def test_undirected_braess_still_yields_a_braess_witness():
    """Paths count against the direction they travel, so the crossing edge is not a fourth route."""
    # Act
    witness = find_forbidden_embedding(build_fig2_braess().network.as_undirected())

    # Assert
    assert witness is not None
    assert witness.pattern is ForbiddenPattern.BRAESS
    assert witness.edge_map["uv"] == ("uv",)
    assert len({path.edges for path in witness.path_map.values()}) == 3


def test_undirected_fig1_orients_like_directed():
    """An undirected SP network orients to its directed twin."""
    directed = build_fig1().network

    oriented = orient_network(directed.as_undirected())

    assert oriented == directed
    assert classify(directed.as_undirected()) == classify(directed)


# --- Composition ---


def test_compose_series_of_spp_is_spp(spp_network, parallel_edges):
    """Chaining SPP networks keeps them SPP."""
    # Act
    composed = compose_series([spp_network, parallel_edges])

    # Assert
    assert composed.source == "s" and composed.sink == "t"
    assert len(composed.edges) == 6
    assert classify(composed).is_spp
    assert len(enumerate_paths(composed, "s", "t")) == 2 * 3


def test_compose_parallel_merges_terminals(spp_network, parallel_edges):
    """Parallel composition renames clashing edge ids and multiplies nothing."""
    composed = compose_parallel([spp_network, parallel_edges])

    assert len(enumerate_paths(composed, "s", "t")) == 2 + 3
    assert "a#0" in composed.edge_ids and "a#1" in composed.edge_ids
    assert classify(composed).is_ep


def test_compose_rejects_mixed_directedness(parallel_edges):
    """Directed and undirected networks do not compose."""
    with pytest.raises(InputError, match="directed and undirected"):
        compose_series([parallel_edges, parallel_edges.as_undirected()])


# --- Exhaustive and random agreement ---


def _agrees(network) -> bool:
    return (find_forbidden_embedding(network) is None) == classify(network).is_spp


@pytest.mark.parametrize("max_edges", [5])
def test_embedding_agrees_with_spp_on_small_trees(max_edges):
    """No pattern embeds exactly when the network is SPP."""
    for tree in iter_sp_trees(max_edges):
        assert _agrees(network_from_tree(tree))


@pytest.mark.slow
def test_embedding_agrees_with_spp_on_all_trees_up_to_seven_edges():
    """Same equivalence over every SP shape with at most seven edges."""
    for tree in iter_sp_trees(7):
        assert _agrees(network_from_tree(tree))


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(200))
def test_embedding_agrees_with_spp_on_random_networks(seed):
    """The equivalence also holds on random DAGs, SP or not."""
    assert _agrees(random_general_network(seed, 9))


@pytest.mark.slow
@pytest.mark.parametrize("family", [TopologyTarget.SPP, TopologyTarget.EP, TopologyTarget.SP])
def test_random_family_flags(family):
    """Random games land in the requested family."""
    for seed in range(30):
        game = random_game(family, n=2, max_edges=8, seed=seed)
        flags = classify(game.network)
        assert {"spp": flags.is_spp, "ep": flags.is_ep, "sp": flags.is_sp}[family.value]
