import json
import logging
from fractions import Fraction as F

import pytest

from adapters.dot.dot_exporter import DotExporter, edge_label
from adapters.json.json_game_codec import CSV_HEADER, JsonGameCodec
from adapters.parallel.process_pool import ProcessPoolTaskRunner, SerialTaskRunner
from core.domain.exceptions import InputError
from core.domain.models import AsymmetricAgents, Edge, Network, SymmetricAgents
from core.domain.services import enumerate_paths
from core.domain.topology import decompose_sp
from core.use_cases.build_instance import build_fig1, build_fig2_braess, build_fig7_unbounded_spos, build_fig8_asymmetric
from core.use_cases.compute_metrics import compute_metrics
from core.use_cases.find_equilibria import enumerate_equilibria, verify_se

# Configure basic logging for tests
logging.basicConfig(level=logging.INFO)

# --- Test Fixtures ---

FIG1_DOCUMENT = {
    "nodes": ["s", "v", "t"],
    "edges": [
        {"id": "a", "from": "s", "to": "t", "cost": 1, "capacity": 1},
        {"id": "b", "from": "s", "to": "v", "cost": "6/5", "capacity": 2},
        {"id": "c", "from": "v", "to": "t", "cost": "1/10", "capacity": 1},
        {"id": "d", "from": "v", "to": "t", "cost": "1/2", "capacity": 1},
    ],
    "agents": {"symmetric": {"n": 2}},
    "source": "s",
    "sink": "t",
}


@pytest.fixture
def codec():
    return JsonGameCodec()


@pytest.fixture
def exporter():
    return DotExporter()


def _document(**changes):
    data = json.loads(json.dumps(FIG1_DOCUMENT))
    data.update(changes)
    return json.dumps(data)


# --- Decoding ---


def test_decode_fig1_document(codec):
    """Integer and p/q costs both decode to exact fractions."""
    # Act
    game = codec.decode_game(json.dumps(FIG1_DOCUMENT))

    # Assert
    assert game == build_fig1()
    assert game.network.directed
    assert codec.decode_instance(json.dumps(FIG1_DOCUMENT)) is None


def test_decode_asymmetric_agents(codec):
    """The "list" form gives one (source, sink) pair per agent."""
    text = _document(agents={"list": [{"source": "s", "sink": "v"}, {"source": "s", "sink": "t"}]})

    game = codec.decode_game(text)

    assert game.agents == AsymmetricAgents((("s", "v"), ("s", "t")))


@pytest.mark.parametrize(
    "changes, message",
    [
        ({"edges": [{"id": "a", "from": "s", "to": "t", "cost": 0.5, "capacity": 1}]}, "decimals"),
        ({"edges": [{"id": "a", "from": "s", "to": "t", "cost": "0.5", "capacity": 1}]}, "decimal"),
        ({"agents": {}}, "exactly one"),
        ({"agents": {"symmetric": {"n": 2}, "list": []}}, "exactly one"),
        ({"colour": "red"}, "colour"),
        ({"source": "x"}, "unknown terminal node 'x'"),
    ],
)
def test_decode_rejects_bad_documents(codec, changes, message):
    """Malformed games are input errors naming the problem."""
    with pytest.raises(InputError, match=message):
        codec.decode_game(_document(**changes))


def test_decode_rejects_broken_json(codec):
    """Syntax errors are reported before validation."""
    with pytest.raises(InputError, match="invalid JSON"):
        codec.decode_game("{")


def test_decode_profile_forms(codec):
    """Plain edge lists, entries with "edges" and a wrapped profile all decode."""
    # Arrange
    game = build_fig1()
    plain = json.dumps([["a"], ["b", "c"]])
    entries = json.dumps([{"agent": 0, "edges": ["a"]}, {"agent": 1, "edges": ["b", "c"]}])
    wrapped = json.dumps({"profile": [["a"], ["b", "c"]]})

    # Act
    profiles = [codec.decode_profile(game, text) for text in (plain, entries, wrapped)]

    # Assert
    assert profiles[0] == profiles[1] == profiles[2]
    assert profiles[0].edge_lists() == [["a"], ["b", "c"]]


def test_decode_profile_checks_agent_count(codec):
    """One path per agent."""
    with pytest.raises(InputError, match="expected 2 paths"):
        codec.decode_profile(build_fig1(), json.dumps([["a"]]))


# --- Encoding ---


def test_encode_game_reads_back(codec):
    """Encoded games decode to the same game, costs as p/q strings."""
    # Arrange
    game = build_fig8_asymmetric(F(50))

    # Act
    data = codec.encode_game(game)

    # Assert
    assert data["edges"][0] == {"id": "r", "from": "s", "to": "t1", "cost": "50", "capacity": 1}
    assert data["agents"] == {"list": [{"source": "s", "sink": "t1"}, {"source": "s", "sink": "t2"}]}
    assert codec.decode_game(codec.dumps(data)) == game


def test_encode_paths(codec):
    """Standalone cost and bottleneck capacity per path."""
    network = build_fig1().network

    data = codec.encode_paths(network, enumerate_paths(network, "s", "t"))

    assert [(p["edges"], p["cost"], p["capacity"]) for p in data] == [
        (["a"], "1", 1), (["b", "c"], "13/10", 1), (["b", "d"], "17/10", 1),
    ]


def test_encode_tree_and_witness(codec):
    """Trees nest series/parallel lists; a stalled reduction lists what is left."""
    # Act
    tree = codec.encode_tree(decompose_sp(build_fig1().network))
    not_sp = codec.encode_tree(decompose_sp(build_fig2_braess().network))

    # Assert
    assert "parallel" in tree
    assert sorted(not_sp["not_sp"]["remaining_nodes"]) == ["u", "v"]
    assert codec.encode_embedding(None) is None


def test_encode_deviation_witness(codec):
    """Each coalition member appears with its old and new cost."""
    game = build_fig1()
    profile = codec.decode_profile(game, json.dumps([["a"], ["b", "c"]]))

    data = codec.encode_witness(game, verify_se(game, profile))

    assert data["coalition"] == [0, 1]
    assert data["moves"][1] == {"agent": 1, "edges": ["b", "d"], "old_cost": "13/10", "new_cost": "11/10"}


def test_encode_metrics_marks_undefined_ratios(codec):
    """Without SE the strong ratios read "undefined"."""
    game = build_fig1()

    data = codec.encode_metrics(game, compute_metrics(game))

    assert data["opt"] == "9/5"
    assert data["poa"] == "23/18"
    assert data["spoa"] == "undefined"
    assert data["witnesses"]["worst_se"] is None
    assert [b["name"] for b in data["bounds"]][0] == "h_n"


def test_encode_metrics_csv(codec):
    """Header then one row with the same fields."""
    game = build_fig1()
    report = compute_metrics(game)

    text = codec.encode_metrics_csv("fig1", game, report)
    row_only = codec.encode_metrics_csv("fig1", game, report, header=False)

    assert text.splitlines() == [",".join(CSV_HEADER), "fig1,2,9/5,23/18,23/18,undefined,undefined"]
    assert row_only == text.splitlines()[1] + "\n"


def test_dumps_is_stable(codec):
    """Same data, same bytes."""
    data = codec.encode_game(build_fig1())
    assert codec.dumps(data) == codec.dumps(codec.encode_game(build_fig1()))
    assert codec.dumps(data).endswith("}\n")


# --- DOT ---


def test_export_directed_network(exporter):
    """Terminals are double circles; edges carry their id, cost and capacity."""
    network = Network(nodes=("s", "t"), edges=(Edge("a", "s", "t", F(1), 1),), source="s", sink="t")

    dot = exporter.export_network(network)

    assert dot.startswith('digraph "G" {')
    assert '  "s" [shape=doublecircle];' in dot
    assert '  "s" -> "t" [key="a", label="a: 1 | 1"];' in dot


def test_export_undirected_network(exporter):
    """Undirected networks use graph and --."""
    dot = exporter.export_network(build_fig1().network.as_undirected(), title="fig1")

    assert dot.startswith('graph "fig1" {')
    assert '"s" -- "v"' in dot
    assert 'label="b: 6/5 | 2"' in dot


def test_export_tree_labels(exporter):
    """Internal nodes are S or P, leaves carry edge ids."""
    dot = exporter.export_tree(decompose_sp(build_fig1().network))

    assert 'label="P"' in dot and 'label="S"' in dot
    assert 'label="a"' in dot
    assert edge_label(F(1, 10), 1) == "1/10 | 1"


# --- Task runners ---


def test_serial_runner_keeps_order():
    """Results follow chunk order."""
    assert SerialTaskRunner().map(sum, [[1, 2], [3], []]) == [3, 3, 0]


def test_pool_needs_a_worker():
    """Zero jobs is a configuration error."""
    with pytest.raises(ValueError, match="at least 1"):
        ProcessPoolTaskRunner(0)


def test_pool_matches_serial_enumeration():
    """Two workers find the same equilibria as one process."""
    # Arrange
    game = build_fig7_unbounded_spos(F(10))

    # Act
    serial = enumerate_equilibria(game, runner=SerialTaskRunner(), chunk_size=4)
    pooled = enumerate_equilibria(game, runner=ProcessPoolTaskRunner(2), chunk_size=4)

    # Assert
    assert pooled.ne == serial.ne
    assert pooled.se == serial.se


def test_symmetric_agents_survive_the_codec(codec):
    """n agents come back as n agents."""
    game = codec.decode_game(_document(agents={"symmetric": {"n": 3}}))
    assert game.agents == SymmetricAgents(3)
