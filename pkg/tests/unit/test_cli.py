import json
import logging

import pytest
from click.testing import CliRunner

from infrastructure.cli.main import cli
from infrastructure.config.dependency_injection import ServiceContainer, get_container
from infrastructure.config.settings import Settings
from tests.mocks import MockNetworkExporter

# Configure basic logging for tests
logging.basicConfig(level=logging.INFO)

# --- Test Fixtures ---


@pytest.fixture(autouse=True)
def isolated_cli(tmp_path, monkeypatch):
    """Fresh container, no stray .env, and root logging restored after each command."""
    monkeypatch.chdir(tmp_path)
    for name in ("CCS_PROFILE_CAP", "CCS_JOBS", "CCS_MAX_COALITION", "CCS_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    get_container.cache_clear()
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
    get_container.cache_clear()


@pytest.fixture
def runner():
    return CliRunner()


def _run(runner, args, stdin=None):
    return runner.invoke(cli, args, input=stdin)


def _gen(runner, *args) -> str:
    result = _run(runner, ["gen", *args])
    assert result.exit_code == 0, result.stdout
    return result.stdout


def _error(result) -> dict:
    return json.loads(result.stdout)["error"]


# --- Commands ---


def test_gen_attaches_instance_metadata(runner):
    """Generated games carry their tag, parameters and frozen constraints."""
    data = json.loads(_gen(runner, "fig7", "--r", "10"))

    assert data["instance"]["tag"] == "fig7"
    assert data["instance"]["params"] == {"r": "10"}
    assert data["agents"] == {"symmetric": {"n": 2}}
    assert data["instance"]["constraints"]


def test_enumerate_from_stdin(runner):
    """gen piped into enumerate lists the fig1 NE and no SE."""
    # Arrange
    game = _gen(runner, "fig1")

    # Act
    result = _run(runner, ["enumerate"], stdin=game)

    # Assert
    assert result.exit_code == 0
    data = json.loads(result.stdout)
    assert [[entry["edges"] for entry in ne["profile"]] for ne in data["ne"]] == [[["a"], ["b", "c"]]]
    assert data["se"] == []
    assert data["stats"]["profiles_scanned"] == 6


def test_classify_from_file(runner, tmp_path):
    """Files are read by path; fig1 is EP with an edge-then-parallel witness."""
    path = tmp_path / "fig1.json"
    path.write_text(_gen(runner, "fig1"))

    result = _run(runner, ["classify", str(path)])

    data = json.loads(result.stdout)
    assert data["sp"] and data["ep"] and not data["spp"]
    assert data["forbidden_embedding"]["pattern"] == "edge_then_parallel"


def test_paths(runner):
    """Three s-t paths with their standalone costs."""
    result = _run(runner, ["paths"], stdin=_gen(runner, "fig1"))

    data = json.loads(result.stdout)
    assert [p["cost"] for p in data["paths"]] == ["1", "13/10", "17/10"]


def test_agent_paths(runner):
    """--agent lists the strategies between that agent's terminals."""
    result = _run(runner, ["paths", "--agent", "0"], stdin=_gen(runner, "fig8", "--r", "50"))

    data = json.loads(result.stdout)
    assert (data["source"], data["sink"]) == ("s", "t1")
    assert [p["edges"] for p in data["paths"]] == [["r"], ["z1"]]


def test_solve_opt(runner):
    """The fig1 optimum is 9/5."""
    result = _run(runner, ["solve-opt"], stdin=_gen(runner, "fig1"))

    assert json.loads(result.stdout)["opt"] == "9/5"


def test_metrics_json_and_csv(runner):
    """fig4 with n = 3 and eps = 1/10 has SPoA 30/11."""
    # Arrange
    game = _gen(runner, "fig4", "--n", "3", "--eps", "1/10")

    # Act
    as_json = _run(runner, ["metrics"], stdin=game)
    as_csv = _run(runner, ["metrics", "--format", "csv"], stdin=game)

    # Assert
    assert json.loads(as_json.stdout)["spoa"] == "30/11"
    header, row = as_csv.stdout.splitlines()
    assert header == "instance,n,opt,poa,pos,spoa,spos"
    assert row.split(",")[:3] == ["fig4", "3", "11/10"]
    assert row.split(",")[5] == "30/11"


def test_verify_inline_profile(runner):
    """The fig1 NE is broken by the two-agent coalition."""
    result = _run(runner, ["verify", "--profile", '[["a"], ["b", "c"]]'], stdin=_gen(runner, "fig1"))

    data = json.loads(result.stdout)
    assert data["is_ne"] is True
    assert data["is_se"] is False
    assert data["se_witness"]["coalition"] == [0, 1]


def test_construct_se_with_check(runner):
    """The automatic method on parallel edges returns a checked SE."""
    game = _gen(runner, "random", "--family", "parallel_edges", "--n", "3", "--seed", "1")

    result = _run(runner, ["construct-se", "--check"], stdin=game)

    data = json.loads(result.stdout)
    assert data["method"] == "parallel-edges"
    assert data["is_se"] is True
    assert data["se_witness"] is None


def test_emit_dot(runner):
    """The instance tag becomes the graph title."""
    result = _run(runner, ["emit-dot"], stdin=_gen(runner, "fig1"))

    assert result.stdout.startswith('digraph "fig1" {')


def test_emit_dot_tree_of_undirected_network(runner, monkeypatch):
    """Undirected SP networks are oriented before their tree is drawn."""
    # Arrange
    document = json.loads(_gen(runner, "fig1"))
    document["directed"] = False
    container = ServiceContainer(Settings(_env_file=None))
    exporter = MockNetworkExporter()
    container._exporter = exporter
    monkeypatch.setattr("infrastructure.cli.main.get_container", lambda: container)

    # Act
    result = _run(runner, ["emit-dot", "--tree"], stdin=json.dumps(document))

    # Assert
    assert result.exit_code == 0
    assert result.stdout == "tree fig1: 4 leaves"
    assert sorted(exporter.trees[0].leaves()) == ["a", "b", "c", "d"]
    assert exporter.networks == []


# --- Exit codes ---


def test_decimal_eps_is_an_input_error(runner):
    """Decimals are rejected with exit code 2."""
    result = _run(runner, ["gen", "fig4", "--eps", "0.1"])

    assert result.exit_code == 2
    assert _error(result)["kind"] == "InputError"


def test_profile_cap_exit_code(runner):
    """Exceeding the cap exits with 3 and suggests raising it."""
    result = _run(runner, ["enumerate", "--profile-cap", "1"], stdin=_gen(runner, "fig1"))

    assert result.exit_code == 3
    assert "CCS_PROFILE_CAP" in _error(result)["message"]


def test_construct_se_without_procedure(runner):
    """fig1 has no construction; the failure is a domain error."""
    result = _run(runner, ["construct-se"], stdin=_gen(runner, "fig1"))

    assert result.exit_code == 1
    assert _error(result)["kind"] == "PreconditionError"


def test_tree_of_braess_network(runner):
    """The Braess network has no decomposition tree."""
    result = _run(runner, ["emit-dot", "--tree"], stdin=_gen(runner, "fig2"))

    assert result.exit_code == 1


def test_empty_stdin(runner):
    """Nothing to read is an input error."""
    result = _run(runner, ["classify"], stdin="")

    assert result.exit_code == 2


def test_bad_settings_exit_with_usage_code(runner, monkeypatch):
    """Invalid CCS_ variables stop the command before it runs."""
    monkeypatch.setenv("CCS_JOBS", "0")

    result = _run(runner, ["gen", "fig1"])

    assert result.exit_code == 2


# --- Determinism ---


def test_random_generation_is_seeded(runner):
    """Same seed, same bytes."""
    assert _gen(runner, "random", "--seed", "5") == _gen(runner, "random", "--seed", "5")


def test_jobs_do_not_change_output(runner):
    """One or two workers give identical enumeration output."""
    game = _gen(runner, "fig7", "--r", "10")

    one = _run(runner, ["enumerate", "--jobs", "1"], stdin=game)
    two = _run(runner, ["enumerate", "--jobs", "2"], stdin=game)

    assert one.stdout == two.stdout


def test_output_file(runner, tmp_path):
    """-o writes the document and creates missing folders."""
    target = tmp_path / "out" / "fig1.json"

    result = _run(runner, ["gen", "fig1", "-o", str(target)])

    assert result.exit_code == 0
    assert result.stdout == ""
    assert json.loads(target.read_text())["instance"]["tag"] == "fig1"
