# infrastructure/cli/main.py
import functools
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import click

# Add the project root to the Python path so `python infrastructure/cli/main.py` works
project_root = Path(__file__).resolve().parent.parent.parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

from core.domain.exceptions import CCSError, PreconditionError
from core.domain.models import NotSP, TopologyTarget
from core.domain.services import enumerate_paths, format_cost, social_cost
from core.domain.topology import decompose_sp
from core.use_cases.build_instance import RECIPES
from core.use_cases.construct_equilibrium import METHODS
from core.use_cases.find_equilibria import verify_se
from infrastructure.cli.importers import instance_name, load_game, load_text
from infrastructure.config.dependency_injection import ServiceContainer, get_container
from infrastructure.monitoring.logger import configure_logging

logger = logging.getLogger(__name__)

USAGE_EXIT_CODE = 2


def _report_error(error: Exception, exit_code: int) -> None:
    """Machine-readable error object on stdout, then exit."""
    payload = {"error": {"kind": type(error).__name__, "message": str(error), "exit_code": exit_code}}
    click.echo(json.dumps(payload, indent=2))
    sys.exit(exit_code)


def handles_errors(fn):
    """Maps library errors to their exit codes."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CCSError as e:
            logger.error(f"{type(e).__name__}: {e}", exc_info=True)
            _report_error(e, e.exit_code)
        except Exception as e:
            logger.error(f"Unexpected error: {e}", exc_info=True)
            _report_error(e, 1)
    return wrapper


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
    else:
        click.echo(text, nl=False)


input_argument = click.argument("input_path", metavar="INPUT", default="-")
output_option = click.option("--output", "-o", default=None, help="Write to this file instead of stdout.")
cap_option = click.option("--profile-cap", type=click.IntRange(min=1), default=None,
                          help="Bound on enumerated profiles and joint coalition moves (default from CCS_PROFILE_CAP).")
coalition_option = click.option("--max-coalition", type=click.IntRange(min=1), default=None,
                                help="Largest coalition size checked (default: all agents).")
jobs_option = click.option("--jobs", type=click.IntRange(min=1), default=None,
                           help="Worker processes for enumeration; output is identical for every value.")


@click.group()
@click.option("--log-level", default=None, help="Logging level on stderr (default from CCS_LOG_LEVEL).")
@click.pass_context
def cli(ctx, log_level):
    """Capacitated cost-sharing network games - topology, equilibria, optima and prices of anarchy"""
    try:
        container = get_container()
    except Exception as e:
        _report_error(e, USAGE_EXIT_CODE)
    configure_logging(log_level or container.settings.log_level)
    ctx.obj = container


@cli.command()
@input_argument
@output_option
@click.pass_obj
@handles_errors
def classify(container: ServiceContainer, input_path, output):
    """
    Place a game's network in the SP / EP / SPP hierarchy.

    Example:
        ccs gen fig1 | ccs classify
    """
    codec = container.codec
    game, _ = load_game(input_path, codec)
    report = container.create_classifier().execute(game.network)
    data = report.topology.as_dict()
    data["decomposition"] = codec.encode_tree(report.decomposition)
    data["forbidden_embedding"] = codec.encode_embedding(report.witness)
    _emit(codec.dumps(data), output)


@cli.command()
@input_argument
@click.option("--agent", type=click.IntRange(min=0), default=None,
              help="List the strategies of this agent instead of the network's s-t paths.")
@output_option
@click.pass_obj
@handles_errors
def paths(container: ServiceContainer, input_path, agent, output):
    """List simple paths with their standalone cost and bottleneck capacity."""
    codec = container.codec
    game, _ = load_game(input_path, codec)
    network = game.network
    source, sink = game.terminals(agent) if agent is not None else (network.source, network.sink)
    classifier = container.create_classifier()
    found = classifier.paths(network) if agent is None else _agent_paths(container, game, source, sink)
    data = {"source": source, "sink": sink, "paths": codec.encode_paths(network, found)}
    _emit(codec.dumps(data), output)


def _agent_paths(container: ServiceContainer, game, source, sink):
    return enumerate_paths(game.network, source, sink, container.settings.path_cap)


@cli.command("solve-opt")
@input_argument
@cap_option
@output_option
@click.pass_obj
@handles_errors
def solve_opt(container: ServiceContainer, input_path, profile_cap, output):
    """Exact social optimum (minimum total cost over feasible profiles)."""
    codec = container.codec
    game, _ = load_game(input_path, codec)
    result = container.create_optimum_solver(profile_cap).execute(game)
    _emit(codec.dumps(codec.encode_optimum(game, result)), output)


@cli.command("construct-se")
@input_argument
@click.option("--method", type=click.Choice(METHODS), default="auto", show_default=True,
              help="Construction to run; auto picks it from the topology.")
@click.option("--check/--no-check", default=False, help="Also run the full coalition check on the result.")
@cap_option
@output_option
@click.pass_obj
@handles_errors
def construct_se(container: ServiceContainer, input_path, method, check, profile_cap, output):
    """
    Build a strong equilibrium in polynomial time.

    Example:
        ccs gen random --n 3 --seed 7 | ccs construct-se --check
    """
    codec = container.codec
    game, _ = load_game(input_path, codec)
    constructor = container.create_se_constructor()
    chosen = constructor.choose_method(game) if method == "auto" else method
    profile = constructor.execute(game, chosen)
    data = {
        "method": chosen,
        "social_cost": format_cost(social_cost(game, profile)),
        "profile": codec.encode_profile(game, profile),
    }
    if check:
        witness = verify_se(game, profile, profile_cap=profile_cap or container.settings.profile_cap)
        data["is_se"] = witness is None
        data["se_witness"] = codec.encode_witness(game, witness)
    _emit(codec.dumps(data), output)


def _profile_text(value: str) -> str:
    stripped = value.lstrip()
    if stripped.startswith("[") or stripped.startswith("{"):
        return value
    return load_text(value)


@cli.command()
@input_argument
@click.option("--profile", "profile_arg", required=True,
              help="Profile as JSON edge lists (or a file holding them, e.g. construct-se output).")
@coalition_option
@cap_option
@output_option
@click.pass_obj
@handles_errors
def verify(container: ServiceContainer, input_path, profile_arg, max_coalition, profile_cap, output):
    """
    Check whether a profile is a Nash and a strong equilibrium.

    Example:
        ccs gen fig1 | ccs verify --profile '[["a"], ["b", "c"]]'
    """
    codec = container.codec
    game, _ = load_game(input_path, codec)
    profile = codec.decode_profile(game, _profile_text(profile_arg))
    finder = container.create_equilibrium_finder(profile_cap, max_coalition)
    ne_witness, se_witness = finder.verify(game, profile)
    data = {
        "profile": codec.encode_profile(game, profile),
        "social_cost": format_cost(social_cost(game, profile)),
        "is_ne": ne_witness is None,
        "is_se": se_witness is None,
        "ne_witness": codec.encode_witness(game, ne_witness),
        "se_witness": codec.encode_witness(game, se_witness),
    }
    _emit(codec.dumps(data), output)


@cli.command("enumerate")
@input_argument
@coalition_option
@cap_option
@jobs_option
@output_option
@click.pass_obj
@handles_errors
def enumerate_cmd(container: ServiceContainer, input_path, max_coalition, profile_cap, jobs, output):
    """
    Enumerate every Nash and strong equilibrium (one per orbit in symmetric games).

    Example:
        ccs gen fig1 | ccs enumerate
    """
    codec = container.codec
    game, _ = load_game(input_path, codec)
    sets = container.create_equilibrium_finder(profile_cap, max_coalition, jobs).execute(game)
    _emit(codec.dumps(codec.encode_equilibria(game, sets)), output)


@cli.command()
@input_argument
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--header/--no-header", default=True, help="CSV header row (csv format only).")
@coalition_option
@cap_option
@jobs_option
@output_option
@click.pass_obj
@handles_errors
def metrics(container: ServiceContainer, input_path, fmt, header, max_coalition, profile_cap, jobs, output):
    """
    PoA, PoS, SPoA and SPoS with the bounds that apply to the game.

    Example:
        ccs gen fig4 --n 3 --eps 1/10 | ccs metrics
    """
    codec = container.codec
    game, spec = load_game(input_path, codec)
    report = container.create_metrics_calculator(profile_cap, max_coalition, jobs).execute(game)
    if fmt == "csv":
        _emit(codec.encode_metrics_csv(instance_name(input_path, spec), game, report, header), output)
    else:
        _emit(codec.dumps(codec.encode_metrics(game, report)), output)


@cli.command()
@click.argument("tag", type=click.Choice(sorted(RECIPES)))
@click.option("--n", "n", type=click.IntRange(min=1), default=None, help="Number of agents.")
@click.option("--eps", default=None, help="Rational epsilon, e.g. 1/10.")
@click.option("--r", "r", default=None, help="Rational R, e.g. 100.")
@click.option("--seed", type=int, default=None, help="Seed for random instances.")
@click.option("--family", type=click.Choice([t.value for t in TopologyTarget]), default=TopologyTarget.SPP.value,
              show_default=True, help="Network family for random instances.")
@click.option("--max-edges", type=click.IntRange(min=1), default=6, show_default=True,
              help="Edge budget for random instances.")
@output_option
@click.pass_obj
@handles_errors
def gen(container: ServiceContainer, tag, n, eps, r, seed, family, max_edges, output):
    """
    Emit a named instance as a JSON game.

    Example:
        ccs gen fig7 --r 10 -o fig7.json
    """
    codec = container.codec
    game, spec = container.create_instance_builder().execute(
        tag, n=n, eps=eps, r=r, seed=seed, family=family, max_edges=max_edges
    )
    _emit(codec.dumps(codec.encode_game(game, spec)), output)


@cli.command("emit-dot")
@input_argument
@click.option("--tree", is_flag=True, default=False, help="Draw the decomposition tree instead of the network.")
@output_option
@click.pass_obj
@handles_errors
def emit_dot(container: ServiceContainer, input_path, tree, output):
    """Graphviz DOT text for a game's network (edge labels 'id: p/q | c')."""
    game, spec = load_game(input_path, container.codec)
    title = spec.tag if spec is not None else "G"
    if not tree:
        _emit(container.exporter.export_network(game.network, title), output)
        return
    decomposition = decompose_sp(game.network, container.settings.path_cap)
    if isinstance(decomposition, NotSP):
        raise PreconditionError("the network is not series-parallel, so it has no decomposition tree")
    _emit(container.exporter.export_tree(decomposition, title), output)


if __name__ == '__main__':
    cli()
