# adapters/json/json_game_codec.py
import csv
import io
import json
import logging
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Union

from pydantic import (
    BaseModel, ConfigDict, Field, StrictBool, StrictInt, StrictStr,
    TypeAdapter, ValidationError, field_validator, model_validator,
)

from core.domain.exceptions import InputError
from core.domain.interfaces import GameCodec
from core.domain.models import (
    AsymmetricAgents, DecompositionTree, DeviationWitness, Edge, EdgeLeaf,
    EmbeddingWitness, EquilibriumSets, Game, InstanceSpec, MetricsReport,
    Network, NotSP, OptimumResult, Path, Series, StrategyProfile, SymmetricAgents,
)
from core.domain.services import (
    agent_costs, format_cost, parse_rational, path_capacity, path_cost,
    profile_from_edge_lists, social_cost,
)

logger = logging.getLogger(__name__)

CSV_HEADER = ("instance", "n", "opt", "poa", "pos", "spoa", "spos")


# --- Wire models ---

class EdgeModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    id: StrictStr
    tail: StrictStr = Field(..., alias="from")
    head: StrictStr = Field(..., alias="to")
    cost: Union[StrictInt, StrictStr]
    capacity: StrictInt

    @field_validator("cost", mode="before")
    @classmethod
    def _exact_cost(cls, v: Any) -> Any:
        # floats never reach the union: their rounding would change equilibria
        if isinstance(v, float):
            raise ValueError(f"{v!r}: decimals are not accepted, use a fraction such as \"1/10\"")
        if isinstance(v, str):
            parse_rational(v)
        return v


class SymmetricModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: StrictInt


class AgentModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: StrictStr
    sink: StrictStr


class AgentsModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    symmetric: Optional[SymmetricModel] = None
    roster: Optional[List[AgentModel]] = Field(None, alias="list")

    @model_validator(mode="after")
    def _exactly_one(self) -> "AgentsModel":
        if (self.symmetric is None) == (self.roster is None):
            raise ValueError('agents must give exactly one of "symmetric" or "list"')
        return self


class InstanceModel(BaseModel):
    tag: StrictStr
    params: Dict[str, Any] = {}
    constraints: List[StrictStr] = []


class GameModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directed: StrictBool = True
    nodes: List[StrictStr]
    edges: List[EdgeModel]
    agents: AgentsModel
    source: StrictStr
    sink: StrictStr
    instance: Optional[InstanceModel] = None


class ProfileEntryModel(BaseModel):
    model_config = ConfigDict(extra="ignore")

    edges: List[StrictStr]


_PROFILE_ADAPTER = TypeAdapter(List[Union[List[StrictStr], ProfileEntryModel]])


def _first_error(e: ValidationError) -> str:
    error = e.errors()[0]
    where = ".".join(str(part) for part in error["loc"]) or "document"
    return f"{where}: {error['msg']}"


def _rational(value: Any) -> Any:
    return format_cost(value) if isinstance(value, Fraction) else value


class JsonGameCodec(GameCodec):
    """
    Adapter for the JSON game format and the JSON result documents.

    Costs travel as "p/q" strings (or JSON integers on input). Every encoder
    returns plain dicts and lists with a fixed key order; `dumps` renders
    them with indent=2 so identical results give identical bytes.
    """

    # --- Decoding ---

    def _parse(self, text: str) -> GameModel:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputError(f"invalid JSON: {e}") from e
        try:
            return GameModel.model_validate(data)
        except ValidationError as e:
            raise InputError(f"invalid game document: {_first_error(e)}") from e

    def decode_game(self, text: str) -> Game:
        model = self._parse(text)
        edges = tuple(
            Edge(e.id, e.tail, e.head, parse_rational(e.cost), e.capacity) for e in model.edges
        )
        network = Network(
            nodes=tuple(model.nodes), edges=edges, source=model.source, sink=model.sink,
            directed=model.directed,
        )
        if model.agents.symmetric is not None:
            agents: Union[SymmetricAgents, AsymmetricAgents] = SymmetricAgents(model.agents.symmetric.n)
        else:
            agents = AsymmetricAgents(tuple((a.source, a.sink) for a in model.agents.roster))
        game = Game(network, agents)
        logger.info(f"Decoded game with {len(edges)} edges and {game.n} agents")
        return game

    def decode_instance(self, text: str) -> Optional[InstanceSpec]:
        instance = self._parse(text).instance
        if instance is None:
            return None
        return InstanceSpec(instance.tag, dict(instance.params), tuple(instance.constraints))

    def decode_profile(self, game: Game, text: str) -> StrategyProfile:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputError(f"invalid profile JSON: {e}") from e
        if isinstance(data, dict) and "profile" in data:
            data = data["profile"]
        try:
            entries = _PROFILE_ADAPTER.validate_python(data)
        except ValidationError as e:
            raise InputError(f"invalid profile: {_first_error(e)}") from e
        edge_lists = [entry.edges if isinstance(entry, ProfileEntryModel) else entry for entry in entries]
        return profile_from_edge_lists(game, edge_lists)

    # --- Encoding ---

    def encode_game(self, game: Game, spec: Optional[InstanceSpec] = None) -> Dict[str, Any]:
        network = game.network
        if isinstance(game.agents, SymmetricAgents):
            agents: Dict[str, Any] = {"symmetric": {"n": game.agents.n}}
        else:
            agents = {"list": [{"source": s, "sink": t} for s, t in game.agents.terminals]}
        data: Dict[str, Any] = {
            "directed": network.directed,
            "nodes": sorted(network.nodes),
            "edges": [
                {"id": e.id, "from": e.tail, "to": e.head, "cost": format_cost(e.cost), "capacity": e.capacity}
                for e in network.edges
            ],
            "agents": agents,
            "source": network.source,
            "sink": network.sink,
        }
        if spec is not None:
            data["instance"] = {
                "tag": spec.tag,
                "params": {k: _rational(v) for k, v in spec.params.items()},
                "constraints": list(spec.constraints),
            }
        return data

    def encode_paths(self, network: Network, paths: Sequence[Path]) -> List[Dict[str, Any]]:
        return [
            {
                "edges": list(path.edges),
                "nodes": list(path.nodes),
                "cost": format_cost(path_cost(network, path)),
                "capacity": path_capacity(network, path),
            }
            for path in paths
        ]

    def encode_tree(self, tree: Union[DecompositionTree, NotSP]) -> Any:
        if isinstance(tree, NotSP):
            return {"not_sp": {"remaining_nodes": list(tree.remaining_nodes), "remaining_edges": tree.remaining_edges}}
        if isinstance(tree, EdgeLeaf):
            return tree.edge
        kind = "series" if isinstance(tree, Series) else "parallel"
        return {kind: [self.encode_tree(child) for child in tree.children]}

    def encode_embedding(self, witness: Optional[EmbeddingWitness]) -> Any:
        if witness is None:
            return None
        return {
            "pattern": witness.pattern.value,
            "paths": {name: list(path.edges) for name, path in sorted(witness.path_map.items())},
            "edges": {name: list(hosts) for name, hosts in sorted(witness.edge_map.items())},
            "glue": list(witness.glue_edges),
        }

    def encode_profile(self, game: Game, profile: StrategyProfile) -> List[Dict[str, Any]]:
        costs = agent_costs(game, profile)
        return [
            {"agent": i, "edges": list(path.edges), "cost": format_cost(cost)}
            for i, (path, cost) in enumerate(zip(profile.paths, costs))
        ]

    def encode_witness(self, game: Game, witness: Optional[DeviationWitness]) -> Any:
        if witness is None:
            return None
        return {
            "coalition": list(witness.coalition),
            "moves": [
                {"agent": agent, "edges": list(path.edges), "old_cost": format_cost(old), "new_cost": format_cost(new)}
                for agent, path, old, new in zip(
                    witness.coalition, witness.new_paths, witness.old_costs, witness.new_costs
                )
            ],
        }

    def _equilibrium(self, game: Game, profile: StrategyProfile) -> Dict[str, Any]:
        return {"social_cost": format_cost(social_cost(game, profile)), "profile": self.encode_profile(game, profile)}

    def encode_equilibria(self, game: Game, sets: EquilibriumSets) -> Dict[str, Any]:
        return {
            "ne": [self._equilibrium(game, p) for p in sets.ne],
            "se": [self._equilibrium(game, p) for p in sets.se],
            "stats": {
                "profiles_scanned": sets.stats.profiles_scanned,
                "feasible_profiles": sets.stats.feasible_profiles,
                "profile_cap": sets.stats.profile_cap,
                "chunks": sets.stats.chunks,
            },
        }

    def encode_optimum(self, game: Game, result: OptimumResult) -> Dict[str, Any]:
        return {
            "opt": format_cost(result.cost),
            "profile": self.encode_profile(game, result.profile),
            "nodes_explored": result.nodes_explored,
        }

    def encode_metrics(self, game: Game, report: MetricsReport) -> Dict[str, Any]:
        def witness(profile: Optional[StrategyProfile]) -> Any:
            return None if profile is None else self._equilibrium(game, profile)

        return {
            "opt": format_cost(report.opt_cost),
            "poa": format_cost(report.poa),
            "pos": format_cost(report.pos),
            "spoa": format_cost(report.spoa),
            "spos": format_cost(report.spos),
            "counts": {"ne": len(report.equilibria.ne), "se": len(report.equilibria.se)},
            "witnesses": {
                "opt": self.encode_profile(game, report.opt_profile),
                "worst_ne": witness(report.worst_ne),
                "best_ne": witness(report.best_ne),
                "worst_se": witness(report.worst_se),
                "best_se": witness(report.best_se),
            },
            "topology": report.topology.as_dict(),
            "bounds": [
                {
                    "name": v.name,
                    "status": v.status.value,
                    "detail": v.detail,
                    "value": None if v.value is None else format_cost(v.value),
                    "bound": None if v.bound is None else format_cost(v.bound),
                }
                for v in report.verdicts
            ],
        }

    def encode_metrics_csv(self, name: str, game: Game, report: MetricsReport, header: bool = True) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        if header:
            writer.writerow(CSV_HEADER)
        writer.writerow([
            name, game.n, format_cost(report.opt_cost), format_cost(report.poa),
            format_cost(report.pos), format_cost(report.spoa), format_cost(report.spos),
        ])
        return buffer.getvalue()

    def dumps(self, data: Any) -> str:
        return json.dumps(data, indent=2) + "\n"
