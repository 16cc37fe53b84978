# core/domain/models.py
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple, TypeAlias, Union

from .exceptions import InputError

# Configure logging
logger = logging.getLogger(__name__)

# --- Type Aliases ---
NodeId: TypeAlias = str
EdgeId: TypeAlias = str
AgentIndex: TypeAlias = int
Cost: TypeAlias = Fraction


# --- Extended cost value ---
class Infinite:
    """
    The cost an agent pays in an infeasible profile.

    Compares greater than every Fraction and absorbs addition. There is a
    single instance, INF.
    """

    _instance: Optional["Infinite"] = None

    def __new__(cls) -> "Infinite":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (Infinite, ())

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __hash__(self) -> int:
        return hash("ccs-infinite")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Infinite)

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return isinstance(other, Infinite)

    def __gt__(self, other: object) -> bool:
        return not isinstance(other, Infinite)

    def __ge__(self, other: object) -> bool:
        return True

    def __add__(self, other: object) -> "Infinite":
        return self

    __radd__ = __add__


INF = Infinite()
CostValue: TypeAlias = Union[Fraction, Infinite]


# --- Enums ---
class ForbiddenPattern(Enum):
    BRAESS = "braess"
    EDGE_THEN_PARALLEL = "edge_then_parallel"
    PARALLEL_THEN_EDGE = "parallel_then_edge"


class TopologyTarget(Enum):
    """Network families the random generator can be asked for."""
    PARALLEL_EDGES = "parallel_edges"
    PARALLEL_PATHS = "parallel_paths"
    SPP = "spp"
    EP = "ep"
    SP = "sp"
    NON_SPP = "non_spp"
    GENERAL = "general"


class VerdictStatus(Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_APPLICABLE = "not_applicable"


# --- Network ---
@dataclass(frozen=True)
class Edge:
    """A capacitated edge with an exact cost. `tail`/`head` are the JSON `from`/`to`."""
    id: EdgeId
    tail: NodeId
    head: NodeId
    cost: Cost
    capacity: int

    def __post_init__(self):
        if not self.id:
            raise InputError("edge ids must be non-empty strings")
        if isinstance(self.cost, bool) or not isinstance(self.cost, (int, Fraction)):
            raise InputError(f"edge '{self.id}': cost must be an exact rational, got {self.cost!r}")
        object.__setattr__(self, "cost", Fraction(self.cost))
        if self.cost < 0:
            raise InputError(f"edge '{self.id}': cost must be non-negative")
        if isinstance(self.capacity, bool) or not isinstance(self.capacity, int) or self.capacity < 0:
            raise InputError(f"edge '{self.id}': capacity must be a non-negative integer")
        if self.tail == self.head:
            raise InputError(f"edge '{self.id}': self-loops are not allowed")


@dataclass(frozen=True)
class Network:
    """Multigraph with designated terminals. Parallel edges are told apart by id."""
    nodes: Tuple[NodeId, ...]
    edges: Tuple[Edge, ...]
    source: NodeId
    sink: NodeId
    directed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        if len(set(self.nodes)) != len(self.nodes):
            raise InputError("node ids must be unique")
        known = set(self.nodes)
        seen: set = set()
        for edge in self.edges:
            if edge.id in seen:
                raise InputError(f"duplicate edge id '{edge.id}'")
            seen.add(edge.id)
            for end in (edge.tail, edge.head):
                if end not in known:
                    raise InputError(f"edge '{edge.id}' references unknown node '{end}'")
        for terminal in (self.source, self.sink):
            if terminal not in known:
                raise InputError(f"unknown terminal node '{terminal}'")
        if self.source == self.sink:
            raise InputError("source and sink must differ")

    @cached_property
    def edge_map(self) -> Dict[EdgeId, Edge]:
        return {edge.id: edge for edge in self.edges}

    @property
    def edge_ids(self) -> Tuple[EdgeId, ...]:
        return tuple(edge.id for edge in self.edges)

    def edge(self, edge_id: EdgeId) -> Edge:
        try:
            return self.edge_map[edge_id]
        except KeyError:
            raise InputError(f"unknown edge id '{edge_id}'") from None

    @cached_property
    def node_set(self) -> FrozenSet[NodeId]:
        return frozenset(self.nodes)

    def has_node(self, node: NodeId) -> bool:
        return node in self.node_set

    def restricted_to(self, edge_ids) -> "Network":
        """Same nodes and terminals, only the given edges (kept in network order)."""
        wanted = set(edge_ids)
        return replace(self, edges=tuple(e for e in self.edges if e.id in wanted))

    def with_values(self, values: Mapping[EdgeId, Tuple[Fraction, int]]) -> "Network":
        """Returns a copy with (cost, capacity) replaced for the listed edges."""
        edges = []
        for e in self.edges:
            if e.id in values:
                cost, capacity = values[e.id]
                edges.append(replace(e, cost=cost, capacity=capacity))
            else:
                edges.append(e)
        return replace(self, edges=tuple(edges))

    def as_undirected(self) -> "Network":
        return replace(self, directed=False)

    @property
    def capacities(self) -> FrozenSet[int]:
        return frozenset(e.capacity for e in self.edges)


# --- Agents and games ---
@dataclass(frozen=True)
class SymmetricAgents:
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise InputError("a symmetric game needs n >= 1 agents")


@dataclass(frozen=True)
class AsymmetricAgents:
    terminals: Tuple[Tuple[NodeId, NodeId], ...]

    def __post_init__(self):
        object.__setattr__(self, "terminals", tuple(tuple(pair) for pair in self.terminals))
        if not self.terminals:
            raise InputError("an asymmetric game needs at least one agent")


Agents: TypeAlias = Union[SymmetricAgents, AsymmetricAgents]


@dataclass(frozen=True)
class Game:
    network: Network
    agents: Agents

    def __post_init__(self):
        if isinstance(self.agents, AsymmetricAgents):
            for source, sink in self.agents.terminals:
                for node in (source, sink):
                    if not self.network.has_node(node):
                        raise InputError(f"agent terminal '{node}' is not a network node")
                if source == sink:
                    raise InputError(f"agent terminals must differ, got '{source}' twice")

    @property
    def n(self) -> int:
        if isinstance(self.agents, SymmetricAgents):
            return self.agents.n
        return len(self.agents.terminals)

    @property
    def is_symmetric(self) -> bool:
        return isinstance(self.agents, SymmetricAgents)

    def terminals(self, agent: AgentIndex) -> Tuple[NodeId, NodeId]:
        if isinstance(self.agents, SymmetricAgents):
            if not 0 <= agent < self.agents.n:
                raise InputError(f"agent index {agent} out of range")
            return (self.network.source, self.network.sink)
        return self.agents.terminals[agent]

    def terminal_list(self) -> List[Tuple[NodeId, NodeId]]:
        return [self.terminals(i) for i in range(self.n)]

    def with_network(self, network: Network) -> "Game":
        return replace(self, network=network)


# --- Paths and profiles ---
@dataclass(frozen=True, order=True)
class Path:
    """Simple walk; `nodes` records the traversal direction of every edge."""
    edges: Tuple[EdgeId, ...]
    nodes: Tuple[NodeId, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) != len(self.edges) + 1:
            raise InputError("a path needs exactly one more node than edges")

    @property
    def source(self) -> NodeId:
        return self.nodes[0]

    @property
    def sink(self) -> NodeId:
        return self.nodes[-1]

    def __contains__(self, edge_id: object) -> bool:
        return edge_id in self.edges

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[EdgeId]:
        return iter(self.edges)

    def label(self) -> str:
        return ",".join(self.edges)


@dataclass(frozen=True)
class StrategyProfile:
    """Agent i plays paths[i]."""
    paths: Tuple[Path, ...]

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))

    @property
    def n(self) -> int:
        return len(self.paths)

    @cached_property
    def usage(self) -> Counter:
        """x_e(s): number of agents whose path contains e."""
        counts: Counter = Counter()
        for path in self.paths:
            counts.update(path.edges)
        return counts

    @property
    def used_edges(self) -> FrozenSet[EdgeId]:
        return frozenset(self.usage)

    def users(self, edge_id: EdgeId) -> FrozenSet[AgentIndex]:
        return frozenset(i for i, path in enumerate(self.paths) if edge_id in path.edges)

    def with_paths(self, assignments: Mapping[AgentIndex, Path]) -> "StrategyProfile":
        paths = list(self.paths)
        for agent, path in assignments.items():
            paths[agent] = path
        return StrategyProfile(tuple(paths))

    def canonical(self) -> "StrategyProfile":
        """Sorted multiset form, the orbit representative in symmetric games."""
        return StrategyProfile(tuple(sorted(self.paths)))

    def edge_lists(self) -> List[List[EdgeId]]:
        return [list(path.edges) for path in self.paths]


@dataclass(frozen=True)
class PartialProfile:
    """Paths for a subset of agents; the others are unassigned."""
    n: int
    assignments: Mapping[AgentIndex, Path] = field(default_factory=dict)

    @property
    def unassigned(self) -> Tuple[AgentIndex, ...]:
        return tuple(i for i in range(self.n) if i not in self.assignments)

    def usage(self) -> Counter:
        counts: Counter = Counter()
        for path in self.assignments.values():
            counts.update(path.edges)
        return counts

    def to_profile(self) -> StrategyProfile:
        missing = self.unassigned
        if missing:
            raise InputError(f"agents {list(missing)} have no path yet")
        return StrategyProfile(tuple(self.assignments[i] for i in range(self.n)))


# --- Decomposition trees ---
@dataclass(frozen=True)
class EdgeLeaf:
    edge: EdgeId

    def leaves(self) -> Tuple[EdgeId, ...]:
        return (self.edge,)

    def key(self) -> tuple:
        return (0, self.edge)


@dataclass(frozen=True)
class Series:
    children: Tuple["DecompositionTree", ...]

    def leaves(self) -> Tuple[EdgeId, ...]:
        return tuple(e for child in self.children for e in child.leaves())

    def key(self) -> tuple:
        return (1, tuple(child.key() for child in self.children))


@dataclass(frozen=True)
class Parallel:
    children: Tuple["DecompositionTree", ...]

    def leaves(self) -> Tuple[EdgeId, ...]:
        return tuple(e for child in self.children for e in child.leaves())

    def key(self) -> tuple:
        return (2, tuple(child.key() for child in self.children))


DecompositionTree: TypeAlias = Union[EdgeLeaf, Series, Parallel]


@dataclass(frozen=True)
class NotSP:
    """Series/parallel reduction stalled; `remaining_nodes` are the interior nodes left."""
    remaining_nodes: Tuple[NodeId, ...]
    remaining_edges: int

    @property
    def obstruction(self) -> Tuple[NodeId, ...]:
        return self.remaining_nodes[:2]


@dataclass(frozen=True)
class TopologyClass:
    is_parallel_edges: bool
    is_parallel_paths: bool
    is_spp: bool
    is_ep: bool
    is_sp: bool

    def as_dict(self) -> Dict[str, bool]:
        return {
            "sp": self.is_sp,
            "ep": self.is_ep,
            "spp": self.is_spp,
            "parallel_paths": self.is_parallel_paths,
            "parallel_edges": self.is_parallel_edges,
        }


@dataclass(frozen=True)
class EmbeddingWitness:
    """
    Three host s-t paths realizing a forbidden pattern.

    `edge_map` sends each pattern edge to the host edges carrying exactly its
    usage set; the first one is the carrier that takes the pattern edge's cost.
    `glue_edges` lie on the three paths but match no pattern edge.
    """
    pattern: ForbiddenPattern
    path_map: Mapping[str, Path]
    edge_map: Mapping[str, Tuple[EdgeId, ...]]
    glue_edges: Tuple[EdgeId, ...]

    @property
    def used_edges(self) -> FrozenSet[EdgeId]:
        return frozenset(e for path in self.path_map.values() for e in path.edges)


# --- Equilibria ---
@dataclass(frozen=True)
class DeviationWitness:
    """A coalition whose joint move strictly lowers every member's cost."""
    coalition: Tuple[AgentIndex, ...]
    new_paths: Tuple[Path, ...]
    old_costs: Tuple[CostValue, ...]
    new_costs: Tuple[CostValue, ...]

    def apply(self, profile: StrategyProfile) -> StrategyProfile:
        return profile.with_paths(dict(zip(self.coalition, self.new_paths)))


@dataclass(frozen=True)
class EnumerationStats:
    profiles_scanned: int
    feasible_profiles: int
    profile_cap: int
    chunks: int = 1


@dataclass(frozen=True)
class EquilibriumSets:
    ne: Tuple[StrategyProfile, ...]
    se: Tuple[StrategyProfile, ...]
    stats: EnumerationStats


@dataclass(frozen=True)
class GreedyAssignment:
    """Profile built by the fractional-cost greedy and its block sizes n_1, n_2, ..."""
    profile: StrategyProfile
    blocks: Tuple[Tuple[EdgeId, int], ...]


@dataclass(frozen=True)
class OptimumResult:
    profile: StrategyProfile
    cost: Cost
    nodes_explored: int = 0


@dataclass(frozen=True)
class CombinedFeasibilityViolation:
    """Edge overloaded when `coalition` switches to s* and everybody else keeps s."""
    edge: EdgeId
    coalition: Tuple[AgentIndex, ...]
    load: int
    capacity: int


# --- Metrics ---
Ratio: TypeAlias = Optional[CostValue]  # None means undefined (empty equilibrium set)


@dataclass(frozen=True)
class BoundVerdict:
    name: str
    status: VerdictStatus
    detail: str
    value: Optional[CostValue] = None
    bound: Optional[CostValue] = None


@dataclass(frozen=True)
class MetricsReport:
    opt_cost: Cost
    opt_profile: StrategyProfile
    poa: Ratio
    pos: Ratio
    spoa: Ratio
    spos: Ratio
    worst_ne: Optional[StrategyProfile]
    best_ne: Optional[StrategyProfile]
    worst_se: Optional[StrategyProfile]
    best_se: Optional[StrategyProfile]
    topology: TopologyClass
    equilibria: EquilibriumSets
    verdicts: Tuple[BoundVerdict, ...] = ()


# --- Instances ---
@dataclass(frozen=True)
class InstanceSpec:
    """Parameters of a built instance and the constraints its values were frozen against."""
    tag: str
    params: Mapping[str, object]
    constraints: Tuple[str, ...]
