# core/domain/interfaces.py
from abc import ABC, abstractmethod
from typing import Any, Callable, List, Optional, Sequence, TypeVar, Union

from .models import (
    DecompositionTree, DeviationWitness, EmbeddingWitness, EquilibriumSets, Game,
    InstanceSpec, MetricsReport, Network, NotSP, OptimumResult, Path, StrategyProfile,
)

T = TypeVar("T")
R = TypeVar("R")


class GameCodec(ABC):
    """Port for reading and writing games and results"""

    @abstractmethod
    def decode_game(self, text: str) -> Game:
        """Parse a game document; raises InputError on malformed input"""
        pass

    @abstractmethod
    def decode_instance(self, text: str) -> Optional[InstanceSpec]:
        """Instance metadata attached by the generator, if any"""
        pass

    @abstractmethod
    def decode_profile(self, game: Game, text: str) -> StrategyProfile:
        """Parse a profile given as edge lists (or as a profile document)"""
        pass

    @abstractmethod
    def encode_game(self, game: Game, spec: Optional[InstanceSpec] = None) -> Any:
        """Game as plain data, deterministic"""
        pass

    @abstractmethod
    def encode_paths(self, network: Network, paths: Sequence[Path]) -> Any:
        """Paths with their standalone cost and capacity"""
        pass

    @abstractmethod
    def encode_tree(self, tree: Union[DecompositionTree, NotSP]) -> Any:
        """Decomposition tree or the stalled reduction"""
        pass

    @abstractmethod
    def encode_embedding(self, witness: Optional[EmbeddingWitness]) -> Any:
        """Forbidden-pattern witness, None when the network is SPP"""
        pass

    @abstractmethod
    def encode_profile(self, game: Game, profile: StrategyProfile) -> Any:
        """Profile as plain data (agent -> edge ids and cost)"""
        pass

    @abstractmethod
    def encode_witness(self, game: Game, witness: Optional[DeviationWitness]) -> Any:
        """Deviation witness as plain data, None for 'no deviation'"""
        pass

    @abstractmethod
    def encode_equilibria(self, game: Game, sets: EquilibriumSets) -> Any:
        """NE/SE sets with enumeration statistics"""
        pass

    @abstractmethod
    def encode_optimum(self, game: Game, result: OptimumResult) -> Any:
        """Optimal cost and witness profile"""
        pass

    @abstractmethod
    def encode_metrics(self, game: Game, report: MetricsReport) -> Any:
        """Metrics report as plain data"""
        pass

    @abstractmethod
    def encode_metrics_csv(self, name: str, game: Game, report: MetricsReport, header: bool = True) -> str:
        """One CSV row (optionally preceded by the header) for batch sweeps"""
        pass

    @abstractmethod
    def dumps(self, data: Any) -> str:
        """Render plain data as a document"""
        pass


class NetworkExporter(ABC):
    """Port for drawing networks"""

    @abstractmethod
    def export_network(self, network: Network, title: str = "G") -> str:
        """Render a network with cost/capacity labels"""
        pass

    @abstractmethod
    def export_tree(self, tree: DecompositionTree, title: str = "T") -> str:
        """Render a decomposition tree"""
        pass


class TaskRunner(ABC):
    """Port for running independent chunks of work"""

    @abstractmethod
    def map(self, fn: Callable[[T], R], chunks: Sequence[T]) -> List[R]:
        """Apply fn to every chunk; results come back in chunk order"""
        pass
