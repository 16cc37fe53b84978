# core/use_cases/classify_network.py
import logging
from dataclasses import dataclass
from typing import List, Optional, Union

from ..domain.embedding import find_forbidden_embedding
from ..domain.models import DecompositionTree, EmbeddingWitness, Network, NotSP, Path, TopologyClass
from ..domain.services import DEFAULT_PATH_CAP, enumerate_paths
from ..domain.topology import classify_tree, decompose_sp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NetworkReport:
    topology: TopologyClass
    decomposition: Union[DecompositionTree, NotSP]
    witness: Optional[EmbeddingWitness]


class ClassifyNetworkUseCase:
    """
    Single Responsibility: place a network in the SP / EP / SPP hierarchy and,
    when it is not SPP, name a forbidden pattern it contains.
    """

    def __init__(self, path_cap: int = DEFAULT_PATH_CAP):
        self.path_cap = path_cap

    def execute(self, network: Network) -> NetworkReport:
        decomposition = decompose_sp(network, self.path_cap)
        if isinstance(decomposition, NotSP):
            topology = TopologyClass(False, False, False, False, False)
        else:
            topology = classify_tree(decomposition)
        witness = None if topology.is_spp else find_forbidden_embedding(network, self.path_cap)
        logger.info(f"Classified network: {topology.as_dict()}")
        return NetworkReport(topology, decomposition, witness)

    def paths(self, network: Network) -> List[Path]:
        """Source-sink paths in canonical order."""
        return enumerate_paths(network, network.source, network.sink, self.path_cap)
