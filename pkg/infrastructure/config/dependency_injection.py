# infrastructure/config/dependency_injection.py
import logging
from functools import lru_cache
from typing import Optional

from adapters.dot.dot_exporter import DotExporter
from adapters.json.json_game_codec import JsonGameCodec
from adapters.parallel.process_pool import ProcessPoolTaskRunner, SerialTaskRunner
from core.domain.interfaces import GameCodec, NetworkExporter, TaskRunner
from core.domain.services import parse_rational
from core.use_cases.build_instance import BuildInstanceUseCase
from core.use_cases.classify_network import ClassifyNetworkUseCase
from core.use_cases.compute_metrics import ComputeMetricsUseCase
from core.use_cases.construct_equilibrium import ConstructEquilibriumUseCase
from core.use_cases.find_equilibria import FindEquilibriaUseCase
from core.use_cases.solve_optimum import SolveOptimumUseCase
from .settings import Settings

logger = logging.getLogger(__name__)


class ServiceContainer:
    """Dependency injection container"""

    def __init__(self, settings: Settings):
        self.settings = settings
        self._codec: Optional[GameCodec] = None
        self._exporter: Optional[NetworkExporter] = None
        self._task_runner: Optional[TaskRunner] = None

    @property
    def codec(self) -> GameCodec:
        if self._codec is None:
            self._codec = JsonGameCodec()
        return self._codec

    @property
    def exporter(self) -> NetworkExporter:
        if self._exporter is None:
            self._exporter = DotExporter()
        return self._exporter

    @property
    def task_runner(self) -> TaskRunner:
        if self._task_runner is None:
            self._task_runner = self.create_task_runner(self.settings.jobs)
        return self._task_runner

    @staticmethod
    def create_task_runner(jobs: int) -> TaskRunner:
        if jobs <= 1:
            return SerialTaskRunner()
        return ProcessPoolTaskRunner(jobs)

    def create_equilibrium_finder(
        self,
        profile_cap: Optional[int] = None,
        max_coalition: Optional[int] = None,
        jobs: Optional[int] = None,
    ) -> FindEquilibriaUseCase:
        """Factory for the NE/SE enumeration use case; explicit arguments win over settings"""
        return FindEquilibriaUseCase(
            task_runner=self.task_runner if jobs is None else self.create_task_runner(jobs),
            profile_cap=profile_cap or self.settings.profile_cap,
            max_coalition=max_coalition or self.settings.max_coalition,
            path_cap=self.settings.path_cap,
        )

    def create_optimum_solver(self, profile_cap: Optional[int] = None) -> SolveOptimumUseCase:
        return SolveOptimumUseCase(
            profile_cap=profile_cap or self.settings.profile_cap,
            path_cap=self.settings.path_cap,
        )

    def create_metrics_calculator(
        self,
        profile_cap: Optional[int] = None,
        max_coalition: Optional[int] = None,
        jobs: Optional[int] = None,
    ) -> ComputeMetricsUseCase:
        return ComputeMetricsUseCase(
            task_runner=self.task_runner if jobs is None else self.create_task_runner(jobs),
            profile_cap=profile_cap or self.settings.profile_cap,
            max_coalition=max_coalition or self.settings.max_coalition,
            path_cap=self.settings.path_cap,
        )

    def create_se_constructor(self) -> ConstructEquilibriumUseCase:
        return ConstructEquilibriumUseCase()

    def create_classifier(self) -> ClassifyNetworkUseCase:
        return ClassifyNetworkUseCase(path_cap=self.settings.path_cap)

    def create_instance_builder(self) -> BuildInstanceUseCase:
        """Factory for the instance builder, seeded with the configured eps/R/seed defaults"""
        return BuildInstanceUseCase(
            default_eps=parse_rational(self.settings.default_eps),
            default_r=parse_rational(self.settings.default_r),
            default_seed=self.settings.default_seed,
        )


@lru_cache()
def get_container() -> ServiceContainer:
    """Get singleton container"""
    # Settings validation errors surface here, before any command runs
    try:
        settings = Settings()
    except Exception as e:
        logger.error(f"Error loading application settings: {e}")
        logger.error("Check the CCS_* environment variables and your .env file.")
        raise
    return ServiceContainer(settings)
