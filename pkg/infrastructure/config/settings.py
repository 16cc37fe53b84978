# infrastructure/config/settings.py
from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.domain.exceptions import InputError
from core.domain.services import DEFAULT_PATH_CAP, DEFAULT_PROFILE_CAP, parse_rational


class Settings(BaseSettings):
    # Enumeration limits
    profile_cap: int = DEFAULT_PROFILE_CAP
    path_cap: int = DEFAULT_PATH_CAP
    # None means coalitions of every size up to n
    max_coalition: Optional[int] = None

    # Worker processes for equilibrium enumeration
    jobs: int = 1

    # Instance defaults, as rational literals
    # Example .env entry:
    # CCS_DEFAULT_EPS=1/20
    default_eps: str = "1/10"
    default_r: str = "100"
    default_seed: int = 0

    log_level: str = "WARNING"

    model_config = SettingsConfigDict(
        env_prefix="CCS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra='ignore'
    )

    @field_validator("profile_cap", "path_cap", "jobs")
    @classmethod
    def _at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("max_coalition")
    @classmethod
    def _positive_coalition(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("coalitions need at least one member")
        return v

    @field_validator("default_eps", "default_r")
    @classmethod
    def _rational_literal(cls, v: str) -> str:
        try:
            value = parse_rational(v)
        except InputError as e:
            raise ValueError(str(e)) from e
        if value < 0:
            raise ValueError("must be non-negative")
        return v

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, v: str) -> str:
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level '{v}'")
        return level
