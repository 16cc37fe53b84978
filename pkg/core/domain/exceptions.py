# core/domain/exceptions.py
from typing import Iterable, Optional


class CCSError(Exception):
    """Base class for every error raised by the game library."""

    exit_code: int = 1


class InputError(CCSError, ValueError):
    """Malformed network, game, profile or numeric literal."""

    exit_code = 2


class DomainError(CCSError):
    """The input is well formed but the requested operation does not apply to it."""

    exit_code = 1


class InfeasibleGameError(DomainError):
    """No feasible strategy profile exists."""


class PreconditionError(DomainError):
    """Topology or shape does not meet an operation's precondition."""


class ResourceLimitError(CCSError):
    """An exhaustive search would exceed the configured bound."""

    exit_code = 3

    def __init__(self, what: str, required: int, limit: int):
        self.what = what
        self.required = required
        self.limit = limit
        super().__init__(
            f"{what}: {required} exceeds the configured limit of {limit} "
            f"(raise --profile-cap or CCS_PROFILE_CAP)"
        )


def edges_error(message: str, edge_ids: Iterable[str], hint: Optional[str] = None) -> InputError:
    """Builds an InputError naming the offending edges."""
    names = ", ".join(sorted(edge_ids))
    text = f"{message}: {names}"
    if hint:
        text = f"{text} ({hint})"
    return InputError(text)
