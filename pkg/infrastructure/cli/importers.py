# infrastructure/cli/importers.py
import sys
from pathlib import Path
from typing import Optional, Tuple

from core.domain.exceptions import InputError
from core.domain.interfaces import GameCodec
from core.domain.models import Game, InstanceSpec


def load_text(file_path: str) -> str:
    """
    Reads a document from a file, or from stdin when the path is "-".
    """
    if file_path == "-":
        return sys.stdin.read()
    path = Path(file_path)
    if not path.exists():
        raise InputError(f"File not found: {file_path}")
    if path.suffix not in ("", ".json"):
        raise InputError(f"Unsupported file type: {path.suffix}. Use .json")
    with open(path, 'r', encoding='utf-8-sig') as f:
        return f.read()


def load_game(file_path: str, codec: GameCodec) -> Tuple[Game, Optional[InstanceSpec]]:
    """Loads a game document and the instance metadata `gen` attaches to it."""
    text = load_text(file_path)
    if not text.strip():
        raise InputError(f"No game found in {'stdin' if file_path == '-' else file_path}")
    return codec.decode_game(text), codec.decode_instance(text)


def instance_name(file_path: str, spec: Optional[InstanceSpec]) -> str:
    """Row label for CSV output: the generator tag, else the file stem."""
    if spec is not None:
        return spec.tag
    if file_path == "-":
        return "stdin"
    return Path(file_path).stem
