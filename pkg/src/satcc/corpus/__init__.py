"""Bundled kernel corpus used by the tests and the examples in the README."""
from __future__ import annotations

from pathlib import Path

CORPUS_DIR = Path(__file__).resolve().parent


def corpus_files() -> list[Path]:
    return sorted(CORPUS_DIR.glob("*.c"))


def corpus_path(name: str) -> Path:
    p = CORPUS_DIR / (name if name.endswith(".c") else name + ".c")
    if not p.is_file():
        raise FileNotFoundError(f"no corpus kernel named {name!r}")
    return p
