"""Bundled MiniJava-CC micro-programs."""

from pathlib import Path
from typing import Dict, List

CORPUS_DIR = Path(__file__).parent


def corpus_files() -> List[Path]:
    return sorted(CORPUS_DIR.glob("*.mjcc"))


def corpus_sources() -> Dict[str, str]:
    return {p.stem: p.read_text(encoding="utf-8") for p in corpus_files()}
