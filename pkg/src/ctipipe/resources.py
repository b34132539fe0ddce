"""Paths to the bundled default dictionaries and word lists."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

_DATA = resources.files("ctipipe") / "data"


def default_keywords_path() -> Path:
    return Path(str(_DATA / "keywords.txt"))


def default_regexes_path() -> Path:
    return Path(str(_DATA / "regexes.tsv"))


def default_software_path() -> Path:
    return Path(str(_DATA / "software.txt"))


def default_stopwords_path() -> Path:
    return Path(str(_DATA / "stopwords.txt"))


def load_stopwords(path: Path | None = None) -> frozenset[str]:
    """Read a stop-word list, one token per line, '#' starts a comment line."""
    if path is None:
        path = default_stopwords_path()
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(word.lower())
    return frozenset(words)
