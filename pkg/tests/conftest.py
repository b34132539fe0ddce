"""Shared fixtures: bundled dictionaries and small corpus builders."""
from __future__ import annotations

import json

import pytest

from ctipipe.lexicon import load_keyword_dictionary, load_technical_dictionary
from ctipipe.preprocess import PreprocessedItem, tokenize


@pytest.fixture(scope="session")
def keyword_dict():
    return load_keyword_dictionary()


@pytest.fixture(scope="session")
def technical_dict():
    return load_technical_dictionary()


def make_pre_item(item_id: str, text: str, source: str = "forum") -> PreprocessedItem:
    """Build a PreprocessedItem from already-normalized text."""
    tokens = tokenize(text)
    return PreprocessedItem(
        id=item_id,
        normalized_text=text,
        tokens=tokens,
        word_count=len(tokens),
        source=source,
        shadow_text=text,
    )


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
