"""Corpus loading, snapshot deduplication and language filtering.

The corpus file is line-delimited JSON, one record per line with fields
id, source, timestamp, text and optional lang/url. Lines that do not parse
or fail validation are rejected individually and recorded with their line
number, so one bad line never aborts a load.
"""
from __future__ import annotations

import json
import string
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from .resources import load_stopwords

SOURCES = frozenset({"forum", "chat", "darknet"})

_EDGE_PUNCT = string.punctuation


@dataclass(frozen=True)
class DataItem:
    id: str
    source: str
    timestamp: str
    text: str
    lang: str | None = None
    url: str | None = None


@dataclass
class Provenance:
    path: str
    accepted: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    deduped: int = 0


@dataclass
class Corpus:
    items: list[DataItem]
    provenance: Provenance

    def __len__(self) -> int:
        return len(self.items)


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant; naive stamps are taken as UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _validate_record(obj: object) -> DataItem:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    item_id = obj.get("id")
    if not isinstance(item_id, str) or not item_id:
        raise ValueError("missing or empty id")
    source = obj.get("source")
    if source not in SOURCES:
        raise ValueError(f"unknown source {source!r}")
    timestamp = obj.get("timestamp")
    if not isinstance(timestamp, str):
        raise ValueError("missing timestamp")
    try:
        parse_timestamp(timestamp)
    except ValueError as exc:
        raise ValueError(f"bad timestamp {timestamp!r}: {exc}") from None
    text = obj.get("text")
    if not isinstance(text, str) or not text.strip():
        raise ValueError("empty text")
    lang = obj.get("lang")
    if lang is not None and not isinstance(lang, str):
        raise ValueError("lang is not a string")
    url = obj.get("url")
    if url is not None and not isinstance(url, str):
        raise ValueError("url is not a string")
    return DataItem(
        id=item_id,
        source=source,
        timestamp=timestamp,
        text=text,
        lang=lang or None,
        url=url or None,
    )


def load_corpus(path: str | Path) -> Corpus:
    """Load a line-delimited corpus file.

    Malformed lines and duplicate ids are rejected per line; the provenance
    records each rejection as (line_number, reason) and accepted + rejected
    always equals the number of input lines. An unreadable file raises.
    """
    prov = Provenance(path=str(path))
    items: list[DataItem] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                prov.rejected.append((lineno, "blank line"))
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                prov.rejected.append((lineno, f"invalid JSON: {exc.msg}"))
                continue
            try:
                item = _validate_record(obj)
            except ValueError as exc:
                prov.rejected.append((lineno, str(exc)))
                continue
            if item.id in seen:
                prov.rejected.append((lineno, f"duplicate id {item.id!r}"))
                continue
            seen.add(item.id)
            items.append(item)
    prov.accepted = len(items)
    return Corpus(items=items, provenance=prov)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write items back out in the corpus record format, one JSON per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in corpus.items:
            record: dict[str, object] = {
                "id": item.id,
                "source": item.source,
                "timestamp": item.timestamp,
            }
            if item.lang is not None:
                record["lang"] = item.lang
            record["text"] = item.text
            if item.url is not None:
                record["url"] = item.url
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def dedup_snapshots(corpus: Corpus) -> Corpus:
    """Collapse darknet page snapshots: one survivor per (darknet, url).

    The survivor is the latest timestamp; timestamp ties go to the
    lexicographically greatest id. Items from other sources, and darknet
    items without a url, are never touched. Running this twice removes
    nothing the second time.
    """
    best: dict[str, DataItem] = {}
    for item in corpus.items:
        if item.source != "darknet" or item.url is None:
            continue
        cur = best.get(item.url)
        if cur is None:
            best[item.url] = item
            continue
        key = (parse_timestamp(item.timestamp), item.id)
        cur_key = (parse_timestamp(cur.timestamp), cur.id)
        if key > cur_key:
            best[item.url] = item
    survivors = []
    removed = 0
    for item in corpus.items:
        if item.source == "darknet" and item.url is not None and best[item.url] is not item:
            removed += 1
            continue
        survivors.append(item)
    prov = replace(corpus.provenance, deduped=corpus.provenance.deduped + removed)
    return Corpus(items=survivors, provenance=prov)


def _heuristic_tokens(text: str) -> list[str]:
    tokens = []
    for tok in text.lower().split():
        tok = tok.strip(_EDGE_PUNCT)
        if tok:
            tokens.append(tok)
    return tokens


def guess_language(text: str, stopwords: frozenset[str]) -> str:
    """Classify untagged text: 'en' needs >= 20 tokens of which >= 10% are
    English stop words, anything else is 'und'."""
    tokens = _heuristic_tokens(text)
    if len(tokens) < 20:
        return "und"
    hits = sum(1 for tok in tokens if tok in stopwords)
    if hits / len(tokens) >= 0.10:
        return "en"
    return "und"


def filter_language(
    corpus: Corpus,
    lang: str = "en",
    stopwords: frozenset[str] | None = None,
) -> Corpus:
    """Keep items whose language matches.

    A pre-tagged lang field is trusted as-is; untagged items go through the
    stop-word heuristic, which only ever answers 'en' or 'und'.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    kept = []
    for item in corpus.items:
        tag = item.lang if item.lang else guess_language(item.text, stopwords)
        if tag == lang:
            kept.append(item)
    return Corpus(items=kept, provenance=corpus.provenance)
