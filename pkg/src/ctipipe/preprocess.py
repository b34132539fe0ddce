"""Text normalization, tokenization and the word-count length policy.

Normalization applies, in order: URL removal, @/# token removal, removal of
digit-bearing words, character filtering down to ASCII letters, punctuation
and whitespace, lowercasing, contraction expansion, collapse of 4+ repeated
characters to 3, and whitespace normalization. The chain is re-applied until
the text stops changing: a deletion can expose a new removable pattern
(e.g. stripping a non-ASCII char can splice a "www." back together), and a
single pass would leave it behind.

Repetition collapse runs after lowercasing and after apostrophe removal;
otherwise "AaAa" -> "aaaa" or "aaa'a" -> "aaaa" would leave a 4-run in the
output and break idempotence.
"""
from __future__ import annotations

import re
import string
from dataclasses import dataclass

from .contractions import CONTRACTIONS

_WS_RE = re.compile(r"\s+")
_URL_RE = re.compile(r"(?:[a-zA-Z][a-zA-Z0-9+.-]*://|www\.)\S*", re.IGNORECASE)
_DIGIT_RE = re.compile(r"[0-9]")
# keep ASCII letters, ASCII punctuation and the plain space
_NON_KEEP_RE = re.compile(r"[^a-zA-Z!-/:-@\[-`{-~ ]")
_RUN_RE = re.compile(r"(.)\1{3,}")
_CONTRACTION_RE = re.compile(
    r"\b(?:" + "|".join(re.escape(k) for k in sorted(CONTRACTIONS, key=len, reverse=True)) + r")\b"
)

_EDGE_PUNCT = string.punctuation


@dataclass
class LengthPolicy:
    min_words: int = 7
    max_words: int = 1000
    overflow: str = "drop"  # or "truncate"

    def __post_init__(self) -> None:
        if self.min_words < 1:
            raise ValueError("min_words must be >= 1")
        if self.max_words <= self.min_words:
            raise ValueError("max_words must be > min_words")
        if self.overflow not in ("drop", "truncate"):
            raise ValueError(f"unknown overflow policy {self.overflow!r}")


@dataclass
class PreprocessedItem:
    id: str
    normalized_text: str
    tokens: list[str]
    word_count: int
    source: str = "unknown"
    shadow_text: str = ""


def _normalize_once(text: str) -> str:
    s = _WS_RE.sub(" ", text)
    s = _URL_RE.sub(" ", s)
    kept = [
        t
        for t in s.split()
        if not t.startswith(("@", "#")) and not _DIGIT_RE.search(t)
    ]
    s = " ".join(kept)
    s = _NON_KEEP_RE.sub("", s)
    s = s.lower()
    s = _CONTRACTION_RE.sub(lambda m: CONTRACTIONS[m.group(0)], s)
    s = s.replace("'", "")
    s = _RUN_RE.sub(r"\1\1\1", s)
    return _WS_RE.sub(" ", s).strip()


def normalize_text(raw: str) -> str:
    """Normalize raw text; the result is a fixpoint of the rule chain."""
    out = _normalize_once(raw)
    while True:
        again = _normalize_once(out)
        if again == out:
            return out
        out = again


def shadow_text(raw: str) -> str:
    """The text view used for technical-indicator regex scanning.

    Only URL and @/# token removal are applied, so digits, case and symbols
    in hashes, addresses and timestamps survive.
    """
    s = _WS_RE.sub(" ", raw)
    s = _URL_RE.sub(" ", s)
    kept = [t for t in s.split() if not t.startswith(("@", "#"))]
    return " ".join(kept)


def tokenize(text: str) -> list[str]:
    """Whitespace-split with punctuation stripped from token edges."""
    tokens = []
    for tok in text.split():
        tok = tok.strip(_EDGE_PUNCT)
        if tok:
            tokens.append(tok)
    return tokens


def _truncate_text(text: str, max_words: int) -> str:
    # keep whitespace chunks up to and including the one yielding the
    # max_words-th token, so re-tokenizing the text reproduces the tokens
    chunks = text.split()
    count = 0
    kept = []
    for chunk in chunks:
        kept.append(chunk)
        if chunk.strip(_EDGE_PUNCT):
            count += 1
            if count == max_words:
                break
    return " ".join(kept)


def apply_length_policy(item: PreprocessedItem, policy: LengthPolicy) -> PreprocessedItem | None:
    """Enforce the word-count window; returns None for dropped items."""
    if item.word_count < policy.min_words:
        return None
    if item.word_count > policy.max_words:
        if policy.overflow == "drop":
            return None
        item.tokens = item.tokens[: policy.max_words]
        item.word_count = policy.max_words
        item.normalized_text = _truncate_text(item.normalized_text, policy.max_words)
        item.shadow_text = " ".join(item.shadow_text.split()[: policy.max_words])
    return item


def preprocess_item(item, policy: LengthPolicy | None = None) -> PreprocessedItem | None:
    """Normalize, tokenize and length-filter one corpus item.

    Accepts any object with id/text attributes (source is carried through
    when present). Returns None when the item is dropped.
    """
    if policy is None:
        policy = LengthPolicy()
    normalized = normalize_text(item.text)
    tokens = tokenize(normalized)
    candidate = PreprocessedItem(
        id=item.id,
        normalized_text=normalized,
        tokens=tokens,
        word_count=len(tokens),
        source=getattr(item, "source", "unknown"),
        shadow_text=shadow_text(item.text),
    )
    return apply_length_policy(candidate, policy)
