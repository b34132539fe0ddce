"""Keyword and technical dictionaries, fuzzy matching and token scanning.

Keyword matching is whole-token. Keywords of up to five characters must
match a token exactly; longer keywords also accept tokens that keep the
keyword's anchor prefix (the first ceil(0.8 * len) characters) and stay
within 80% normalized Levenshtein similarity. Scanning work is kept linear:
every token goes through set lookups plus one short-prefix gate, and the
quadratic similarity computation only ever runs for tokens whose prefix
reaches a stored anchor.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

try:  # private module was renamed across interpreter versions
    from re import _parser as _sre_parse
except ImportError:  # pragma: no cover
    import sre_parse as _sre_parse

KIND_KEYWORD = "keyword"
KIND_REGEX = "regex"
KIND_SOFTWARE = "software"

DEFAULT_FUZZ_MIN_LEN = 5
DEFAULT_FUZZ_THRESHOLD = 0.80
DEFAULT_ANCHOR_RATIO = 0.80

# largest character class worth enumerating for a scan gate
_CLASS_CAP = 128


def _chars_of_class(items, ignorecase: bool) -> frozenset[str] | None:
    """Chars matched by an uncomplemented class, None when not enumerable."""
    chars: set[str] = set()
    for op, arg in items:
        name = str(op)
        if name == "LITERAL":
            chars.add(chr(arg))
        elif name == "RANGE":
            lo, hi = arg
            if hi - lo >= _CLASS_CAP:
                return None
            chars.update(chr(c) for c in range(lo, hi + 1))
        else:
            # NEGATE or CATEGORY: complement sets and \w-style classes are
            # too broad to enumerate safely
            return None
        if len(chars) > _CLASS_CAP:
            return None
    if ignorecase:
        chars |= {c.swapcase() for c in chars}
    return frozenset(chars)


def _required_from_seq(seq, ignorecase: bool) -> frozenset[str] | None:
    """Smallest known charset among elements every match must consume.

    Elements that are optional, zero-width or not cheaply enumerable are
    passed over; that only ever weakens the gate, never makes it wrong.
    """
    best: frozenset[str] | None = None
    for op, arg in seq:
        name = str(op)
        got: frozenset[str] | None = None
        if name == "LITERAL":
            ch = chr(arg)
            got = frozenset({ch, ch.swapcase()}) if ignorecase else frozenset({ch})
        elif name == "IN":
            got = _chars_of_class(arg, ignorecase)
        elif name in ("MAX_REPEAT", "MIN_REPEAT", "POSSESSIVE_REPEAT"):
            lo, _hi, sub = arg
            if lo >= 1:
                got = _required_from_seq(sub, ignorecase)
        elif name == "SUBPATTERN":
            _gid, add_flags, del_flags, sub = arg
            ic = (ignorecase or bool(add_flags & re.IGNORECASE)) and not (
                del_flags & re.IGNORECASE
            )
            got = _required_from_seq(sub, ic)
        elif name == "ATOMIC_GROUP":
            got = _required_from_seq(arg, ignorecase)
        elif name == "BRANCH":
            _unused, alternatives = arg
            union: set[str] = set()
            for alt in alternatives:
                sub = _required_from_seq(alt, ignorecase)
                if sub is None:
                    union = set()
                    break
                union |= sub
            if union and len(union) <= _CLASS_CAP:
                got = frozenset(union)
        # AT, ANY, ASSERT, GROUPREF and the rest contribute nothing usable
        if got and (best is None or len(got) < len(best)):
            best = got
    return best


def required_chars(pattern: str) -> frozenset[str] | None:
    """Chars of which at least one must occur in any text the pattern matches.

    Returns None when no requirement can be derived. scan_regex uses this to
    skip whole patterns; the analysis is conservative, so a skipped pattern
    can never have matched.
    """
    try:
        tree = _sre_parse.parse(pattern)
        ignorecase = bool(tree.state.flags & re.IGNORECASE)
        return _required_from_seq(tree, ignorecase)
    except Exception:
        return None


@dataclass(frozen=True)
class Hit:
    kind: str
    term: str
    span: tuple[int, int]


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit costs, iterative two-row table."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def anchor_length(keyword_len: int, anchor_ratio: float = DEFAULT_ANCHOR_RATIO) -> int:
    # exact ceil(ratio * len); float products can land just above an
    # integer (0.55 * 100 == 55.000000000000007) and inflate the ceiling
    return math.ceil(Fraction(str(anchor_ratio)) * keyword_len)


def fuzzy_match(
    keyword: str,
    token: str,
    *,
    fuzz_min_len: int = DEFAULT_FUZZ_MIN_LEN,
    fuzz_threshold: float = DEFAULT_FUZZ_THRESHOLD,
    anchor_ratio: float = DEFAULT_ANCHOR_RATIO,
) -> bool:
    """Whole-token keyword comparison with prefix-anchored fuzzing.

    Keywords no longer than fuzz_min_len must equal the token. Longer
    keywords fuzz only the characters after the anchor prefix: the token
    must start with the anchor and similarity 1 - lev/max(len) must reach
    the threshold.
    """
    if len(keyword) <= fuzz_min_len:
        return token == keyword
    if token == keyword:
        return True
    anchor = keyword[: anchor_length(len(keyword), anchor_ratio)]
    if not token.startswith(anchor):
        return False
    dist = levenshtein(keyword, token)
    similarity = 1.0 - dist / max(len(keyword), len(token))
    return similarity >= fuzz_threshold


@dataclass
class KeywordDictionary:
    keywords: frozenset[str]
    fuzz_min_len: int = DEFAULT_FUZZ_MIN_LEN
    fuzz_threshold: float = DEFAULT_FUZZ_THRESHOLD
    anchor_ratio: float = DEFAULT_ANCHOR_RATIO
    rejected_lines: int = 0
    # scan index, derived from keywords
    _by_anchor: dict[str, tuple[str, ...]] = field(init=False, repr=False)
    _anchor_lengths: tuple[int, ...] = field(init=False, repr=False)
    _gate: frozenset[str] = field(init=False, repr=False)
    _gate_len: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError("keyword dictionary is empty")
        for kw in self.keywords:
            if not kw or kw != kw.lower() or any(c.isspace() for c in kw):
                raise ValueError(f"bad keyword {kw!r}: must be lowercase, no whitespace")
        by_anchor: dict[str, list[str]] = {}
        for kw in sorted(self.keywords):
            if len(kw) > self.fuzz_min_len:
                anchor = kw[: anchor_length(len(kw), self.anchor_ratio)]
                by_anchor.setdefault(anchor, []).append(kw)
        self._by_anchor = {a: tuple(kws) for a, kws in by_anchor.items()}
        self._anchor_lengths = tuple(sorted({len(a) for a in by_anchor}))
        self._gate_len = self._anchor_lengths[0] if self._anchor_lengths else 0
        self._gate = frozenset(a[: self._gate_len] for a in by_anchor)


@dataclass
class TechnicalDictionary:
    regexes: list[tuple[str, re.Pattern]]
    software_names: frozenset[str]
    rejected_names: int = 0
    _singles: frozenset[str] = field(init=False, repr=False)
    _multi: dict[str, tuple[tuple[list[str], str], ...]] = field(init=False, repr=False)
    _scan_plan: tuple[tuple[str, re.Pattern, frozenset[str] | None], ...] = field(
        init=False, repr=False
    )

    def __post_init__(self) -> None:
        for name in self.software_names:
            if len(name) < 4:
                raise ValueError(f"software name {name!r} shorter than 4 characters")
            if name != name.lower():
                raise ValueError(f"software name {name!r} is not lowercase")
        singles = set()
        multi: dict[str, list[tuple[list[str], str]]] = {}
        for name in sorted(self.software_names):
            words = name.split()
            if len(words) == 1:
                singles.add(name)
            else:
                multi.setdefault(words[0], []).append((words, name))
        self._singles = frozenset(singles)
        self._multi = {first: tuple(seqs) for first, seqs in multi.items()}
        self._scan_plan = tuple(
            (name, pat, required_chars(pat.pattern)) for name, pat in self.regexes
        )


def load_keyword_dictionary(
    path: str | Path | None = None,
    *,
    fuzz_min_len: int = DEFAULT_FUZZ_MIN_LEN,
    fuzz_threshold: float = DEFAULT_FUZZ_THRESHOLD,
    anchor_ratio: float = DEFAULT_ANCHOR_RATIO,
) -> KeywordDictionary:
    """Load keywords, one per line; '#' lines are comments.

    Keywords are lowercased and deduplicated. Lines with internal
    whitespace are rejected (counted, warned on stderr). An empty result
    is a fatal error. Without a path the bundled dictionary is used.
    """
    if path is None:
        from .resources import default_keywords_path

        path = default_keywords_path()
    keywords = set()
    rejected = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            if any(c.isspace() for c in word):
                print(
                    f"warning: {path}:{lineno}: keyword with whitespace"
                    f" skipped: {word!r}",
                    file=sys.stderr,
                )
                rejected += 1
                continue
            keywords.add(word.lower())
    if not keywords:
        raise ValueError(f"keyword dictionary {path} is empty")
    return KeywordDictionary(
        keywords=frozenset(keywords),
        fuzz_min_len=fuzz_min_len,
        fuzz_threshold=fuzz_threshold,
        anchor_ratio=anchor_ratio,
        rejected_lines=rejected,
    )


def load_technical_dictionary(
    regex_path: str | Path | None = None, software_path: str | Path | None = None
) -> TechnicalDictionary:
    """Load regex patterns (name<TAB>pattern per line) and software names.

    A pattern that does not compile is fatal and the error names the line.
    Software names shorter than four characters are skipped with a warning;
    the count of skipped names lands in rejected_names. Missing paths fall
    back to the bundled files.
    """
    if regex_path is None or software_path is None:
        from .resources import default_regexes_path, default_software_path

        if regex_path is None:
            regex_path = default_regexes_path()
        if software_path is None:
            software_path = default_software_path()
    regexes: list[tuple[str, re.Pattern]] = []
    with open(regex_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped.strip() or stripped.startswith("#"):
                continue
            if "\t" not in stripped:
                raise ValueError(f"{regex_path}:{lineno}: expected name<TAB>pattern")
            name, pattern = stripped.split("\t", 1)
            name = name.strip()
            if not name:
                raise ValueError(f"{regex_path}:{lineno}: empty pattern name")
            try:
                compiled = re.compile(pattern)
            except re.error as exc:
                raise ValueError(f"{regex_path}:{lineno}: pattern {name!r} does not compile: {exc}") from None
            regexes.append((name, compiled))

    names = set()
    rejected = 0
    with open(software_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            name = " ".join(line.strip().lower().split())
            if not name or name.startswith("#"):
                continue
            if len(name) < 4:
                print(f"warning: {software_path}:{lineno}: software name {name!r} shorter than 4 chars skipped", file=sys.stderr)
                rejected += 1
                continue
            names.add(name)
    return TechnicalDictionary(regexes=regexes, software_names=frozenset(names), rejected_names=rejected)


def scan_keywords(kd: KeywordDictionary, tokens: list[str]) -> list[Hit]:
    """All whole-token keyword hits, one per (token index, keyword).

    Hits are ordered by token index, then term, independent of dictionary
    file order.
    """
    hits: list[Hit] = []
    exact = kd.keywords
    gate = kd._gate
    gate_len = kd._gate_len
    lengths = kd._anchor_lengths
    by_anchor = kd._by_anchor
    min_len = kd.fuzz_min_len
    threshold = kd.fuzz_threshold
    ratio = kd.anchor_ratio
    for i, tok in enumerate(tokens):
        found = None
        if tok in exact:
            found = [tok]
        if gate_len and len(tok) >= gate_len and tok[:gate_len] in gate:
            for alen in lengths:
                if len(tok) < alen:
                    break
                cands = by_anchor.get(tok[:alen])
                if not cands:
                    continue
                for kw in cands:
                    if kw != tok and fuzzy_match(
                        kw, tok, fuzz_min_len=min_len, fuzz_threshold=threshold, anchor_ratio=ratio
                    ):
                        if found is None:
                            found = [kw]
                        else:
                            found.append(kw)
        if found is not None:
            for term in sorted(found):
                hits.append(Hit(KIND_KEYWORD, term, (i, i + 1)))
    return hits


def scan_regex(td: TechnicalDictionary, text: str) -> list[Hit]:
    """Non-overlapping leftmost matches, scanned per pattern.

    Matches from different patterns may overlap each other. Hits are
    ordered by span, then pattern name. Patterns whose required characters
    are all absent from the text are skipped without scanning.
    """
    hits: list[Hit] = []
    present: set[str] | None = None
    for name, pattern, gate in td._scan_plan:
        if gate is not None:
            if present is None:
                present = set(text)
            if gate.isdisjoint(present):
                continue
        for m in pattern.finditer(text):
            hits.append(Hit(KIND_REGEX, name, (m.start(), m.end())))
    hits.sort(key=lambda h: (h.span, h.term))
    return hits


def scan_software(td: TechnicalDictionary, tokens: list[str]) -> list[Hit]:
    """Exact whole-token software-name hits; never fires inside a longer token.

    Multi-word names match runs of consecutive tokens and the span covers
    the run.
    """
    hits: list[Hit] = []
    singles = td._singles
    multi = td._multi
    for i, tok in enumerate(tokens):
        if tok in singles:
            hits.append(Hit(KIND_SOFTWARE, tok, (i, i + 1)))
        seqs = multi.get(tok)
        if seqs:
            for words, name in seqs:
                end = i + len(words)
                if end <= len(tokens) and tokens[i:end] == words:
                    hits.append(Hit(KIND_SOFTWARE, name, (i, end)))
    hits.sort(key=lambda h: (h.span, h.term))
    return hits
