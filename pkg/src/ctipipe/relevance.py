"""CTI-relevance classification from dictionary scans.

An item is relevant as soon as any dictionary view hits it (high-recall
posture). The technicality label partitions relevant items by which views
fired: keyword hits only -> non_technical, regex/software hits only ->
technical, at least one of each -> both.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .lexicon import (
    KIND_KEYWORD,
    Hit,
    KeywordDictionary,
    TechnicalDictionary,
    scan_keywords,
    scan_regex,
    scan_software,
)
from .preprocess import PreprocessedItem

TECHNICAL = "technical"
NON_TECHNICAL = "non_technical"
BOTH = "both"
NONE = "none"


@dataclass(frozen=True)
class RelevanceLabel:
    id: str
    relevant: bool
    technicality: str
    hits: tuple[Hit, ...]


@dataclass
class SourceSummary:
    source: str
    total: int = 0
    relevant: int = 0

    @property
    def share(self) -> float:
        return self.relevant / self.total if self.total else 0.0

    @property
    def share_pct(self) -> str:
        """Share as a percent string with 2 decimals, '0.00' when undefined."""
        return f"{100.0 * self.share:.2f}"


@dataclass
class ClassifySummary:
    per_source: dict[str, SourceSummary] = field(default_factory=dict)
    total: SourceSummary = field(default_factory=lambda: SourceSummary("total"))
    undefined: bool = False  # set when the corpus was empty and shares are 0 by fiat


def classify(
    item: PreprocessedItem,
    keyword_dict: KeywordDictionary,
    technical_dict: TechnicalDictionary,
) -> RelevanceLabel:
    """Scan one item against both dictionaries and derive its label."""
    hits: list[Hit] = []
    hits.extend(scan_keywords(keyword_dict, item.tokens))
    hits.extend(scan_regex(technical_dict, item.shadow_text))
    hits.extend(scan_software(technical_dict, item.tokens))
    if not hits:
        return RelevanceLabel(id=item.id, relevant=False, technicality=NONE, hits=())
    has_keyword = False
    has_technical = False
    for hit in hits:
        if hit.kind == KIND_KEYWORD:
            has_keyword = True
        else:
            has_technical = True
    if has_keyword and has_technical:
        technicality = BOTH
    elif has_keyword:
        technicality = NON_TECHNICAL
    else:
        technicality = TECHNICAL
    return RelevanceLabel(id=item.id, relevant=True, technicality=technicality, hits=tuple(hits))


def classify_corpus(
    items: list[PreprocessedItem],
    keyword_dict: KeywordDictionary,
    technical_dict: TechnicalDictionary,
    threads: int = 1,
) -> tuple[list[RelevanceLabel], ClassifySummary]:
    """Classify every item; labels come back ordered by id.

    The summary carries per-source totals, relevant counts and shares plus
    an overall row. An empty corpus yields zero shares with the undefined
    flag set.
    """
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            labels = list(pool.map(lambda it: classify(it, keyword_dict, technical_dict), items))
    else:
        labels = [classify(item, keyword_dict, technical_dict) for item in items]

    summary = ClassifySummary()
    for item, label in zip(items, labels):
        row = summary.per_source.setdefault(item.source, SourceSummary(item.source))
        row.total += 1
        summary.total.total += 1
        if label.relevant:
            row.relevant += 1
            summary.total.relevant += 1
    summary.undefined = summary.total.total == 0

    return sorted(labels, key=lambda label: label.id), summary
