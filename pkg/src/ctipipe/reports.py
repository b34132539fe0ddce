"""Evaluation metrics, word-frequency differencing and report emitters.

Emitters produce plot-ready CSV; nothing here renders charts. Histogram
and flow files start with a "# format-version: N" line so downstream
tooling can detect layout changes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .preprocess import PreprocessedItem
from .relevance import BOTH, NON_TECHNICAL, TECHNICAL, ClassifySummary, RelevanceLabel
from .topics import OUTLIER, TopicAssignment

FORMAT_VERSION = 1


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None
    recall: float | None
    f1: float | None
    undefined: list[str] = field(default_factory=list)


def _as_prediction_map(predictions) -> dict[str, bool]:
    if isinstance(predictions, dict):
        return predictions
    return {label.id: label.relevant for label in predictions}


def evaluate(predictions, truth: dict[str, bool]) -> EvalReport:
    """Confusion counts and metrics over the truth ids.

    predictions may be a list of RelevanceLabel or an id -> bool map and
    must cover every truth id. Metrics whose denominator is zero come back
    as None and are listed in the undefined field; nothing is ever NaN.
    """
    pred = _as_prediction_map(predictions)
    missing = sorted(set(truth) - set(pred))
    if missing:
        raise ValueError(f"truth ids missing from predictions: {', '.join(missing)}")
    tp = fp = fn = tn = 0
    for item_id in truth:
        p, t = pred[item_id], truth[item_id]
        if p and t:
            tp += 1
        elif p and not t:
            fp += 1
        elif not p and t:
            fn += 1
        else:
            tn += 1
    undefined = []
    precision = recall = f1 = None
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        undefined.append("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        undefined.append("recall")
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        undefined.append("f1")
    return EvalReport(tp=tp, fp=fp, fn=fn, tn=tn, precision=precision, recall=recall, f1=f1, undefined=undefined)


@dataclass
class FrequencyDiffResult:
    table: dict[str, tuple[float, float, float]]
    top: list[tuple[str, float]]
    bottom: list[tuple[str, float]]


def frequency_diff(
    relevant_items: list[PreprocessedItem],
    irrelevant_items: list[PreprocessedItem],
    stopwords: frozenset[str] | None = None,
    k: int = 25,
) -> FrequencyDiffResult:
    """Normalized word-frequency difference between the two classes.

    Stop words are dropped before counting (pass None to keep them; then
    both frequency vectors sum to 1 and the diffs sum to 0). diff(term) =
    freq_relevant - freq_irrelevant; the top list ranks by diff descending,
    the bottom list ascending, ties lexicographic in both.
    """
    if not relevant_items or not irrelevant_items:
        raise ValueError("both classes must be non-empty")
    stop = stopwords or frozenset()

    def class_freq(items: list[PreprocessedItem]) -> dict[str, float]:
        counts: dict[str, int] = {}
        total = 0
        for item in items:
            for tok in item.tokens:
                if tok in stop:
                    continue
                counts[tok] = counts.get(tok, 0) + 1
                total += 1
        if total == 0:
            raise ValueError("class has no tokens after stop-word removal")
        return {term: count / total for term, count in counts.items()}

    rel = class_freq(relevant_items)
    irr = class_freq(irrelevant_items)
    table = {}
    for term in set(rel) | set(irr):
        fr = rel.get(term, 0.0)
        fi = irr.get(term, 0.0)
        table[term] = (fr, fi, fr - fi)
    ranked_desc = sorted(table.items(), key=lambda kv: (-kv[1][2], kv[0]))
    ranked_asc = sorted(table.items(), key=lambda kv: (kv[1][2], kv[0]))
    top = [(term, row[2]) for term, row in ranked_desc[:k]]
    bottom = [(term, row[2]) for term, row in ranked_asc[:k]]
    return FrequencyDiffResult(table=table, top=top, bottom=bottom)


@dataclass
class DistributionRow:
    source: str
    topic: int
    label: str
    count: int
    share: float
    main: bool


def topic_distribution(
    assignment: TopicAssignment,
    labels_map: dict[int, str] | None,
    source_map: dict[str, str],
    threshold: float = 0.02,
) -> list[DistributionRow]:
    """Per-source topic shares among that source's non-outlier items.

    Rows whose share exceeds the threshold are flagged as main topics.
    Shares per source sum to 1 (outliers never enter the denominator).
    """
    labels_map = labels_map or {}
    counts: dict[str, dict[int, int]] = {}
    for item_id in sorted(assignment.topics):
        topic = assignment.topics[item_id]
        if topic == OUTLIER:
            continue
        source = source_map[item_id]
        per_source = counts.setdefault(source, {})
        per_source[topic] = per_source.get(topic, 0) + 1
    rows = []
    for source in sorted(counts):
        total = sum(counts[source].values())
        for topic in sorted(counts[source]):
            count = counts[source][topic]
            share = count / total
            rows.append(
                DistributionRow(
                    source=source,
                    topic=topic,
                    label=labels_map.get(topic, f"topic-{topic}"),
                    count=count,
                    share=share,
                    main=share > threshold,
                )
            )
    return rows


@dataclass
class FlowReport:
    class_edges: list[tuple[str, str, int]]
    term_edges: list[tuple[str, str, str, int]]
    tech_share: list[tuple[str, float, int]]  # (source, share, relevant total)


def technicality_flow(labels: list[RelevanceLabel], source_map: dict[str, str]) -> FlowReport:
    """Sankey-style edge data: source -> technicality counts plus per-kind
    term counts, and the technical share per source.

    The technical share is (technical + both) / relevant items of the
    source; items without hits are not part of the flow.
    """
    class_counts: dict[tuple[str, str], int] = {}
    term_counts: dict[tuple[str, str, str], int] = {}
    relevant_totals: dict[str, int] = {}
    technicalish: dict[str, int] = {}
    for label in labels:
        if not label.relevant:
            continue
        source = source_map[label.id]
        key = (source, label.technicality)
        class_counts[key] = class_counts.get(key, 0) + 1
        relevant_totals[source] = relevant_totals.get(source, 0) + 1
        if label.technicality in (TECHNICAL, BOTH):
            technicalish[source] = technicalish.get(source, 0) + 1
        for hit in label.hits:
            tkey = (source, hit.kind, hit.term)
            term_counts[tkey] = term_counts.get(tkey, 0) + 1
    class_order = {NON_TECHNICAL: 0, TECHNICAL: 1, BOTH: 2}
    class_edges = sorted(
        ((src, tech, n) for (src, tech), n in class_counts.items()),
        key=lambda e: (e[0], class_order.get(e[1], 9)),
    )
    term_edges = sorted((src, kind, term, n) for (src, kind, term), n in term_counts.items())
    tech_share = [
        (source, technicalish.get(source, 0) / total, total)
        for source, total in sorted(relevant_totals.items())
    ]
    return FlowReport(class_edges=class_edges, term_edges=term_edges, tech_share=tech_share)


@dataclass
class HistogramReport:
    bins: list[tuple[float, float]]
    counts: dict[str, list[int]]


def wordcount_histogram(items: list[PreprocessedItem], bins: int = 20) -> HistogramReport:
    """Per-source histogram of log10(word_count) over the observed range.

    The binning is shared across sources so their rows are comparable.
    When every item has the same word count the histogram collapses to a
    single bin; with no items it is empty.
    """
    if not items:
        return HistogramReport(bins=[], counts={})
    values = [(item.source, math.log10(item.word_count)) for item in items]
    lo = min(v for _, v in values)
    hi = max(v for _, v in values)
    if hi == lo:
        edges = [(lo, hi)]
    else:
        width = (hi - lo) / bins
        edges = [(lo + i * width, lo + (i + 1) * width) for i in range(bins)]
        edges[-1] = (edges[-1][0], hi)
    counts: dict[str, list[int]] = {}
    nbins = len(edges)
    for source, value in values:
        if source not in counts:
            counts[source] = [0] * nbins
        if hi == lo:
            idx = 0
        else:
            idx = min(int((value - lo) / (hi - lo) * nbins), nbins - 1)
        counts[source][idx] += 1
    return HistogramReport(bins=edges, counts=dict(sorted(counts.items())))


# --- CSV emitters ---------------------------------------------------------


def write_summary_csv(summary: ClassifySummary, path: str | Path) -> None:
    """Relevance summary: source,total,relevant,share with share in percent
    (2 decimals) and a closing total row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "total", "relevant", "share"])
        for source in sorted(summary.per_source):
            row = summary.per_source[source]
            writer.writerow([row.source, row.total, row.relevant, row.share_pct])
        writer.writerow(["total", summary.total.total, summary.total.relevant, summary.total.share_pct])


def write_eval_csv(report: EvalReport, path: str | Path) -> None:
    """One-row confusion/metric report; undefined metrics are empty cells
    and named in the undefined column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tp", "fp", "fn", "tn", "precision", "recall", "f1", "undefined"])

        def fmt(x: float | None) -> str:
            return "" if x is None else repr(x)

        writer.writerow(
            [
                report.tp,
                report.fp,
                report.fn,
                report.tn,
                fmt(report.precision),
                fmt(report.recall),
                fmt(report.f1),
                ";".join(report.undefined),
            ]
        )


def write_frequency_csv(result: FrequencyDiffResult, path: str | Path) -> None:
    """Top/bottom diff terms: side,term,freq_relevant,freq_irrelevant,diff."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["side", "term", "freq_relevant", "freq_irrelevant", "diff"])
        for side, ranked in (("relevant", result.top), ("irrelevant", result.bottom)):
            for term, _diff in ranked:
                fr, fi, diff = result.table[term]
                writer.writerow([side, term, repr(fr), repr(fi), repr(diff)])


def write_distribution_csv(rows: list[DistributionRow], path: str | Path) -> None:
    """Topic shares: source,topic,label,count,share,main."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "topic", "label", "count", "share", "main"])
        for row in rows:
            writer.writerow([row.source, row.topic, row.label, row.count, repr(row.share), int(row.main)])


def write_flow_csv(flow: FlowReport, path: str | Path) -> None:
    """Edge list with a format-version header line.

    record=class rows carry source->technicality counts, record=term rows
    the per-kind term counts, record=tech_share the per-source share of
    technical or both among relevant items.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# format-version: {FORMAT_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(["record", "source", "category", "term", "value"])
        for source, tech, count in flow.class_edges:
            writer.writerow(["class", source, tech, "", count])
        for source, kind, term, count in flow.term_edges:
            writer.writerow(["term", source, kind, term, count])
        # relevant totals are derivable by summing a source's class rows
        for source, share, _total in flow.tech_share:
            writer.writerow(["tech_share", source, "", "", repr(share)])


def write_histogram_csv(hist: HistogramReport, path: str | Path) -> None:
    """Per-source bin counts with a format-version header line."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# format-version: {FORMAT_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(["source", "bin", "log10_low", "log10_high", "count"])
        for source, row in hist.counts.items():
            for idx, count in enumerate(row):
                lo, hi = hist.bins[idx]
                writer.writerow([source, idx, repr(lo), repr(hi), count])
