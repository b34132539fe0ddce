"""Command-line pipeline runner.

Stages communicate through files in the output directory so each
subcommand can be re-run independently:

    corpus.jsonl         validated, deduplicated, language-filtered items
    preprocessed.jsonl   {"id", "text", "word_count"} after normalization
    shadow.jsonl         {"id", "text", "source"} lightly cleaned text for
                         pattern scans (digits and case preserved)
    labels.jsonl         relevance decisions with per-item hits
    summary.csv          per-source relevant shares
    embeddings.jsonl     {"id", "vec"} hashing embeddings
    assignments.jsonl    {"id", "topic"} cluster memberships
    topics.json          per-topic size, label and ranked terms
    eval.csv             precision / recall / F1 against ground truth
    reports/             distribution and flow CSVs
    run_manifest.json    config hash, input digests, per-stage counts

Exit codes: 0 when every requested artifact was written, 1 for
configuration errors, 2 when a stage input file is missing.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import ConfigError, PipelineConfig, apply_overrides, load_config
from .corpus import dedup_snapshots, filter_language, load_corpus, write_corpus
from .lexicon import Hit, load_keyword_dictionary, load_technical_dictionary
from .preprocess import LengthPolicy, PreprocessedItem, preprocess_item, tokenize
from .relevance import RelevanceLabel, classify_corpus
from .reports import (
    evaluate,
    frequency_diff,
    technicality_flow,
    topic_distribution,
    wordcount_histogram,
    write_distribution_csv,
    write_eval_csv,
    write_flow_csv,
    write_frequency_csv,
    write_histogram_csv,
    write_summary_csv,
)
from .resources import (
    default_keywords_path,
    default_regexes_path,
    default_software_path,
    load_stopwords,
)
from .topics import (
    EmbeddingSet,
    apply_labels,
    cluster_density,
    ctfidf,
    embed_hashing,
    load_assignment,
    load_embeddings,
    load_topics,
    reduce,
    save_assignment,
    save_embeddings,
    save_topics,
    subset_embeddings,
    top_terms,
)

STAGES = ("ingest", "preprocess", "filter", "embed-hash", "topics", "eval", "report")


class MissingInputError(Exception):
    def __init__(self, path: str | Path):
        self.path = str(path)
        super().__init__(f"missing stage input: {self.path}")


class _Run:
    """Shared state for one CLI invocation."""

    def __init__(self, cfg: PipelineConfig, input_override: str | None):
        self.cfg = cfg
        self.input_override = input_override
        self.outdir = Path(cfg.output)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.inputs_read: dict[str, str] = {}
        self.counts: dict[str, dict] = {}
        self._stopwords = None

    def path(self, name: str) -> Path:
        return self.outdir / name

    def require(self, path: Path) -> Path:
        if not path.is_file():
            raise MissingInputError(path)
        return path

    def record_input(self, path: Path) -> Path:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.inputs_read[str(path)] = digest
        return path

    def stopwords(self):
        if self._stopwords is None:
            if self.cfg.stopwords:
                path = self.require(Path(self.cfg.stopwords))
                self.record_input(path)
                self._stopwords = load_stopwords(path)
            else:
                self._stopwords = load_stopwords()
        return self._stopwords

    def pmap(self, fn, items):
        if self.cfg.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(rec, dict):
                raise ValueError(f"{path}:{lineno}: expected an object")
            records.append(rec)
    return records


def _write_jsonl(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _load_preprocessed(run: _Run) -> list[PreprocessedItem]:
    """Rebuild PreprocessedItem objects from the two sidecar files."""
    pre_path = run.require(run.path("preprocessed.jsonl"))
    shadow_path = run.require(run.path("shadow.jsonl"))
    shadows = {}
    for rec in _read_jsonl(shadow_path):
        shadows[rec["id"]] = (rec.get("text", ""), rec.get("source", "unknown"))
    items = []
    for rec in _read_jsonl(pre_path):
        iid = rec["id"]
        text = rec["text"]
        shadow, source = shadows.get(iid, ("", "unknown"))
        tokens = tokenize(text)
        items.append(
            PreprocessedItem(
                id=iid,
                normalized_text=text,
                tokens=tokens,
                word_count=rec.get("word_count", len(tokens)),
                source=source,
                shadow_text=shadow,
            )
        )
    return items


# ---------------------------------------------------------------------------
# stages


def stage_ingest(run: _Run) -> None:
    cfg = run.cfg
    raw = run.input_override or cfg.corpus
    if not raw:
        raise ConfigError("ingest needs a corpus path (--input or config key 'corpus')")
    path = run.require(Path(raw))
    run.record_input(path)
    corpus = load_corpus(path)
    for lineno, reason in corpus.provenance.rejected:
        print(f"warning: {path}:{lineno}: {reason}", file=sys.stderr)
    corpus = dedup_snapshots(corpus)
    kept = filter_language(corpus, lang=cfg.language, stopwords=run.stopwords())
    write_corpus(kept, run.path("corpus.jsonl"))
    run.counts["ingest"] = {
        "lines": corpus.provenance.accepted + len(corpus.provenance.rejected),
        "accepted": corpus.provenance.accepted,
        "rejected": len(corpus.provenance.rejected),
        "deduplicated": kept.provenance.deduped,
        "kept": len(kept.items),
    }


def stage_preprocess(run: _Run) -> None:
    cfg = run.cfg
    src = Path(run.input_override) if run.input_override else run.path("corpus.jsonl")
    corpus = load_corpus(run.require(src))
    policy = LengthPolicy(
        min_words=cfg.min_words, max_words=cfg.max_words, overflow=cfg.overflow
    )
    processed = run.pmap(lambda item: preprocess_item(item, policy), corpus.items)
    kept = sorted((p for p in processed if p is not None), key=lambda p: p.id)
    _write_jsonl(
        run.path("preprocessed.jsonl"),
        (
            {"id": p.id, "text": p.normalized_text, "word_count": p.word_count}
            for p in kept
        ),
    )
    _write_jsonl(
        run.path("shadow.jsonl"),
        ({"id": p.id, "text": p.shadow_text, "source": p.source} for p in kept),
    )
    run.counts["preprocess"] = {
        "in": len(corpus.items),
        "kept": len(kept),
        "dropped": len(corpus.items) - len(kept),
    }


def _dictionary_path(override: str | None, default: Path, run: _Run) -> Path:
    path = Path(override) if override else default
    run.require(path)
    run.record_input(path)
    return path


def stage_filter(run: _Run) -> None:
    cfg = run.cfg
    items = _load_preprocessed(run)
    kw_path = _dictionary_path(cfg.keywords, default_keywords_path(), run)
    rx_path = _dictionary_path(cfg.regexes, default_regexes_path(), run)
    sw_path = _dictionary_path(cfg.software, default_software_path(), run)
    keyword_dict = load_keyword_dictionary(
        kw_path,
        fuzz_min_len=cfg.fuzz_min_len,
        fuzz_threshold=cfg.fuzz_threshold,
        anchor_ratio=cfg.anchor_ratio,
    )
    technical_dict = load_technical_dictionary(rx_path, sw_path)
    labels, summary = classify_corpus(
        items, keyword_dict, technical_dict, threads=cfg.threads
    )
    _write_jsonl(
        run.path("labels.jsonl"),
        (
            {
                "id": lab.id,
                "relevant": lab.relevant,
                "technicality": lab.technicality,
                "hits": [
                    {"kind": h.kind, "term": h.term, "span": list(h.span)}
                    for h in lab.hits
                ],
            }
            for lab in labels
        ),
    )
    write_summary_csv(summary, run.path("summary.csv"))
    run.counts["filter"] = {
        "total": summary.total.total,
        "relevant": summary.total.relevant,
        "per_source": {
            s.source: {"total": s.total, "relevant": s.relevant}
            for s in summary.per_source.values()
        },
    }


def stage_embed_hash(run: _Run) -> None:
    cfg = run.cfg
    items = _load_preprocessed(run)
    emb = {}
    for item in items:
        emb[item.id] = embed_hashing(item, dim=cfg.embed_dim, seed=cfg.seed)
    save_embeddings(EmbeddingSet(cfg.embed_dim, emb), run.path("embeddings.jsonl"))
    run.counts["embed-hash"] = {"items": len(items), "dim": cfg.embed_dim}


def stage_topics(run: _Run) -> None:
    cfg = run.cfg
    labels = _read_jsonl(run.require(run.path("labels.jsonl")))
    relevant_ids = [rec["id"] for rec in labels if rec.get("relevant")]
    if run.input_override:
        emb_path = Path(run.input_override)
    elif cfg.embeddings:
        emb_path = Path(cfg.embeddings)
    else:
        emb_path = run.path("embeddings.jsonl")
    run.require(emb_path)
    if emb_path != run.path("embeddings.jsonl"):
        run.record_input(emb_path)
    emb = load_embeddings(emb_path)
    emb = subset_embeddings(emb, relevant_ids)
    reduced = reduce(emb, cfg.target_dim, seed=cfg.seed)
    assignment = cluster_density(reduced, eps=cfg.eps, min_samples=cfg.min_samples)
    wanted = set(relevant_ids)
    items = [p for p in _load_preprocessed(run) if p.id in wanted]
    table = ctfidf(assignment, items)
    reps = top_terms(table, n=cfg.top_terms)
    label_map = None
    if cfg.label_map:
        label_map = run.require(Path(cfg.label_map))
        run.record_input(label_map)
    reps = apply_labels(reps, label_map)
    save_assignment(assignment, run.path("assignments.jsonl"))
    save_topics(reps, run.path("topics.json"))
    outliers = sum(1 for t in assignment.topics.values() if t == -1)
    run.counts["topics"] = {
        "items": len(assignment.topics),
        "clusters": assignment.n_topics,
        "outliers": outliers,
    }


def stage_eval(run: _Run) -> None:
    cfg = run.cfg
    truth_path = run.input_override or cfg.truth
    if not truth_path:
        raise ConfigError("eval needs a truth path (--input or config key 'truth')")
    truth_path = run.require(Path(truth_path))
    run.record_input(truth_path)
    labels = _read_jsonl(run.require(run.path("labels.jsonl")))
    predictions = {rec["id"]: bool(rec.get("relevant")) for rec in labels}
    truth = {}
    for rec in _read_jsonl(truth_path):
        if "id" not in rec or "label" not in rec:
            raise ValueError(f"{truth_path}: truth records need 'id' and 'label'")
        truth[rec["id"]] = bool(rec["label"])
    report = evaluate(predictions, truth)
    write_eval_csv(report, run.path("eval.csv"))
    run.counts["eval"] = {
        "tp": report.tp,
        "fp": report.fp,
        "fn": report.fn,
        "tn": report.tn,
    }


def stage_report(run: _Run) -> None:
    cfg = run.cfg
    items = _load_preprocessed(run)
    by_id = {p.id: p for p in items}
    labels = _read_jsonl(run.require(run.path("labels.jsonl")))
    reports_dir = run.path("reports")
    reports_dir.mkdir(parents=True, exist_ok=True)

    parsed = [
        RelevanceLabel(
            id=rec["id"],
            relevant=bool(rec.get("relevant")),
            technicality=rec.get("technicality", "none"),
            hits=tuple(
                Hit(kind=h["kind"], term=h["term"], span=tuple(h["span"]))
                for h in rec.get("hits", ())
            ),
        )
        for rec in labels
    ]
    source_map = {p.id: p.source for p in items}

    flow = technicality_flow(parsed, source_map)
    write_flow_csv(flow, reports_dir / "technicality_flow.csv")

    hist = wordcount_histogram(items)
    write_histogram_csv(hist, reports_dir / "wordcount_histogram.csv")

    relevant_items = [
        by_id[lab.id] for lab in parsed if lab.relevant and lab.id in by_id
    ]
    irrelevant_items = [
        by_id[lab.id] for lab in parsed if not lab.relevant and lab.id in by_id
    ]
    if relevant_items and irrelevant_items:
        diff = frequency_diff(
            relevant_items, irrelevant_items, stopwords=run.stopwords(), k=cfg.freq_terms
        )
        write_frequency_csv(diff, reports_dir / "frequency_diff.csv")
    else:
        print(
            "warning: skipping frequency_diff.csv, need both relevant and"
            " irrelevant items",
            file=sys.stderr,
        )

    assignment = load_assignment(run.require(run.path("assignments.jsonl")))
    reps = load_topics(run.require(run.path("topics.json")))
    labels_map = {rep.topic: rep.label or f"topic-{rep.topic}" for rep in reps}
    dist = topic_distribution(
        assignment, labels_map, source_map, threshold=cfg.share_threshold
    )
    write_distribution_csv(dist, reports_dir / "topic_distribution.csv")
    run.counts["report"] = {"rows": len(dist)}


_STAGE_FN = {
    "ingest": stage_ingest,
    "preprocess": stage_preprocess,
    "filter": stage_filter,
    "embed-hash": stage_embed_hash,
    "topics": stage_topics,
    "eval": stage_eval,
    "report": stage_report,
}


def _write_manifest(run: _Run) -> None:
    path = run.path("run_manifest.json")
    manifest = {}
    if path.is_file():
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, OSError):
            manifest = {}
    if not isinstance(manifest, dict):
        manifest = {}
    manifest["config_hash"] = run.cfg.config_hash()
    manifest["effective_config"] = run.cfg.semantic_dict()
    inputs = manifest.get("inputs")
    if not isinstance(inputs, dict):
        inputs = {}
    inputs.update(run.inputs_read)
    manifest["inputs"] = inputs
    stages = manifest.get("stages")
    if not isinstance(stages, dict):
        stages = {}
    stages.update(run.counts)
    manifest["stages"] = stages
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctipipe",
        description="Filter, label and cluster cybercrime text for threat signals.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--input", metavar="PATH", help="stage input file override")
    common.add_argument("--output", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=int, metavar="N")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--min-words", type=int, metavar="N", dest="min_words")
    common.add_argument("--max-words", type=int, metavar="N", dest="max_words")
    common.add_argument("--overflow", choices=("drop", "truncate"))
    common.add_argument("--eps", type=float, metavar="F")
    common.add_argument("--min-samples", type=int, metavar="N", dest="min_samples")
    common.add_argument(
        "--dim", type=int, metavar="N", dest="target_dim", help="reduced dimension"
    )
    common.add_argument("--top-terms", type=int, metavar="N", dest="top_terms")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("all",):
        sub.add_parser(name, parents=[common])
    return parser


_OVERRIDE_KEYS = (
    "output",
    "threads",
    "seed",
    "min_words",
    "max_words",
    "overflow",
    "eps",
    "min_samples",
    "target_dim",
    "top_terms",
)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        overrides = {key: getattr(args, key) for key in _OVERRIDE_KEYS}
        cfg = apply_overrides(cfg, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "all":
        stages = ["ingest", "preprocess", "filter", "embed-hash", "topics"]
        if cfg.truth:
            stages.append("eval")
        stages.append("report")
    else:
        stages = [args.command]

    # Under "all", --input names the raw corpus and applies to ingest only.
    runner = _Run(cfg, args.input)
    try:
        for stage in stages:
            if args.command == "all" and stage != "ingest":
                runner.input_override = None
            _STAGE_FN[stage](runner)
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_manifest(runner)
    return 0


def main() -> None:
    sys.exit(run())
