"""Embeddings, density clustering and c-TF-IDF topic representations.

The embedding/reduction/clustering stages are all file-backed, so any of
them can be swapped for externally computed results (e.g. neural sentence
embeddings or a different reducer/clusterer) as long as the record formats
match. The built-in implementations are deterministic for a fixed seed.
"""
from __future__ import annotations

import json
import math
import sys
from collections import Counter, deque
from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path

import numpy as np

from .preprocess import PreprocessedItem, tokenize

OUTLIER = -1


@dataclass
class EmbeddingSet:
    dim: int
    vectors: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass
class TopicAssignment:
    topics: dict[str, int]

    @property
    def n_topics(self) -> int:
        real = [t for t in self.topics.values() if t != OUTLIER]
        return max(real) + 1 if real else 0

    def members(self) -> dict[int, list[str]]:
        """Topic id -> sorted member ids, outliers under -1."""
        out: dict[int, list[str]] = {}
        for item_id in sorted(self.topics):
            out.setdefault(self.topics[item_id], []).append(item_id)
        return out


@dataclass
class TopicRepresentation:
    topic: int
    size: int
    terms: list[tuple[str, float]]
    label: str | None = None


@dataclass
class CtfidfTable:
    """Per-topic term weights plus the class sizes they were computed from."""

    weights: dict[int, dict[str, float]] = field(default_factory=dict)
    sizes: dict[int, int] = field(default_factory=dict)

    def weight(self, topic: int, term: str) -> float:
        return self.weights.get(topic, {}).get(term, 0.0)


def embed_hashing(item: PreprocessedItem, dim: int = 256, seed: int = 0) -> np.ndarray:
    """Deterministic feature-hashing embedding of the item's tokens.

    One keyed hash picks the bucket, a second keyed hash picks the sign,
    and the result is L2-normalized. Items without tokens map to the zero
    vector.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    vec = np.zeros(dim, dtype=np.float64)
    key = seed.to_bytes(8, "little", signed=True)
    for tok in item.tokens:
        digest = blake2b(tok.encode("utf-8"), key=key, digest_size=16).digest()
        idx = int.from_bytes(digest[:8], "big") % dim
        sign = 1.0 if digest[8] & 1 else -1.0
        vec[idx] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def embed_corpus(items: list[PreprocessedItem], dim: int = 256, seed: int = 0) -> EmbeddingSet:
    vectors = {item.id: embed_hashing(item, dim=dim, seed=seed) for item in items}
    return EmbeddingSet(dim=dim, vectors=vectors)


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Read line-delimited {"id","vec"} records into an EmbeddingSet.

    Mixed dimensions, non-finite components, duplicate or missing fields
    are all fatal.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict) or "id" not in obj or "vec" not in obj:
                raise ValueError(f"{path}:{lineno}: expected an object with id and vec")
            item_id = obj["id"]
            if not isinstance(item_id, str) or not item_id:
                raise ValueError(f"{path}:{lineno}: bad id")
            if item_id in vectors:
                raise ValueError(f"{path}:{lineno}: duplicate id {item_id!r}")
            vec = np.asarray(obj["vec"], dtype=np.float64)
            if vec.ndim != 1 or vec.size == 0:
                raise ValueError(f"{path}:{lineno}: vec must be a non-empty flat list")
            if dim is None:
                dim = int(vec.size)
            elif vec.size != dim:
                raise ValueError(f"{path}:{lineno}: dimension mismatch: {vec.size} != {dim}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{path}:{lineno}: non-finite component in vector for {item_id!r}")
            vectors[item_id] = vec
    if dim is None:
        raise ValueError(f"{path}: no embedding records")
    return EmbeddingSet(dim=dim, vectors=vectors)


def save_embeddings(emb: EmbeddingSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item_id in sorted(emb.vectors):
            vec = [float(x) for x in emb.vectors[item_id]]
            fh.write(json.dumps({"id": item_id, "vec": vec}) + "\n")


def subset_embeddings(emb: EmbeddingSet, ids: list[str]) -> EmbeddingSet:
    """Restrict to the given ids; unknown ids are fatal and all listed."""
    missing = sorted(set(ids) - set(emb.vectors))
    if missing:
        raise ValueError(f"embeddings missing for ids: {', '.join(missing)}")
    return EmbeddingSet(dim=emb.dim, vectors={i: emb.vectors[i] for i in ids})


def reduce(emb: EmbeddingSet, target_dim: int, seed: int = 0) -> EmbeddingSet:
    """Seeded Gaussian random projection to target_dim, scaled 1/sqrt(target_dim)."""
    if target_dim >= emb.dim:
        raise ValueError(f"target_dim {target_dim} must be < dim {emb.dim}")
    if target_dim < 1:
        raise ValueError("target_dim must be >= 1")
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((emb.dim, target_dim))
    scale = 1.0 / math.sqrt(target_dim)
    vectors = {
        item_id: (emb.vectors[item_id] @ matrix) * scale
        for item_id in sorted(emb.vectors)
    }
    return EmbeddingSet(dim=target_dim, vectors=vectors)


def cluster_density(emb: EmbeddingSet, eps: float, min_samples: int) -> TopicAssignment:
    """Density clustering with outliers (DBSCAN semantics).

    A point is core when at least min_samples points (itself included) lie
    within Euclidean eps. Clusters are connected core regions plus border
    points; anything unreachable is the outlier topic -1. Expansion walks
    ids in sorted order, and final cluster ids are renumbered so the
    cluster containing the lowest item id gets 0, the next 1, and so on.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    ids = sorted(emb.vectors)
    n = len(ids)
    if n == 0:
        return TopicAssignment(topics={})
    X = np.stack([emb.vectors[i] for i in ids])
    sq = (X * X).sum(axis=1)
    eps2 = eps * eps
    neighbors: list[np.ndarray] = []
    block = max(1, min(n, 2048))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (X[start:stop] @ X.T)
        np.maximum(d2, 0.0, out=d2)
        for row in d2:
            neighbors.append(np.flatnonzero(row <= eps2))
    core = [len(nb) >= min_samples for nb in neighbors]

    labels = [OUTLIER] * n
    next_label = 0
    for i in range(n):
        if not core[i] or labels[i] != OUTLIER:
            continue
        labels[i] = next_label
        queue = deque([i])
        while queue:
            p = queue.popleft()
            for q in neighbors[p]:
                q = int(q)
                if labels[q] == OUTLIER:
                    labels[q] = next_label
                    if core[q]:
                        queue.append(q)
        next_label += 1

    # renumber clusters by their lowest contained id (ids are sorted, so
    # the lowest index inside each cluster is its lowest id)
    first_index: dict[int, int] = {}
    for idx, lab in enumerate(labels):
        if lab != OUTLIER and lab not in first_index:
            first_index[lab] = idx
    remap = {
        old: new
        for new, old in enumerate(sorted(first_index, key=first_index.get))
    }
    topics = {
        ids[i]: (remap[labels[i]] if labels[i] != OUTLIER else OUTLIER)
        for i in range(n)
    }
    return TopicAssignment(topics=topics)


def ctfidf(assignment: TopicAssignment, items: list[PreprocessedItem]) -> CtfidfTable:
    """Class-based TF-IDF weights: W(t,c) = tf(t,c) * ln(1 + A/f(t)).

    tf counts term t in class c, f(t) is t's total count across classes,
    and A is the average token count per class. Outlier items never touch
    the counts. If everything is an outlier the table is empty and a
    warning goes to stderr.
    """
    by_id = {item.id: item for item in items}
    missing = sorted(set(assignment.topics) - set(by_id))
    if missing:
        raise ValueError(f"items missing for assigned ids: {', '.join(missing)}")

    class_counts: dict[int, Counter] = {}
    for item_id in sorted(assignment.topics):
        topic = assignment.topics[item_id]
        if topic == OUTLIER:
            continue
        tokens = tokenize(by_id[item_id].normalized_text)
        class_counts.setdefault(topic, Counter()).update(tokens)

    table = CtfidfTable()
    table.sizes = _class_sizes(assignment)
    if not class_counts:
        print("warning: all items are outliers; c-TF-IDF table is empty", file=sys.stderr)
        return table

    total_count: Counter = Counter()
    total_tokens = 0
    for counts in class_counts.values():
        total_count.update(counts)
        total_tokens += sum(counts.values())
    avg_tokens = total_tokens / len(class_counts)

    for topic, counts in class_counts.items():
        weights = {}
        for term, tf in counts.items():
            weights[term] = tf * math.log(1.0 + avg_tokens / total_count[term])
        table.weights[topic] = weights
    return table


def _class_sizes(assignment: TopicAssignment) -> dict[int, int]:
    sizes: dict[int, int] = {}
    for topic in assignment.topics.values():
        if topic != OUTLIER:
            sizes[topic] = sizes.get(topic, 0) + 1
    return sizes


def top_terms(table: CtfidfTable, n: int = 15) -> list[TopicRepresentation]:
    """The n heaviest terms per topic, ties broken lexicographically."""
    if n < 1:
        raise ValueError("n must be >= 1")
    reps = []
    for topic in sorted(table.weights):
        ranked = sorted(table.weights[topic].items(), key=lambda kv: (-kv[1], kv[0]))
        reps.append(
            TopicRepresentation(
                topic=topic,
                size=table.sizes.get(topic, 0),
                terms=[(term, weight) for term, weight in ranked[:n]],
            )
        )
    return reps


def apply_labels(
    reps: list[TopicRepresentation],
    label_map: str | Path | dict | None,
) -> list[TopicRepresentation]:
    """Attach display labels; unlabeled topics get "topic-<id>".

    The map file is a JSON object {topic id: label}. Labels for topic ids
    that do not exist draw a warning and are ignored.
    """
    if label_map is None:
        mapping: dict[int, str] = {}
    elif isinstance(label_map, dict):
        mapping = {int(k): str(v) for k, v in label_map.items()}
    else:
        with open(label_map, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{label_map}: label map must be a JSON object")
        mapping = {int(k): str(v) for k, v in raw.items()}

    known = {rep.topic for rep in reps}
    for topic in sorted(mapping):
        if topic not in known:
            print(f"warning: label for unknown topic {topic} ignored", file=sys.stderr)
    for rep in reps:
        rep.label = mapping.get(rep.topic, f"topic-{rep.topic}")
    return reps


def save_assignment(assignment: TopicAssignment, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item_id in sorted(assignment.topics):
            fh.write(json.dumps({"id": item_id, "topic": assignment.topics[item_id]}) + "\n")


def load_assignment(path: str | Path) -> TopicAssignment:
    topics: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if not isinstance(obj, dict) or "id" not in obj or "topic" not in obj:
                raise ValueError(f"{path}:{lineno}: expected an object with id and topic")
            topics[obj["id"]] = int(obj["topic"])
    return TopicAssignment(topics=topics)


def save_topics(reps: list[TopicRepresentation], path: str | Path) -> None:
    payload = [
        {
            "topic": rep.topic,
            "size": rep.size,
            "label": rep.label if rep.label is not None else f"topic-{rep.topic}",
            "terms": [[term, weight] for term, weight in rep.terms],
        }
        for rep in reps
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_topics(path: str | Path) -> list[TopicRepresentation]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    reps = []
    for entry in payload:
        reps.append(
            TopicRepresentation(
                topic=int(entry["topic"]),
                size=int(entry["size"]),
                terms=[(t, float(w)) for t, w in entry["terms"]],
                label=entry.get("label"),
            )
        )
    return reps
