"""Neural sentence-embedding exporter.

Reads preprocessed {"id", "text"} records and writes the pipeline's
embeddings format: one {"id", "vec"} JSON object per line with a constant
dimension. The output file appears atomically; a failed run removes its
partial file and reports the item where the encoder gave up.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

DEFAULT_MODEL = "basel/ATTACK-BERT"
DEFAULT_BATCH = 32


class ExportError(Exception):
    pass


@dataclass
class ExportJob:
    input: str
    output: str
    model: str = DEFAULT_MODEL
    batch: int = DEFAULT_BATCH

    def validate(self) -> None:
        if self.batch < 1:
            raise ExportError("batch size must be >= 1")


def read_items(path: str | Path) -> list[tuple[str, str]]:
    """(id, text) pairs from line-delimited records; ids must be unique.

    Extra record fields are ignored so the primary pipeline's preprocessed
    file works as-is.
    """
    items: list[tuple[str, str]] = []
    seen: set[str] = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
                raise ExportError(f"{path}:{lineno}: expected an object with id and text")
            item_id = rec["id"]
            if not isinstance(item_id, str) or not item_id:
                raise ExportError(f"{path}:{lineno}: bad id")
            if item_id in seen:
                raise ExportError(f"{path}:{lineno}: duplicate id {item_id!r}")
            seen.add(item_id)
            items.append((item_id, str(rec["text"])))
    if not items:
        raise ExportError(f"{path}: no input records")
    return items


def load_encoder(model: str):
    """Wrap a sentence-transformers model as callable(list[str]) -> vectors.

    Inference runs in evaluation mode without gradients, so identical
    inputs always produce identical vectors.
    """
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ExportError(f"sentence-transformers is not installed: {exc}") from None
    try:
        st = SentenceTransformer(model)
    except Exception as exc:
        raise ExportError(f"cannot load model {model!r}: {exc}") from exc

    def encode(texts: list[str]):
        return st.encode(texts, batch_size=len(texts), show_progress_bar=False,
                         convert_to_numpy=True)

    return encode


def export_embeddings(job: ExportJob, encoder=None) -> int:
    """Write one embedding record per input item; returns the row count.

    The encoder maps a batch of texts to equal-length vectors of finite
    floats. Encoder failure aborts naming the first item of the failing
    batch; a bad vector aborts naming its item. Either way the partial
    output is deleted.
    """
    job.validate()
    items = read_items(job.input)
    if encoder is None:
        encoder = load_encoder(job.model)
    out_path = Path(job.output)
    if out_path.parent != Path("."):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = out_path.with_name(out_path.name + ".partial")
    dim: int | None = None
    rows = 0
    try:
        with open(tmp_path, "w", encoding="utf-8") as fh:
            for start in range(0, len(items), job.batch):
                chunk = items[start : start + job.batch]
                try:
                    vectors = encoder([text for _id, text in chunk])
                except Exception as exc:
                    raise ExportError(
                        f"encoder failed at item {chunk[0][0]!r}: {exc}"
                    ) from exc
                if len(vectors) != len(chunk):
                    raise ExportError(
                        f"encoder returned {len(vectors)} vectors for {len(chunk)}"
                        f" items starting at {chunk[0][0]!r}"
                    )
                for (item_id, _text), vec in zip(chunk, vectors):
                    values = [float(x) for x in vec]
                    if not values:
                        raise ExportError(f"empty vector for item {item_id!r}")
                    if dim is None:
                        dim = len(values)
                    elif len(values) != dim:
                        raise ExportError(
                            f"vector for item {item_id!r} has length"
                            f" {len(values)}, want {dim}"
                        )
                    if not all(math.isfinite(x) for x in values):
                        raise ExportError(
                            f"non-finite component in vector for item {item_id!r}"
                        )
                    fh.write(json.dumps({"id": item_id, "vec": values}) + "\n")
                    rows += 1
        os.replace(tmp_path, out_path)
    except BaseException:
        tmp_path.unlink(missing_ok=True)
        raise
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exporter",
        description="Export sentence-encoder embeddings for preprocessed items.",
    )
    parser.add_argument("--input", required=True, metavar="PATH",
                        help="preprocessed records with id and text")
    parser.add_argument("--model", default=DEFAULT_MODEL, metavar="NAME",
                        help="sentence-transformers model identifier")
    parser.add_argument("--batch", type=int, default=DEFAULT_BATCH, metavar="N")
    parser.add_argument("--output", required=True, metavar="PATH")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        input=args.input, output=args.output, model=args.model, batch=args.batch
    )
    try:
        rows = export_embeddings(job)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {rows} embeddings to {job.output}")
    return 0


def main() -> None:
    sys.exit(run())
