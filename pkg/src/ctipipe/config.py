"""Pipeline configuration: defaults, config-file loading, CLI overrides."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

DEFAULT_SEED = 11


class ConfigError(Exception):
    """Raised for unreadable, unparseable or out-of-range configuration."""


@dataclass
class PipelineConfig:
    # input paths; dictionary paths default to the bundled fixtures
    corpus: str | None = None
    keywords: str | None = None
    regexes: str | None = None
    software: str | None = None
    stopwords: str | None = None
    embeddings: str | None = None
    label_map: str | None = None
    truth: str | None = None
    output: str = "out"
    # language filter
    language: str = "en"
    # length policy
    min_words: int = 7
    max_words: int = 1000
    overflow: str = "drop"
    # fuzzy matching
    fuzz_min_len: int = 5
    fuzz_threshold: float = 0.80
    anchor_ratio: float = 0.80
    # embedding and clustering
    embed_dim: int = 256
    target_dim: int = 5
    eps: float = 0.5
    min_samples: int = 100
    seed: int = DEFAULT_SEED
    # reports
    top_terms: int = 15
    share_threshold: float = 0.02
    freq_terms: int = 25
    # execution
    threads: int = 1

    def validate(self) -> None:
        if self.min_words < 1:
            raise ConfigError("min_words must be >= 1")
        if self.max_words <= self.min_words:
            raise ConfigError("max_words must be > min_words")
        if self.overflow not in ("drop", "truncate"):
            raise ConfigError(f"overflow must be drop or truncate, not {self.overflow!r}")
        if not 0.0 < self.fuzz_threshold <= 1.0:
            raise ConfigError("fuzz_threshold must be in (0, 1]")
        if not 0.0 < self.anchor_ratio <= 1.0:
            raise ConfigError("anchor_ratio must be in (0, 1]")
        if self.fuzz_min_len < 1:
            raise ConfigError("fuzz_min_len must be >= 1")
        if self.embed_dim < 2:
            raise ConfigError("embed_dim must be >= 2")
        if self.target_dim < 1:
            raise ConfigError("target_dim must be >= 1")
        if self.eps <= 0:
            raise ConfigError("eps must be > 0")
        if self.min_samples < 1:
            raise ConfigError("min_samples must be >= 1")
        if self.top_terms < 1:
            raise ConfigError("top_terms must be >= 1")
        if self.freq_terms < 1:
            raise ConfigError("freq_terms must be >= 1")
        if self.share_threshold < 0:
            raise ConfigError("share_threshold must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def semantic_dict(self) -> dict:
        """Config without execution plumbing (thread count, output dir).

        Those settings must never change results, so they stay out of the
        recorded config and its hash; reruns with different parallelism or
        target directories produce identical manifests.
        """
        out = self.to_dict()
        for key in ("threads", "output"):
            out.pop(key)
        return out

    def config_hash(self) -> str:
        import hashlib

        canonical = json.dumps(
            self.semantic_dict(), sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_FIELDS = {f.name for f in dataclasses.fields(PipelineConfig)}


def load_config(path: str | Path) -> PipelineConfig:
    """Read a JSON config file whose keys mirror PipelineConfig fields."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = sorted(set(raw) - _FIELDS)
    if unknown:
        raise ConfigError(f"config {path} has unknown keys: {', '.join(unknown)}")
    cfg = PipelineConfig(**raw)
    try:
        cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Return a copy with non-None override values applied (CLI wins)."""
    effective = {k: v for k, v in overrides.items() if v is not None}
    unknown = sorted(set(effective) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown override keys: {', '.join(unknown)}")
    out = dataclasses.replace(cfg, **effective)
    out.validate()
    return out
