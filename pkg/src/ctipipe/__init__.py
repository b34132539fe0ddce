"""Relevance filtering and topic discovery for cybercrime text corpora."""

__version__ = "0.1.0"

from .corpus import Corpus, DataItem, load_corpus
from .lexicon import (
    Hit,
    KeywordDictionary,
    TechnicalDictionary,
    fuzzy_match,
    load_keyword_dictionary,
    load_technical_dictionary,
)
from .preprocess import LengthPolicy, PreprocessedItem, normalize_text, preprocess_item
from .relevance import RelevanceLabel, classify, classify_corpus
from .topics import (
    EmbeddingSet,
    TopicAssignment,
    cluster_density,
    ctfidf,
    embed_hashing,
    load_embeddings,
    reduce,
)

__all__ = [
    "__version__",
    "Corpus",
    "DataItem",
    "load_corpus",
    "Hit",
    "KeywordDictionary",
    "TechnicalDictionary",
    "fuzzy_match",
    "load_keyword_dictionary",
    "load_technical_dictionary",
    "LengthPolicy",
    "PreprocessedItem",
    "normalize_text",
    "preprocess_item",
    "RelevanceLabel",
    "classify",
    "classify_corpus",
    "EmbeddingSet",
    "TopicAssignment",
    "cluster_density",
    "ctfidf",
    "embed_hashing",
    "load_embeddings",
    "reduce",
]
