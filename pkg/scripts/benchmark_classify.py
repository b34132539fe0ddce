#!/usr/bin/env python3
"""Measure relevance-classification throughput on synthetic 50-word items.

Generation is excluded from the timing; only classify_corpus is measured.

    python3 scripts/benchmark_classify.py --items 100000 --batches 2
"""
from __future__ import annotations

import argparse
import random
import time

from ctipipe.lexicon import load_keyword_dictionary, load_technical_dictionary
from ctipipe.preprocess import PreprocessedItem
from ctipipe.relevance import classify_corpus

WORDS = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima "
    "mike november oscar papa quebec romeo sierra tango uniform victor whiskey "
    "xray yankee zulu morning evening window ledger stone river meadow copper"
).split()

PLANTED = ["password", "exploit", "ransomware", "botnet", "malware"]


def make_batch(n: int, rng: random.Random) -> list[PreprocessedItem]:
    items = []
    for i in range(n):
        tokens = [rng.choice(WORDS) for _ in range(50)]
        if rng.random() < 0.01:
            tokens[rng.randrange(50)] = rng.choice(PLANTED)
        text = " ".join(tokens)
        items.append(
            PreprocessedItem(
                id=f"b{i:07d}",
                normalized_text=text,
                tokens=tokens,
                word_count=50,
                source="forum",
                shadow_text=text,
            )
        )
    return items


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--items", type=int, default=100_000)
    parser.add_argument("--batches", type=int, default=1)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    keyword_dict = load_keyword_dictionary()
    technical_dict = load_technical_dictionary()
    rng = random.Random(args.seed)

    total_items = 0
    total_secs = 0.0
    for b in range(args.batches):
        batch = make_batch(args.items, rng)
        start = time.perf_counter()
        labels, _ = classify_corpus(batch, keyword_dict, technical_dict,
                                    threads=args.threads)
        elapsed = time.perf_counter() - start
        relevant = sum(1 for lab in labels if lab.relevant)
        total_items += len(batch)
        total_secs += elapsed
        print(f"batch {b}: {len(batch)} items in {elapsed:.2f}s "
              f"({len(batch) / elapsed:,.0f} items/s), {relevant} relevant")
    print(f"total: {total_items} items in {total_secs:.2f}s "
          f"({total_items / total_secs:,.0f} items/s)")


if __name__ == "__main__":
    main()
