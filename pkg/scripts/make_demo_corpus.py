#!/usr/bin/env python3
"""Generate a synthetic cybercrime-style corpus for pipeline demos.

Items are plain English filler with threat terms planted into a
configurable share, spread over the three sources. Darknet items carry
urls with deliberate repeats so snapshot deduplication has work to do.

    python3 scripts/make_demo_corpus.py --items 500 --output demo.jsonl
"""
from __future__ import annotations

import argparse
import json
import random

FILLER = (
    "the quick analyst wrote about network activity during the late evening "
    "shift while reviewing open reports and comparing notes with colleagues "
    "from other teams before closing out the week and planning the next "
    "review cycle together"
).split()

PLANTED = [
    "password",
    "ransomware",
    "exploit",
    "botnet",
    "phishing",
    "malware",
    "breach",
    "carding",
]

TECHNICAL_TAILS = [
    "see d41d8cd98f00b204e9800998ecf8427e for the sample",
    "host was 10.20.30.40 on the usual port",
    "reach me at broker@example.net if interested",
    "tracked as CVE-2021-44228 upstream",
]

SOURCES = ["forum", "chat", "darknet"]


def make_item(i: int, rng: random.Random, relevant_share: float) -> dict:
    words = [rng.choice(FILLER) for _ in range(rng.randint(20, 60))]
    relevant = rng.random() < relevant_share
    if relevant:
        words[rng.randrange(len(words) // 2)] = rng.choice(PLANTED)
    text = " ".join(words)
    if relevant and rng.random() < 0.3:
        text += " " + rng.choice(TECHNICAL_TAILS)
    source = SOURCES[i % len(SOURCES)]
    rec = {
        "id": f"item-{i:06d}",
        "source": source,
        "timestamp": f"2023-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T12:00:00Z",
        "text": text,
    }
    if source == "darknet":
        rec["url"] = f"http://market{rng.randrange(max(1, i // 6 + 1))}.onion/listing"
    return rec


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--items", type=int, default=500)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--relevant-share", type=float, default=0.25)
    parser.add_argument("--output", default="demo_corpus.jsonl")
    args = parser.parse_args()

    rng = random.Random(args.seed)
    with open(args.output, "w", encoding="utf-8") as fh:
        for i in range(args.items):
            fh.write(json.dumps(make_item(i, rng, args.relevant_share)) + "\n")
    print(f"wrote {args.items} items to {args.output}")


if __name__ == "__main__":
    main()
