import json

import pytest

from ctipipe.corpus import (
    DataItem,
    dedup_snapshots,
    filter_language,
    guess_language,
    load_corpus,
    parse_timestamp,
    write_corpus,
)
from ctipipe.resources import load_stopwords

from conftest import write_jsonl


def make_record(i, **over):
    rec = {
        "id": f"it-{i:03d}",
        "source": "forum",
        "timestamp": "2023-01-02T03:04:05Z",
        "text": "some words in a line",
    }
    rec.update(over)
    return rec


class TestLoad:
    def test_accepts_valid_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [make_record(i) for i in range(5)])
        corpus = load_corpus(path)
        assert len(corpus) == 5
        assert corpus.provenance.accepted == 5
        assert corpus.provenance.rejected == []

    def test_line_accounting_is_total(self, tmp_path):
        path = tmp_path / "c.jsonl"
        lines = [
            json.dumps(make_record(0)),
            "not json at all",
            json.dumps(make_record(1, source="reddit")),
            json.dumps(make_record(2, timestamp="yesterday")),
            json.dumps(make_record(3, text="   ")),
            json.dumps(["a", "list"]),
            "",
            json.dumps(make_record(0)),  # duplicate id
            json.dumps(make_record(4)),
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        corpus = load_corpus(path)
        assert corpus.provenance.accepted == 2
        assert len(corpus.provenance.rejected) == 7
        assert corpus.provenance.accepted + len(corpus.provenance.rejected) == 9
        assert [it.id for it in corpus.items] == ["it-000", "it-004"]

    def test_rejection_reasons_name_the_problem(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [make_record(0, source="blog")])
        corpus = load_corpus(path)
        (lineno, reason), = corpus.provenance.rejected
        assert lineno == 1
        assert "source" in reason

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(OSError):
            load_corpus(tmp_path / "nope.jsonl")

    def test_optional_fields_survive_roundtrip(self, tmp_path):
        recs = [
            make_record(0, lang="en", url="http://a.onion/x", source="darknet"),
            make_record(1),
        ]
        path = tmp_path / "c.jsonl"
        write_jsonl(path, recs)
        corpus = load_corpus(path)
        out = tmp_path / "o.jsonl"
        write_corpus(corpus, out)
        again = load_corpus(out)
        assert again.items == corpus.items


class TestTimestamps:
    def test_zulu_suffix(self):
        ts = parse_timestamp("2023-01-02T03:04:05Z")
        assert ts.isoformat() == "2023-01-02T03:04:05+00:00"

    def test_offset_normalized_to_utc(self):
        ts = parse_timestamp("2023-01-02T05:04:05+02:00")
        assert ts.isoformat() == "2023-01-02T03:04:05+00:00"

    def test_naive_taken_as_utc(self):
        ts = parse_timestamp("2023-01-02T03:04:05")
        assert ts.isoformat() == "2023-01-02T03:04:05+00:00"

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            parse_timestamp("last tuesday")


def _corpus_from(records, tmp_path):
    path = tmp_path / "in.jsonl"
    write_jsonl(path, records)
    return load_corpus(path)


class TestDedup:
    def test_latest_snapshot_wins(self, tmp_path):
        recs = [
            make_record(0, source="darknet", url="u", timestamp="2023-01-01T00:00:00Z"),
            make_record(1, source="darknet", url="u", timestamp="2023-03-01T00:00:00Z"),
            make_record(2, source="darknet", url="u", timestamp="2023-02-01T00:00:00Z"),
        ]
        corpus = dedup_snapshots(_corpus_from(recs, tmp_path))
        assert [it.id for it in corpus.items] == ["it-001"]
        assert corpus.provenance.deduped == 2

    def test_timestamp_tie_goes_to_greater_id(self, tmp_path):
        recs = [
            make_record(5, source="darknet", url="u"),
            make_record(2, source="darknet", url="u"),
        ]
        corpus = dedup_snapshots(_corpus_from(recs, tmp_path))
        assert [it.id for it in corpus.items] == ["it-005"]

    def test_other_sources_and_urlless_untouched(self, tmp_path):
        recs = [
            make_record(0, source="forum", url="u"),
            make_record(1, source="forum", url="u"),
            make_record(2, source="darknet"),
            make_record(3, source="darknet"),
        ]
        corpus = dedup_snapshots(_corpus_from(recs, tmp_path))
        assert len(corpus.items) == 4
        assert corpus.provenance.deduped == 0

    def test_idempotent(self, tmp_path):
        recs = [
            make_record(i, source="darknet", url=f"u{i % 3}",
                        timestamp=f"2023-01-{i + 1:02d}T00:00:00Z")
            for i in range(9)
        ]
        once = dedup_snapshots(_corpus_from(recs, tmp_path))
        twice = dedup_snapshots(once)
        assert twice.items == once.items
        assert twice.provenance.deduped == once.provenance.deduped

    def test_brute_force_oracle(self, tmp_path):
        # oracle: group by url, pick max (timestamp, id) per group
        import itertools
        import random

        rng = random.Random(42)
        recs = []
        for i in range(60):
            recs.append(
                make_record(
                    i,
                    source="darknet",
                    url=f"u{rng.randrange(8)}",
                    timestamp=f"2023-01-{rng.randrange(1, 28):02d}T00:00:00Z",
                )
            )
        corpus = _corpus_from(recs, tmp_path)
        by_url = itertools.groupby(
            sorted(corpus.items, key=lambda it: it.url), key=lambda it: it.url
        )
        expect = {
            max(group, key=lambda it: (parse_timestamp(it.timestamp), it.id)).id
            for _url, group in by_url
        }
        got = {it.id for it in dedup_snapshots(corpus).items}
        assert got == expect


@pytest.fixture(scope="module")
def stops():
    return load_stopwords()


class TestLanguage:
    def test_short_text_is_und(self, stops):
        assert guess_language("the " * 19, stops) == "und"

    def test_twenty_tokens_at_ten_percent(self, stops):
        text = "the and " + "zzz " * 18  # 2 stops / 20 tokens = 0.10
        assert guess_language(text, stops) == "en"
        text = "the " + "zzz " * 19  # 1 / 20 < 0.10
        assert guess_language(text, stops) == "und"

    def test_pretagged_language_is_trusted(self, tmp_path, stops):
        english = "this is a long enough line with many common small words in it " * 2
        recs = [
            make_record(0, lang="de", text=english),
            make_record(1, lang="en", text="kurz und knapp"),
            make_record(2, text=english),
        ]
        corpus = filter_language(_corpus_from(recs, tmp_path), stopwords=stops)
        assert [it.id for it in corpus.items] == ["it-001", "it-002"]
