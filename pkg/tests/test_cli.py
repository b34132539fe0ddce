"""End-to-end runs of the command-line pipeline in temporary directories."""
import json

import pytest

from ctipipe.cli import run
from ctipipe.config import PipelineConfig, apply_overrides

from conftest import write_jsonl

ARTIFACTS = (
    "corpus.jsonl",
    "preprocessed.jsonl",
    "shadow.jsonl",
    "labels.jsonl",
    "summary.csv",
    "embeddings.jsonl",
    "assignments.jsonl",
    "topics.json",
    "reports/technicality_flow.csv",
    "reports/wordcount_histogram.csv",
    "reports/frequency_diff.csv",
    "reports/topic_distribution.csv",
    "run_manifest.json",
)


@pytest.fixture
def corpus_file(tmp_path):
    ts = "2023-05-01T00:00:0{}Z"
    records = [
        {
            "id": "a1",
            "source": "forum",
            "timestamp": ts.format(1),
            "lang": "en",
            "text": "the admin lost the password file again yesterday evening",
        },
        {
            "id": "a2",
            "source": "forum",
            "timestamp": ts.format(2),
            "lang": "en",
            "text": "connect to 192.168.0.1 for the control panel tonight",
        },
        {
            "id": "a3",
            "source": "chat",
            "timestamp": ts.format(3),
            "lang": "en",
            "text": "we talked about gardens and sunny weather all afternoon",
        },
        {
            "id": "a4",
            "source": "chat",
            "timestamp": ts.format(4),
            "lang": "en",
            "text": "too short",
        },
        # two snapshots of one darknet page; the later one survives dedup
        {
            "id": "d1",
            "source": "darknet",
            "timestamp": ts.format(5),
            "lang": "en",
            "url": "http://market1.onion/listing",
            "text": "fresh bank account logs for sale on the market today",
        },
        {
            "id": "d2",
            "source": "darknet",
            "timestamp": ts.format(6),
            "lang": "en",
            "url": "http://market1.onion/listing",
            "text": "updated bank account logs for sale on the market today",
        },
        # no lang tag and too few tokens to guess -> dropped as non-English
        {
            "id": "u1",
            "source": "forum",
            "timestamp": ts.format(7),
            "text": "ni siquiera remotamente parecido al idioma esperado aqui hoy",
        },
    ]
    path = tmp_path / "raw.jsonl"
    write_jsonl(path, records)
    return path


def run_all(corpus_file, outdir, extra=()):
    return run(
        [
            "all",
            "--input",
            str(corpus_file),
            "--output",
            str(outdir),
            "--min-samples",
            "1",
            *extra,
        ]
    )


class TestAllCommand:
    def test_writes_every_artifact(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        for name in ARTIFACTS:
            assert (out / name).is_file(), name
        # no truth configured, so no eval output
        assert not (out / "eval.csv").exists()

    def test_stage_counts(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        ingest = manifest["stages"]["ingest"]
        assert ingest["lines"] == 7
        assert ingest["accepted"] == 7
        assert ingest["rejected"] == 0
        assert ingest["deduplicated"] == 1
        assert ingest["kept"] == 5
        pre = manifest["stages"]["preprocess"]
        assert pre == {"in": 5, "kept": 4, "dropped": 1}
        assert manifest["stages"]["filter"]["total"] == 4

    def test_dedup_keeps_later_snapshot(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        ids = {json.loads(line)["id"] for line in (out / "corpus.jsonl").open()}
        assert "d2" in ids and "d1" not in ids

    def test_labels_split_by_hit_kind(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        labels = {
            rec["id"]: rec
            for rec in map(json.loads, (out / "labels.jsonl").open())
        }
        assert labels["a1"]["relevant"] is True
        assert labels["a1"]["technicality"] == "non_technical"
        assert labels["a2"]["technicality"] == "technical"
        assert any(h["kind"] == "regex" for h in labels["a2"]["hits"])
        assert labels["a3"]["relevant"] is False
        assert "a4" not in labels


class TestStagewiseEquivalence:
    def test_matches_all_byte_for_byte(self, corpus_file, tmp_path):
        out_all = tmp_path / "a"
        out_steps = tmp_path / "b"
        assert run_all(corpus_file, out_all) == 0
        flags = ["--output", str(out_steps), "--min-samples", "1"]
        assert run(["ingest", "--input", str(corpus_file), *flags]) == 0
        for stage in ("preprocess", "filter", "embed-hash", "topics", "report"):
            assert run([stage, *flags]) == 0

        rel_all = sorted(p.relative_to(out_all) for p in out_all.rglob("*") if p.is_file())
        rel_steps = sorted(
            p.relative_to(out_steps) for p in out_steps.rglob("*") if p.is_file()
        )
        assert rel_all == rel_steps
        for rel in rel_all:
            assert (out_all / rel).read_bytes() == (out_steps / rel).read_bytes(), rel


class TestExitCodes:
    def test_missing_stage_input_is_2(self, tmp_path, capsys):
        out = tmp_path / "empty"
        assert run(["preprocess", "--output", str(out)]) == 2
        err = capsys.readouterr().err
        assert "corpus.jsonl" in err

    def test_missing_raw_corpus_is_2(self, tmp_path):
        missing = tmp_path / "nope.jsonl"
        assert run(["ingest", "--input", str(missing), "--output", str(tmp_path / "o")]) == 2

    def test_unconfigured_corpus_is_1(self, tmp_path, capsys):
        assert run(["ingest", "--output", str(tmp_path / "o")]) == 1
        assert "corpus" in capsys.readouterr().err

    def test_bad_config_file_is_1(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"no_such_key": 1}')
        assert run(["all", "--config", str(cfg)]) == 1
        assert "no_such_key" in capsys.readouterr().err

    def test_unparseable_config_is_1(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{broken")
        assert run(["all", "--config", str(cfg)]) == 1

    def test_invalid_override_value_is_1(self, corpus_file, tmp_path, capsys):
        code = run(
            ["all", "--input", str(corpus_file), "--output", str(tmp_path / "o"),
             "--eps", "-1"]
        )
        assert code == 1
        assert "eps" in capsys.readouterr().err


class TestConfigPrecedence:
    def test_cli_flag_beats_config_file(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "corpus": str(corpus_file),
                    "output": str(tmp_path / "ignored"),
                    "min_words": 3,
                    "min_samples": 1,
                }
            )
        )
        code = run(
            ["all", "--config", str(cfg), "--output", str(out), "--min-words", "5"]
        )
        assert code == 0
        assert out.is_dir()
        assert not (tmp_path / "ignored").exists()
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["effective_config"]["min_words"] == 5

    def test_config_file_value_used_without_flag(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {"corpus": str(corpus_file), "min_words": 2, "min_samples": 1}
            )
        )
        assert run(["all", "--config", str(cfg), "--output", str(out)]) == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["effective_config"]["min_words"] == 2
        # the two-word item clears min_words=2 now
        pre = manifest["stages"]["preprocess"]
        assert pre["kept"] == 5


class TestEvalCommand:
    def test_eval_against_truth_file(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        preds = {
            rec["id"]: rec["relevant"]
            for rec in map(json.loads, (out / "labels.jsonl").open())
        }
        # truth agrees everywhere except one flipped relevant item
        flipped = sorted(k for k, v in preds.items() if v)[0]
        truth = [
            {"id": k, "label": (not v if k == flipped else v)}
            for k, v in preds.items()
        ]
        truth_path = tmp_path / "truth.jsonl"
        write_jsonl(truth_path, truth)
        code = run(["eval", "--input", str(truth_path), "--output", str(out)])
        assert code == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        n_rel = sum(1 for v in preds.values() if v)
        assert manifest["stages"]["eval"] == {
            "tp": n_rel - 1,
            "fp": 1,
            "fn": 0,
            "tn": len(preds) - n_rel,
        }
        header, row = (out / "eval.csv").read_text().splitlines()
        assert header.startswith("tp,fp,fn,tn")
        assert row.split(",")[:2] == [str(n_rel - 1), "1"]

    def test_truth_id_not_predicted_is_1(self, corpus_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        truth_path = tmp_path / "truth.jsonl"
        write_jsonl(truth_path, [{"id": "ghost", "label": True}])
        assert run(["eval", "--input", str(truth_path), "--output", str(out)]) == 1
        assert "ghost" in capsys.readouterr().err

    def test_eval_without_truth_is_1(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        assert run(["eval", "--output", str(out)]) == 1


class TestManifest:
    def test_keys_and_config_hash(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert set(manifest) == {"config_hash", "effective_config", "inputs", "stages"}
        expected = apply_overrides(
            PipelineConfig(), {"min_samples": 1, "output": str(out)}
        )
        assert manifest["config_hash"] == expected.config_hash()
        # execution plumbing stays out of the recorded config
        assert "threads" not in manifest["effective_config"]
        assert "output" not in manifest["effective_config"]
        assert str(corpus_file) in manifest["inputs"]

    def test_rerun_leaves_manifest_unchanged(self, corpus_file, tmp_path):
        out = tmp_path / "out"
        assert run_all(corpus_file, out) == 0
        first = (out / "run_manifest.json").read_bytes()
        assert run_all(corpus_file, out) == 0
        assert (out / "run_manifest.json").read_bytes() == first
