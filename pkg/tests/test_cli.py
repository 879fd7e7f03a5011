import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from autodidact.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def corpus_dir(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    (d / "a.txt").write_text(
        " ".join(f"alpha fact {i} about searching." for i in range(40)), encoding="utf-8")
    (d / "b.jsonl").write_text(
        "\n".join(json.dumps({"id": f"r{i}", "text": f"beta record {i} on sorting"})
                  for i in range(10)),
        encoding="utf-8")
    return d


def build_index(runner, corpus_dir, tmp_path):
    chunks = tmp_path / "chunks.jsonl"
    index_dir = tmp_path / "idx"
    r = runner.invoke(main, ["ingest", "--corpus", str(corpus_dir),
                             "--out", str(chunks), "--chunk-size", "20",
                             "--overlap", "2"])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main, ["index", "--chunks", str(chunks), "--out", str(index_dir)])
    assert r.exit_code == 0, r.output
    return chunks, index_dir


class TestIngestIndex:
    def test_ingest_writes_chunks(self, runner, corpus_dir, tmp_path):
        chunks, index_dir = build_index(runner, corpus_dir, tmp_path)
        rows = [json.loads(l) for l in chunks.read_text().splitlines()]
        assert rows
        assert set(rows[0]) == {"chunk_id", "source_doc", "text", "span"}
        assert (index_dir / "header.json").exists()
        assert (index_dir / "entries.jsonl").exists()

    def test_raft_build_and_split(self, runner, corpus_dir, tmp_path):
        chunks, index_dir = build_index(runner, corpus_dir, tmp_path)
        rows = [json.loads(l) for l in chunks.read_text().splitlines()]
        qa = tmp_path / "qa.jsonl"
        qa.write_text("\n".join(
            json.dumps({"question": f"q{i}", "oracle_chunk_id": rows[i]["chunk_id"],
                        "answer": f"a{i}"})
            for i in range(min(10, len(rows)))), encoding="utf-8")
        out = tmp_path / "raft.jsonl"
        r = runner.invoke(main, ["raft-build", "--qa", str(qa), "--index", str(index_dir),
                                 "--k", "3", "--p-oracle", "0.8", "--seed", "5",
                                 "--out", str(out)])
        assert r.exit_code == 0, r.output
        examples = [json.loads(l) for l in out.read_text().splitlines()]
        for ex in examples:
            assert len(ex["docs"]) == 3
            assert ex["oracle_present"] == (ex["oracle_position"] is not None)
        r = runner.invoke(main, ["split", "--in", str(out), "--ratios", "0.8,0.1,0.1",
                                 "--seed", "1"])
        assert r.exit_code == 0, r.output
        train = [json.loads(l)
                 for l in Path(str(out).replace(".jsonl", ".train.jsonl"))
                 .read_text().splitlines()]
        assert len(train) == 8


class TestEval:
    def test_eval_writes_bundle_and_table(self, runner, corpus_dir, tmp_path):
        chunks, index_dir = build_index(runner, corpus_dir, tmp_path)
        qa = tmp_path / "qa.jsonl"
        qa.write_text("\n".join(
            json.dumps({"question": f"what about fact {i}",
                        "answer": f"alpha fact {i} about searching"})
            for i in range(5)), encoding="utf-8")
        report = tmp_path / "report.json"
        r = runner.invoke(main, ["eval", "--qa", str(qa), "--index", str(index_dir),
                                 "--report", str(report), "--text"])
        assert r.exit_code == 0, r.output
        for suffix in (".json", ".csv", ".png"):
            assert report.with_suffix(suffix).exists()
        doc = json.loads(report.read_text())
        assert doc["n_items"] == 5
        for row in ("ROUGE-1", "ROUGE-2", "ROUGE-L", "Average BLEU", "Cosine Similarity"):
            assert row in r.output
        csv_text = report.with_suffix(".csv").read_text()
        assert csv_text.startswith("metric,score")


class TestDemo:
    def test_demo_deterministic(self, runner, tmp_path):
        a = runner.invoke(main, ["demo", "--seed", "7",
                                 "--store", str(tmp_path / "s1")])
        b = runner.invoke(main, ["demo", "--seed", "7",
                                 "--store", str(tmp_path / "s2")])
        assert a.exit_code == 0, a.output
        assert a.output == b.output
        doc = json.loads(a.output)
        assert doc["exam"]["overall_passed"] is True

    def test_export_deck_from_demo_store(self, runner, tmp_path):
        store = tmp_path / "s"
        r = runner.invoke(main, ["demo", "--seed", "7", "--store", str(store)])
        assert r.exit_code == 0
        doc = json.loads(r.output)
        node = doc["nodes"][0]["node_id"]
        r = runner.invoke(main, ["export-deck", "--user", "demo-user", "--node", node,
                                 "--format", "markdown", "--store", str(store)])
        assert r.exit_code == 0, r.output
        assert "## " in r.output
