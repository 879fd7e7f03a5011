"""Admin command line: serve, ingest, index, RAFT building, eval, demo."""

from __future__ import annotations

import json
import os
import sys
import tempfile
from pathlib import Path

import click

from . import lesson, retrieval
from .backends import (
    HttpEmbeddingBackend,
    HttpGenerationBackend,
    HttpSpeechBackend,
    MockEmbeddingBackend,
    MockGenerationBackend,
    MockSpeechBackend,
)
from .config import ServiceConfig, load_config
from .demo import demo_json
from .engine import Backends, TeachingEngine
from .metrics import RagPipeline, evaluate_pipeline, render_table
from .report import write_report_bundle
from .store import DocumentStore


def _embedding_backend(config: ServiceConfig):
    if config.emb_url:
        return HttpEmbeddingBackend(config.emb_url, api_key=config.api_key)
    return MockEmbeddingBackend()


def _generation_backend(config: ServiceConfig, url: str):
    if url:
        return HttpGenerationBackend(url, api_key=config.api_key)
    return MockGenerationBackend(seed=config.seed)


def _backends(config: ServiceConfig) -> Backends:
    tts = HttpSpeechBackend(config.tts_url, api_key=config.api_key) if config.tts_url \
        else MockSpeechBackend()
    return Backends(
        gen=_generation_backend(config, config.gen_url),
        summarizer=_generation_backend(config, config.sum_url),
        emb=_embedding_backend(config),
        tts=tts,
    )


@click.group()
def main():
    """Self-directed teaching engine."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(config_path):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    engine = TeachingEngine(DocumentStore(config.store_root), _backends(config), config)
    host, _, port = config.listen.partition(":")
    uvicorn.run(create_app(engine), host=host or "127.0.0.1", port=int(port or 8080))


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--chunk-size", default=200, show_default=True)
@click.option("--overlap", default=20, show_default=True)
@click.option("--semantic", is_flag=True, help="Snap chunk ends to sentence boundaries.")
def ingest(corpus, out_path, chunk_size, overlap, semantic):
    """Clean a corpus directory and write chunks as JSON lines."""
    raw = retrieval.load_corpus_dir(corpus)
    docs = retrieval.clean_documents(raw)
    chunks = []
    for i, doc in enumerate(docs):
        chunks.extend(retrieval.chunk_document(
            doc, chunk_size, overlap, source_doc=f"doc{i}", semantic=semantic))
    with open(out_path, "w", encoding="utf-8") as fh:
        for c in chunks:
            fh.write(json.dumps({
                "chunk_id": c.chunk_id, "source_doc": c.source_doc,
                "text": c.text, "span": list(c.span),
            }) + "\n")
    click.echo(f"{len(docs)} documents -> {len(chunks)} chunks -> {out_path}")


def _read_chunks(path: str) -> list[retrieval.DocumentChunk]:
    chunks = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rec = json.loads(line)
            chunks.append(retrieval.DocumentChunk(
                chunk_id=rec["chunk_id"], source_doc=rec["source_doc"],
                text=rec["text"], span=tuple(rec["span"]),
            ))
    return chunks


@main.command()
@click.option("--chunks", "chunks_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def index(chunks_path, out_dir, ):
    """Embed chunks and write a flat cosine index."""
    config = load_config()
    chunks = _read_chunks(chunks_path)
    idx = retrieval.build_index(chunks, _embedding_backend(config))
    retrieval.save_index(idx, out_dir)
    # keep the chunk texts next to the vectors for RAFT/eval
    Path(out_dir, "chunks.jsonl").write_text(
        Path(chunks_path).read_text(encoding="utf-8"), encoding="utf-8")
    click.echo(f"indexed {len(idx)} chunks (dim {idx.dim}) -> {out_dir}")


def _load_index_dir(out_dir: str):
    idx = retrieval.load_index(out_dir)
    lookup = {c.chunk_id: c.text for c in _read_chunks(str(Path(out_dir, "chunks.jsonl")))}
    return idx, lookup


@main.command("raft-build")
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True),
              help='JSON lines {"question", "oracle_chunk_id", "answer"}.')
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True))
@click.option("--k", default=4, show_default=True)
@click.option("--p-oracle", default=0.8, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def raft_build(qa_path, index_dir, k, p_oracle, seed, out_path):
    """Build a RAFT dataset of oracle + distractor documents."""
    idx, lookup = _load_index_dir(index_dir)
    qa_pairs = []
    for line in Path(qa_path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rec = json.loads(line)
            qa_pairs.append((rec["question"], rec["oracle_chunk_id"], rec["answer"]))
    examples = retrieval.build_raft_dataset(qa_pairs, idx, lookup, k, p_oracle, seed)
    with open(out_path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json()) + "\n")
    n_oracle = sum(1 for ex in examples if ex.oracle_present)
    click.echo(f"{len(examples)} examples ({n_oracle} with oracle) -> {out_path}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-prefix", default=None)
def split(in_path, ratios, seed, out_prefix):
    """Split a JSON-lines dataset into train/test/validation files."""
    parts = tuple(float(r) for r in ratios.split(","))
    if len(parts) != 3:
        raise click.BadParameter("expected three comma-separated ratios")
    rows = [json.loads(l) for l in Path(in_path).read_text(encoding="utf-8").splitlines()
            if l.strip()]
    result = retrieval.split_dataset(rows, parts, seed)
    prefix = out_prefix or str(Path(in_path).with_suffix(""))
    for name, subset in (("train", result.train), ("test", result.test),
                         ("validation", result.validation)):
        path = f"{prefix}.{name}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for row in subset:
                fh.write(json.dumps(row) + "\n")
        click.echo(f"{name}: {len(subset)} -> {path}")


@main.command("eval")
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True),
              help='JSON lines {"question", "answer"} (reference answers).')
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--k", default=4, show_default=True)
@click.option("--text", is_flag=True, help="Print the summary table.")
def eval_cmd(qa_path, index_dir, report_path, k, text):
    """Evaluate the RAG pipeline; writes JSON, CSV, and a PNG figure."""
    config = load_config()
    idx, lookup = _load_index_dir(index_dir)
    emb = _embedding_backend(config)
    gen = _generation_backend(config, config.gen_url)
    pipeline = RagPipeline(idx, lookup, emb, gen, k=k)
    qa = []
    for line in Path(qa_path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rec = json.loads(line)
            qa.append((rec["question"], rec["answer"]))
    report = evaluate_pipeline(qa, pipeline, emb,
                               relevance_threshold=config.relevance_threshold)
    paths = write_report_bundle(report, report_path)
    if text:
        click.echo(render_table(report))
    click.echo(f"report -> {paths['json']}, {paths['csv']}, {paths['png']}")


@main.command("export-deck")
@click.option("--user", required=True)
@click.option("--node", required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "markdown"]), default="markdown")
@click.option("--store", "store_root", default="store", show_default=True)
def export_deck(user, node, fmt, store_root):
    """Print a frozen deck in the chosen format."""
    store = DocumentStore(store_root)
    deck = lesson.fetch_deck(user, node, store)
    if deck is None:
        raise click.ClickException(f"no deck for {user}/{node}")
    sys.stdout.buffer.write(lesson.export_deck(deck, fmt))


@main.command()
@click.option("--seed", default=7, show_default=True)
@click.option("--store", "store_root", default=None,
              help="Store directory (default: a fresh temp dir).")
def demo(seed, store_root):
    """Deterministic end-to-end run with mock backends."""
    if store_root is None:
        store_root = tempfile.mkdtemp(prefix="autodidact-demo-")
    click.echo(demo_json(seed, store_root))


if __name__ == "__main__":
    main()
