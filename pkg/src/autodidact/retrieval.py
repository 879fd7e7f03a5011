"""Corpus ingestion, flat cosine index, RAG prompt assembly, RAFT datasets."""

from __future__ import annotations

import json
import random
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backends import EmbeddingBackend, EmbeddingRequest
from .errors import BadRatios, BadWindow, DimensionMismatch, NotEnoughDistractors
from .tokenization import tokenize

_CONTROL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f]")


@dataclass(frozen=True)
class DocumentChunk:
    chunk_id: str
    source_doc: str
    text: str
    span: tuple[int, int]  # (start token index, end token index)


@dataclass(frozen=True)
class RetrievalHit:
    chunk_id: str
    score: float


@dataclass
class EmbeddingIndex:
    dim: int
    entries: list[tuple[str, np.ndarray]]

    def __len__(self) -> int:
        return len(self.entries)

    def chunk_ids(self) -> list[str]:
        return [cid for cid, _ in self.entries]


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def clean_documents(raw_docs: list[str]) -> list[str]:
    """Drop empties, strip control chars, NFC-normalize, dedupe exact repeats."""
    seen: set[str] = set()
    out: list[str] = []
    for doc in raw_docs:
        text = unicodedata.normalize("NFC", doc)
        text = _CONTROL_RE.sub(" ", text)
        text = " ".join(text.split())
        if not text:
            continue
        if text in seen:
            continue
        seen.add(text)
        out.append(text)
    return out


def merge_corpora(corpora: list[list[str]]) -> list[str]:
    """Concatenate in corpus order with cross-corpus exact-duplicate removal."""
    seen: set[str] = set()
    out: list[str] = []
    for corpus in corpora:
        for doc in corpus:
            if doc not in seen:
                seen.add(doc)
                out.append(doc)
    return out


def chunk_document(
    doc: str,
    chunk_size: int,
    overlap: int,
    source_doc: str = "doc",
    semantic: bool = False,
) -> list[DocumentChunk]:
    """Fixed token windows with overlap; optional snap to sentence boundaries."""
    if not 0 <= overlap < chunk_size:
        raise BadWindow(f"overlap {overlap} must be < chunk_size {chunk_size}")
    tokens = tokenize(doc)
    if not tokens:
        return []
    boundaries: set[int] = set()
    if semantic:
        boundaries = {i + 1 for i, t in enumerate(tokens) if t in {".", "!", "?"}}
    chunks: list[DocumentChunk] = []
    step = chunk_size - overlap
    start = 0
    i = 0
    while start < len(tokens):
        end = min(start + chunk_size, len(tokens))
        if semantic and end < len(tokens):
            # snap the window end back to the nearest earlier sentence break
            snaps = [b for b in boundaries if start + 1 < b <= end]
            if snaps:
                end = max(snaps)
        chunks.append(
            DocumentChunk(
                chunk_id=f"{source_doc}:{i}",
                source_doc=source_doc,
                text=" ".join(tokens[start:end]),
                span=(start, end),
            )
        )
        if end >= len(tokens):
            break
        start = end - overlap
        i += 1
    return chunks


def load_corpus_dir(path: str | Path) -> list[str]:
    """Read UTF-8 .txt files and JSON-lines {"id", "text"} records."""
    docs: list[str] = []
    for p in sorted(Path(path).iterdir()):
        if p.suffix == ".txt":
            docs.append(p.read_text(encoding="utf-8"))
        elif p.suffix == ".jsonl":
            for line in p.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    docs.append(json.loads(line)["text"])
    return docs


# ---------------------------------------------------------------------------
# Index
# ---------------------------------------------------------------------------

def build_index(chunks: list[DocumentChunk], emb: EmbeddingBackend) -> EmbeddingIndex:
    if not chunks:
        return EmbeddingIndex(dim=emb.dim, entries=[])
    resp = emb.embed(EmbeddingRequest(texts=[c.text for c in chunks]))
    entries: list[tuple[str, np.ndarray]] = []
    for chunk, vec in zip(chunks, resp.vectors):
        v = np.asarray(vec, dtype=float)
        if v.shape != (emb.dim,):
            raise DimensionMismatch(f"got {v.shape}, want ({emb.dim},)")
        norm = np.linalg.norm(v)
        if norm > 0:
            v = v / norm
        entries.append((chunk.chunk_id, v))
    return EmbeddingIndex(dim=emb.dim, entries=entries)


def query_top_k(index: EmbeddingIndex, question: str, k: int, emb: EmbeddingBackend) -> list[RetrievalHit]:
    """Exact flat scan: the k highest cosine scores, ties by chunk_id ascending."""
    if not index.entries:
        return []
    q = np.asarray(emb.embed(EmbeddingRequest(texts=[question])).vectors[0], dtype=float)
    norm = np.linalg.norm(q)
    if norm > 0:
        q = q / norm
    scored = [(cid, float(np.dot(q, v))) for cid, v in index.entries]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return [RetrievalHit(chunk_id=cid, score=s) for cid, s in scored[:k]]


def save_index(index: EmbeddingIndex, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "header.json").write_text(
        json.dumps({"dim": index.dim, "count": len(index.entries)}), encoding="utf-8"
    )
    with open(path / "entries.jsonl", "w", encoding="utf-8") as fh:
        for cid, vec in index.entries:
            fh.write(json.dumps({"chunk_id": cid, "vector": vec.tolist()}) + "\n")


def load_index(path: str | Path) -> EmbeddingIndex:
    path = Path(path)
    header = json.loads((path / "header.json").read_text(encoding="utf-8"))
    entries = []
    for line in (path / "entries.jsonl").read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        entries.append((rec["chunk_id"], np.asarray(rec["vector"], dtype=float)))
    return EmbeddingIndex(dim=header["dim"], entries=entries)


# ---------------------------------------------------------------------------
# RAG prompt assembly
# ---------------------------------------------------------------------------

RAG_TEMPLATE_HEADER = "Use the sources below to answer the question."


def assemble_rag_prompt(question: str, hits: list[RetrievalHit], chunk_lookup: dict[str, str]) -> str:
    lines = [RAG_TEMPLATE_HEADER, ""]
    for i, hit in enumerate(hits, start=1):
        lines.append(f"[{i}] {chunk_lookup[hit.chunk_id]}")
    if hits:
        lines.append("")
    lines.append(f"Question: {question}")
    lines.append("Answer:")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# RAFT dataset construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RaftExample:
    question: str
    docs: tuple[str, ...]
    oracle_present: bool
    oracle_position: int | None
    distractor_ids: tuple[str, ...]
    answer: str

    def to_json(self) -> dict:
        return {
            "question": self.question,
            "docs": list(self.docs),
            "oracle_present": self.oracle_present,
            "oracle_position": self.oracle_position,
            "answer": self.answer,
        }


def _cot_answer(reference_answer: str, oracle_position: int | None, oracle_text: str) -> str:
    if oracle_position is not None:
        snippet = " ".join(oracle_text.split()[:12])
        reasoning = f"according to source [{oracle_position + 1}], {snippet}"
    else:
        reasoning = "none of the provided sources contain the needed information"
    return f"Reasoning: {reasoning}. Answer: {reference_answer}"


def build_raft_dataset(
    qa_pairs: list[tuple[str, str, str]],  # (question, oracle chunk id, reference answer)
    index: EmbeddingIndex,
    chunk_lookup: dict[str, str],
    k: int,
    p_oracle: float,
    seed: int,
) -> list[RaftExample]:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 <= p_oracle <= 1:
        raise ValueError("p_oracle must be in [0, 1]")
    all_ids = index.chunk_ids()
    rng = random.Random(seed)
    examples: list[RaftExample] = []
    for question, oracle_id, reference in qa_pairs:
        if oracle_id not in chunk_lookup:
            raise ValueError(f"oracle id {oracle_id!r} not in index")
        pool = [cid for cid in all_ids if cid != oracle_id]
        if len(pool) < k:
            raise NotEnoughDistractors(f"need {k} distractors, corpus offers {len(pool)}")
        include_oracle = rng.random() < p_oracle
        if include_oracle:
            distractors = rng.sample(pool, k - 1)
            position = rng.randrange(k)
            doc_ids = distractors[:position] + [oracle_id] + distractors[position:]
            oracle_position: int | None = position
        else:
            distractors = rng.sample(pool, k)
            doc_ids = list(distractors)
            oracle_position = None
        examples.append(
            RaftExample(
                question=question,
                docs=tuple(chunk_lookup[cid] for cid in doc_ids),
                oracle_present=include_oracle,
                oracle_position=oracle_position,
                distractor_ids=tuple(distractors),
                answer=_cot_answer(reference, oracle_position, chunk_lookup[oracle_id]),
            )
        )
    return examples


# ---------------------------------------------------------------------------
# Dataset splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSplit:
    train: list
    test: list
    validation: list
    ratios: tuple[float, float, float]


def split_dataset(examples: list, ratios: tuple[float, float, float], seed: int) -> DatasetSplit:
    """Seeded shuffle, then partition by ratios with largest-remainder rounding."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios sum to {sum(ratios)}, expected 1")
    if any(r < 0 for r in ratios):
        raise BadRatios("ratios must be non-negative")
    items = list(examples)
    random.Random(seed).shuffle(items)
    n = len(items)
    exact = [r * n for r in ratios]
    sizes = [int(e) for e in exact]
    remainders = sorted(range(3), key=lambda i: (exact[i] - sizes[i], -i), reverse=True)
    for i in remainders[: n - sum(sizes)]:
        sizes[i] += 1
    train = items[: sizes[0]]
    test = items[sizes[0]: sizes[0] + sizes[1]]
    validation = items[sizes[0] + sizes[1]:]
    return DatasetSplit(train=train, test=test, validation=validation, ratios=tuple(ratios))
