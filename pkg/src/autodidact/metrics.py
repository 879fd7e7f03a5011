"""ROUGE-1/2/L, BLEU-1..4, cosine similarity, relevance rate, and the
evaluation harness that produces the summary-table report."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .backends import EmbeddingBackend, EmbeddingRequest, GenerationBackend, GenerationRequest, Message
from .errors import AutodidactError, DimensionMismatch, EmptyInput, ZeroVector
from .tokenization import tokenize


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PrfScore":
        denom = precision + recall
        f1 = 2 * precision * recall / denom if denom > 0 else 0.0
        return cls(precision=precision, recall=recall, f1=f1)


def ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int) -> PrfScore:
    """Clipped n-gram overlap precision/recall."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = ngrams(tokenize(candidate), n)
    ref = ngrams(tokenize(reference), n)
    overlap = sum((cand & ref).values())
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return PrfScore.from_pr(precision, recall)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            curr.append(prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> PrfScore:
    cand = tokenize(candidate)
    ref = tokenize(reference)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand) if cand else 0.0
    recall = lcs / len(ref) if ref else 0.0
    return PrfScore.from_pr(precision, recall)


def bleu(candidate: str, references: list[str], max_n: int, smooth: bool = False) -> float:
    """Geometric mean of clipped modified precisions times the brevity penalty.

    Unsmoothed by default: any zero n-gram precision yields 0. With
    smooth=True, add-one smoothing is applied to every precision.
    """
    if max_n not in (1, 2, 3, 4):
        raise ValueError("max_n must be in 1..4")
    cand = tokenize(candidate)
    ref_tokens = [tokenize(r) for r in references]
    if not cand or not ref_tokens:
        return 0.0
    c = len(cand)
    # closest reference length; ties go to the shorter reference
    r = min((len(rt) for rt in ref_tokens), key=lambda L: (abs(L - c), L))
    log_sum = 0.0
    n_orders = 0
    for n in range(1, max_n + 1):
        cand_ngrams = ngrams(cand, n)
        total = sum(cand_ngrams.values())
        if total == 0:
            continue  # candidate shorter than n: 0/0 order, skipped
        clipped = Counter()
        for rt in ref_tokens:
            clipped |= cand_ngrams & ngrams(rt, n)
        overlap = sum(clipped.values())
        p = (overlap + 1) / (total + 1) if smooth else overlap / total
        if p == 0.0:
            return 0.0
        log_sum += math.log(p)
        n_orders += 1
    if n_orders == 0:
        return 0.0
    bp = min(1.0, math.exp(1 - r / c))
    return bp * math.exp(log_sum / n_orders)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVector("cosine of a zero vector is undefined")
    return float(np.dot(u, v) / (nu * nv))


def relevance_rate(
    answers: list[str],
    retrieved_docs: list[list[str]],
    emb: EmbeddingBackend,
    threshold: float,
) -> float:
    """Fraction of answers whose best doc cosine reaches the threshold."""
    if not answers:
        raise EmptyInput("no answers to score")
    if len(answers) != len(retrieved_docs):
        raise ValueError("answers and retrieved_docs must align")
    relevant = 0
    for answer, docs in zip(answers, retrieved_docs):
        if not docs:
            continue
        vecs = emb.embed(EmbeddingRequest(texts=[answer] + list(docs))).vectors
        a = vecs[0]
        best = max(cosine(a, d) for d in vecs[1:])
        if best >= threshold:
            relevant += 1
    return relevant / len(answers)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class MetricReport:
    rouge1: PrfScore
    rouge2: PrfScore
    rougeL: PrfScore
    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    avg_bleu: float
    cosine_similarity: float
    relevance_rate: float
    hallucination_rate: float
    n_items: int
    errors: int = 0

    def to_json(self) -> dict:
        return {
            "rouge1": self.rouge1.f1,
            "rouge2": self.rouge2.f1,
            "rougeL": self.rougeL.f1,
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "bleu3": self.bleu3,
            "bleu4": self.bleu4,
            "avg_bleu": self.avg_bleu,
            "cosine_similarity": self.cosine_similarity,
            "relevance_rate": self.relevance_rate,
            "hallucination_rate": self.hallucination_rate,
            "n_items": self.n_items,
            "errors": self.errors,
            "detail": {
                "rouge1": vars(self.rouge1),
                "rouge2": vars(self.rouge2),
                "rougeL": vars(self.rougeL),
            },
        }


TABLE_ROWS = ("ROUGE-1", "ROUGE-2", "ROUGE-L", "Average BLEU", "Cosine Similarity")


def render_table(report: MetricReport) -> str:
    """Plain-text summary table: one row per headline metric."""
    values = {
        "ROUGE-1": report.rouge1.f1,
        "ROUGE-2": report.rouge2.f1,
        "ROUGE-L": report.rougeL.f1,
        "Average BLEU": report.avg_bleu,
        "Cosine Similarity": report.cosine_similarity,
    }
    width = max(len(r) for r in TABLE_ROWS)
    lines = [f"{'Metric':<{width}}  Score", f"{'-' * width}  -----"]
    for row in TABLE_ROWS:
        lines.append(f"{row:<{width}}  {values[row]:.3f}")
    return "\n".join(lines)


def evaluate_pipeline(
    qa_dataset: list[tuple[str, str]],
    pipeline,
    emb: EmbeddingBackend,
    relevance_threshold: float = 0.5,
) -> MetricReport:
    """Run each question through the pipeline and average per-item metrics.

    pipeline must expose answer(question) -> (answer_text, retrieved_doc_texts).
    Items where a backend fails are counted in `errors` and excluded
    from the averages; aggregation is an ordered reduction.
    """
    if not qa_dataset:
        raise EmptyInput("empty evaluation dataset")
    sums = {"r1p": 0.0, "r1r": 0.0, "r2p": 0.0, "r2r": 0.0, "rlp": 0.0, "rlr": 0.0}
    bleu_sums = [0.0, 0.0, 0.0, 0.0]
    cos_sum = 0.0
    relevant = 0
    n_ok = 0
    errors = 0
    for question, reference in qa_dataset:
        try:
            answer, docs = pipeline.answer(question)
            r1 = rouge_n(answer, reference, 1)
            r2 = rouge_n(answer, reference, 2)
            rl = rouge_l(answer, reference)
            bleus = [bleu(answer, [reference], n) for n in (1, 2, 3, 4)]
            vecs = emb.embed(EmbeddingRequest(texts=[answer, reference])).vectors
            cos = cosine(vecs[0], vecs[1])
            if docs:
                doc_vecs = emb.embed(EmbeddingRequest(texts=[answer] + list(docs))).vectors
                best = max(cosine(doc_vecs[0], d) for d in doc_vecs[1:])
                is_relevant = best >= relevance_threshold
            else:
                is_relevant = False
        except AutodidactError:
            errors += 1
            continue
        sums["r1p"] += r1.precision
        sums["r1r"] += r1.recall
        sums["r2p"] += r2.precision
        sums["r2r"] += r2.recall
        sums["rlp"] += rl.precision
        sums["rlr"] += rl.recall
        for i, b in enumerate(bleus):
            bleu_sums[i] += b
        cos_sum += cos
        relevant += int(is_relevant)
        n_ok += 1
    if n_ok == 0:
        raise EmptyInput("every item failed")
    rouge1 = PrfScore.from_pr(sums["r1p"] / n_ok, sums["r1r"] / n_ok)
    rouge2 = PrfScore.from_pr(sums["r2p"] / n_ok, sums["r2r"] / n_ok)
    rougeL = PrfScore.from_pr(sums["rlp"] / n_ok, sums["rlr"] / n_ok)
    bleus_mean = [s / n_ok for s in bleu_sums]
    rate = relevant / n_ok
    return MetricReport(
        rouge1=rouge1,
        rouge2=rouge2,
        rougeL=rougeL,
        bleu1=bleus_mean[0],
        bleu2=bleus_mean[1],
        bleu3=bleus_mean[2],
        bleu4=bleus_mean[3],
        avg_bleu=sum(bleus_mean) / 4,
        cosine_similarity=cos_sum / n_ok,
        relevance_rate=rate,
        hallucination_rate=1 - rate,
        n_items=len(qa_dataset),
        errors=errors,
    )


class RagPipeline:
    """Retrieve, assemble the enhanced prompt, generate an answer."""

    def __init__(self, index, chunk_lookup: dict[str, str], emb: EmbeddingBackend,
                 gen: GenerationBackend, k: int = 4):
        from .retrieval import assemble_rag_prompt, query_top_k  # local import, no cycle

        self._query_top_k = query_top_k
        self._assemble = assemble_rag_prompt
        self.index = index
        self.chunk_lookup = chunk_lookup
        self.emb = emb
        self.gen = gen
        self.k = k

    def answer(self, question: str) -> tuple[str, list[str]]:
        hits = self._query_top_k(self.index, question, self.k, self.emb)
        prompt = self._assemble(question, hits, self.chunk_lookup)
        text = self.gen.generate(GenerationRequest(messages=[Message("user", prompt)])).text
        return text, [self.chunk_lookup[h.chunk_id] for h in hits]
