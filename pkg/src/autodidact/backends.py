"""Model-backend contracts, HTTP clients, and deterministic in-process mocks.

Three services plug in behind uniform protocols: text generation (also
used in the summarizer role), sentence embedding, and speech synthesis.
The mocks are pure functions of their inputs plus a seed, so the whole
engine is reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx
import numpy as np

from . import prompts
from .errors import (
    BackendRejected,
    BackendTimeout,
    BackendUnavailable,
    DimensionMismatch,
)
from .tokenization import tokenize


@dataclass
class Message:
    role: str  # "system" | "user"
    content: str


@dataclass
class GenerationRequest:
    messages: list[Message]
    temperature: float = 0.0
    seed: int = 0
    max_tokens: int = 1024


@dataclass
class GenerationResponse:
    text: str
    finish: str = "stop"


@dataclass
class EmbeddingRequest:
    texts: list[str]


@dataclass
class EmbeddingResponse:
    vectors: list[list[float]]
    dim: int


@dataclass
class SpeechRequest:
    text: str
    voice: str = "default"


@dataclass
class SpeechResponse:
    audio: bytes
    duration_ms: int


class GenerationBackend(Protocol):
    def generate(self, req: GenerationRequest) -> GenerationResponse: ...


class EmbeddingBackend(Protocol):
    @property
    def dim(self) -> int: ...

    def embed(self, req: EmbeddingRequest) -> EmbeddingResponse: ...


class SpeechBackend(Protocol):
    def synthesize(self, req: SpeechRequest) -> SpeechResponse: ...


# ---------------------------------------------------------------------------
# Deterministic mocks
# ---------------------------------------------------------------------------

_WORDS = (
    "concept method example structure analysis practice model step rule case "
    "definition property proof pattern input output result detail review idea"
).split()


def _rng_for(messages: list[Message], seed: int) -> random.Random:
    digest = hashlib.sha256()
    digest.update(str(seed).encode())
    for m in messages:
        digest.update(b"\x00" + m.role.encode() + b"\x01" + m.content.encode())
    return random.Random(digest.digest())


def _sentence(rng: random.Random, n_words: int) -> str:
    words = [rng.choice(_WORDS) for _ in range(n_words)]
    return (" ".join(words)).capitalize() + "."


def truncate_at_sentence(text: str, max_chars: int) -> str:
    """Cut text to max_chars, preferring the last sentence boundary."""
    if len(text) <= max_chars:
        return text
    cut = text[:max_chars]
    for mark in (". ", "! ", "? "):
        pos = cut.rfind(mark)
        if pos > 0:
            return cut[: pos + 1].rstrip()
    return cut.rstrip()


class MockGenerationBackend:
    """Template-driven generator: a pure function of (messages, seed).

    Dispatches on the prompt's task header and emits schema-valid JSON
    for roadmap/slide/quiz/notes/exam prompts; summarization is plain
    deterministic truncation.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.calls: list[GenerationRequest] = []

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        self.calls.append(req)
        prompt = "\n".join(m.content for m in req.messages)
        task, params, body = prompts.parse_task(prompt)
        rng = _rng_for(req.messages, self.seed + req.seed)
        handler = getattr(self, f"_task_{task}", None)
        if handler is not None:
            return GenerationResponse(text=handler(params, body, rng))
        # Untagged prompt (e.g. an assembled RAG prompt): deterministic prose.
        return GenerationResponse(text=_sentence(rng, 12))

    def _task_roadmap(self, params: dict, body: str, rng: random.Random) -> str:
        title = params["title"]
        low = max(3, params.get("min_nodes", 3))
        high = min(8, params.get("max_nodes", 40))
        count = rng.randint(low, max(low, high))
        slug = "".join(c if c.isalnum() else "-" for c in title.lower()).strip("-") or "course"
        nodes = []
        for i in range(count):
            node = {
                "id": f"{slug}-{i + 1}",
                "title": f"{title}: part {i + 1}",
                "summary": _sentence(rng, 6),
                "prerequisites": [] if i == 0 else [f"{slug}-{rng.randint(1, i)}"],
            }
            nodes.append(node)
        doc = {"course_id": slug, "title": title, "nodes": nodes}
        return json.dumps(doc)

    def _task_slides(self, params: dict, body: str, rng: random.Random) -> str:
        slides = []
        for ordinal in params["ordinals"]:
            slides.append(
                {
                    "ordinal": ordinal,
                    "title": f"{params['node_title']} ({ordinal}/{params['total_slides']})",
                    "bullets": [_sentence(rng, 4) for _ in range(3)],
                    "body": " ".join(_sentence(rng, 8) for _ in range(3)),
                }
            )
        return json.dumps({"slides": slides})

    def _task_summarize(self, params: dict, body: str, rng: random.Random) -> str:
        # Deterministic truncation: everything after the instruction line.
        text = body.split("\n", 1)[1] if "\n" in body else body
        return truncate_at_sentence(" ".join(text.split()), params["max_chars"])

    def _task_doubt(self, params: dict, body: str, rng: random.Random) -> str:
        question = body.rsplit("Question:", 1)[-1].strip()
        answer = f"Regarding '{question}': " + _sentence(rng, 10)
        return truncate_at_sentence(answer, params["max_chars"])

    def _task_quiz(self, params: dict, body: str, rng: random.Random) -> str:
        items = []
        for i in range(params["n_items"]):
            correct = rng.randint(0, 3)
            options = [_sentence(rng, 3) for _ in range(4)]
            items.append(
                {
                    "stem": f"Q{i + 1}. " + _sentence(rng, 7),
                    "options": options,
                    "correct_index": correct,
                }
            )
        return json.dumps({"items": items})

    def _task_notes(self, params: dict, body: str, rng: random.Random) -> str:
        qa = [
            {"q": _sentence(rng, 6) + "?", "a": _sentence(rng, 9)}
            for _ in range(rng.randint(2, 4))
        ]
        return json.dumps({"qa": qa})

    def _task_exam_question(self, params: dict, body: str, rng: random.Random) -> str:
        doc = {
            "prompt": f"Explain, for '{params['node_title']}': " + _sentence(rng, 8),
            "reference_answer": " ".join(_sentence(rng, 9) for _ in range(2)),
        }
        return json.dumps(doc)

    def _task_feedback(self, params: dict, body: str, rng: random.Random) -> str:
        return f"Similarity {params['similarity']:.2f}. " + _sentence(rng, 8)


MOCK_EMBED_DIM = 256
_HASH_PERSON = b"autodidact-emb"  # fixed keying for the bucket hash


def _token_bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=_HASH_PERSON)
    return int.from_bytes(digest.digest(), "big") % dim


class MockEmbeddingBackend:
    """Bag-of-tokens hashing embedder: L2-normalized counts over hashed buckets."""

    def __init__(self, dim: int = MOCK_EMBED_DIM):
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self._dim)
        tokens = tokenize(text)
        if not tokens:
            vec[0] = 1.0
            return vec
        for token in tokens:
            vec[_token_bucket(token, self._dim)] += 1.0
        return vec / np.linalg.norm(vec)

    def embed(self, req: EmbeddingRequest) -> EmbeddingResponse:
        vectors = [self.embed_one(t).tolist() for t in req.texts]
        return EmbeddingResponse(vectors=vectors, dim=self._dim)


class MockSpeechBackend:
    """Deterministic placeholder audio; duration is 60 ms per character."""

    def synthesize(self, req: SpeechRequest) -> SpeechResponse:
        if not req.text:
            raise BackendRejected("empty speech request")
        audio = b"MOCKAUDIO\x00" + hashlib.sha256(req.text.encode("utf-8")).digest()
        return SpeechResponse(audio=audio, duration_ms=60 * len(req.text))


# ---------------------------------------------------------------------------
# HTTP clients
# ---------------------------------------------------------------------------

@dataclass
class RetryPolicy:
    attempts: int = 3
    backoff_ms: int = 200
    timeout_s: float = 30.0

    def delays(self):
        for k in range(self.attempts):
            yield (self.backoff_ms / 1000.0) * (2 ** k)


def _with_retries(policy: RetryPolicy, call):
    last_timeout = False
    for delay in policy.delays():
        try:
            return call()
        except httpx.TimeoutException:
            last_timeout = True
        except httpx.HTTPStatusError as exc:
            if 400 <= exc.response.status_code < 500:
                raise BackendRejected(f"backend returned {exc.response.status_code}")
            last_timeout = False
        except httpx.TransportError:
            last_timeout = False
        time.sleep(delay)
    if last_timeout:
        raise BackendTimeout("backend timed out after retries")
    raise BackendUnavailable("backend unavailable after retries")


class _HttpBackend:
    def __init__(self, base_url: str, api_key: str = "", policy: RetryPolicy | None = None):
        self.base_url = base_url.rstrip("/")
        self.policy = policy or RetryPolicy()
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(headers=headers, timeout=self.policy.timeout_s)

    def _post(self, path: str, payload: dict) -> httpx.Response:
        def call():
            resp = self._client.post(self.base_url + path, json=payload)
            resp.raise_for_status()
            return resp

        return _with_retries(self.policy, call)


class HttpGenerationBackend(_HttpBackend):
    """POST {base}/generate with a chat-completions-style payload."""

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        payload = {
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
            "seed": req.seed,
            "max_tokens": req.max_tokens,
        }
        data = self._post("/generate", payload).json()
        if not data.get("text"):
            raise BackendRejected("backend returned empty text")
        return GenerationResponse(text=data["text"], finish=data.get("finish", "stop"))


class HttpEmbeddingBackend(_HttpBackend):
    """POST {base}/embed; dimension declared by GET {base}/meta at handshake."""

    def __init__(self, base_url: str, api_key: str = "", policy: RetryPolicy | None = None):
        super().__init__(base_url, api_key, policy)
        meta = _with_retries(self.policy, lambda: self._get_meta())
        self._dim = int(meta["dim"])

    def _get_meta(self) -> dict:
        resp = self._client.get(self.base_url + "/meta")
        resp.raise_for_status()
        return resp.json()

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, req: EmbeddingRequest) -> EmbeddingResponse:
        data = self._post("/embed", {"texts": req.texts}).json()
        vectors = data["vectors"]
        if len(vectors) != len(req.texts):
            raise DimensionMismatch("vector count does not match input count")
        if any(len(v) != self._dim for v in vectors):
            raise DimensionMismatch(f"backend vectors are not dim {self._dim}")
        return EmbeddingResponse(vectors=vectors, dim=self._dim)


class HttpSpeechBackend(_HttpBackend):
    """POST {base}/speak; duration arrives in the X-Duration-Ms header."""

    def synthesize(self, req: SpeechRequest) -> SpeechResponse:
        if not req.text:
            raise BackendRejected("empty speech request")
        resp = self._post("/speak", {"text": req.text, "voice": req.voice})
        duration = int(resp.headers.get("X-Duration-Ms", "0"))
        if duration <= 0:
            duration = 60 * len(req.text)
        return SpeechResponse(audio=resp.content, duration_ms=duration)
