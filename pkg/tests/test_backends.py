import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from autodidact import prompts
from autodidact.backends import (
    EmbeddingRequest,
    GenerationRequest,
    HttpEmbeddingBackend,
    HttpGenerationBackend,
    HttpSpeechBackend,
    Message,
    MockEmbeddingBackend,
    MockGenerationBackend,
    MockSpeechBackend,
    RetryPolicy,
    SpeechRequest,
)
from autodidact.errors import BackendRejected, BackendUnavailable, DimensionMismatch


class TestMockGeneration:
    def test_deterministic(self):
        gen = MockGenerationBackend(seed=5)
        req = GenerationRequest(messages=[Message("user", "hello")])
        a = gen.generate(req).text
        b = MockGenerationBackend(seed=5).generate(req).text
        assert a == b

    def test_seed_changes_output(self):
        req = GenerationRequest(messages=[Message("user", "hello")])
        a = MockGenerationBackend(seed=5).generate(req).text
        b = MockGenerationBackend(seed=6).generate(req).text
        assert a != b

    def test_roadmap_prompt_yields_schema(self):
        gen = MockGenerationBackend(seed=5)
        prompt = prompts.roadmap_prompt("Algebra", None, 3, 40)
        doc = json.loads(gen.generate(
            GenerationRequest(messages=[Message("user", prompt)])).text)
        assert set(doc) == {"course_id", "title", "nodes"}
        for node in doc["nodes"]:
            assert set(node) == {"id", "title", "summary", "prerequisites"}


class TestMockEmbedding:
    def test_identical_texts_identical_unit_vectors(self):
        emb = MockEmbeddingBackend()
        resp = emb.embed(EmbeddingRequest(texts=["x", "x"]))
        assert resp.vectors[0] == resp.vectors[1]
        assert np.linalg.norm(resp.vectors[0]) == pytest.approx(1.0, abs=1e-9)

    def test_self_cosine_one(self):
        emb = MockEmbeddingBackend()
        v = emb.embed_one("some sentence here")
        assert float(np.dot(v, v)) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_texts_near_zero(self):
        emb = MockEmbeddingBackend()
        a = emb.embed_one("alpha beta gamma")
        b = emb.embed_one("delta epsilon zeta")
        assert abs(float(np.dot(a, b))) < 1e-9  # no bucket collisions in fixture

    def test_declared_dimension(self):
        emb = MockEmbeddingBackend(dim=64)
        assert emb.dim == 64
        assert len(emb.embed_one("text")) == 64


class TestMockSpeech:
    def test_duration_rule(self):
        resp = MockSpeechBackend().synthesize(SpeechRequest(text="abcde"))
        assert resp.duration_ms == 300
        assert resp.audio.startswith(b"MOCKAUDIO")

    def test_empty_rejected(self):
        with pytest.raises(BackendRejected):
            MockSpeechBackend().synthesize(SpeechRequest(text=""))

    def test_deterministic_audio(self):
        a = MockSpeechBackend().synthesize(SpeechRequest(text="hi")).audio
        b = MockSpeechBackend().synthesize(SpeechRequest(text="hi")).audio
        assert a == b


# ---------------------------------------------------------------------------
# Wire-contract tests against a local stub server
# ---------------------------------------------------------------------------

class StubHandler(BaseHTTPRequestHandler):
    fail_next = 0

    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/meta":
            self._json({"dim": 4})
        else:
            self.send_error(404)

    def do_POST(self):
        if StubHandler.fail_next > 0:
            StubHandler.fail_next -= 1
            self.send_error(503)
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        if self.path == "/generate":
            assert {"messages", "temperature", "seed", "max_tokens"} <= set(payload)
            self._json({"text": "echo: " + payload["messages"][-1]["content"],
                        "finish": "stop"})
        elif self.path == "/embed":
            self._json({"vectors": [[1.0, 0.0, 0.0, 0.0] for _ in payload["texts"]],
                        "dim": 4})
        elif self.path == "/speak":
            body = b"audio-bytes"
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("X-Duration-Ms", str(60 * len(payload["text"])))
            self.end_headers()
            self.wfile.write(body)
        else:
            self.send_error(404)

    def _json(self, doc):
        body = json.dumps(doc).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture(scope="module")
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


FAST_RETRY = RetryPolicy(attempts=3, backoff_ms=1, timeout_s=5)


class TestHttpContracts:
    def test_generate_roundtrip(self, stub_server):
        gen = HttpGenerationBackend(stub_server, policy=FAST_RETRY)
        resp = gen.generate(GenerationRequest(messages=[Message("user", "ping")]))
        assert resp.text == "echo: ping"
        assert resp.finish == "stop"

    def test_embed_handshake_and_roundtrip(self, stub_server):
        emb = HttpEmbeddingBackend(stub_server, policy=FAST_RETRY)
        assert emb.dim == 4
        resp = emb.embed(EmbeddingRequest(texts=["a", "b"]))
        assert len(resp.vectors) == 2
        assert all(len(v) == 4 for v in resp.vectors)

    def test_speak_duration_header(self, stub_server):
        tts = HttpSpeechBackend(stub_server, policy=FAST_RETRY)
        resp = tts.synthesize(SpeechRequest(text="hello"))
        assert resp.audio == b"audio-bytes"
        assert resp.duration_ms == 300

    def test_retry_then_success(self, stub_server):
        StubHandler.fail_next = 2
        gen = HttpGenerationBackend(stub_server, policy=FAST_RETRY)
        resp = gen.generate(GenerationRequest(messages=[Message("user", "x")]))
        assert resp.text == "echo: x"

    def test_unavailable_after_retries(self, stub_server):
        StubHandler.fail_next = 99
        gen = HttpGenerationBackend(stub_server, policy=FAST_RETRY)
        with pytest.raises(BackendUnavailable):
            gen.generate(GenerationRequest(messages=[Message("user", "x")]))
        StubHandler.fail_next = 0

    def test_connection_refused(self):
        gen = HttpGenerationBackend("http://127.0.0.1:1", policy=FAST_RETRY)
        with pytest.raises(BackendUnavailable):
            gen.generate(GenerationRequest(messages=[Message("user", "x")]))
