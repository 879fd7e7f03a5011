import pytest

from autodidact.backends import MockEmbeddingBackend, MockGenerationBackend, MockSpeechBackend
from autodidact.config import ServiceConfig
from autodidact.curriculum import CourseRoadmap, TopicNode
from autodidact.engine import Backends, TeachingEngine
from autodidact.store import DocumentStore

FIXED_NOW = "2026-01-01T00:00:00+00:00"


def make_roadmap(edges: dict[str, list[str]], course_id: str = "c1") -> CourseRoadmap:
    """Build a roadmap from {node_id: [prerequisite ids]}."""
    doc = {
        "course_id": course_id,
        "title": course_id,
        "nodes": [
            {"id": nid, "title": nid.upper(), "summary": f"about {nid}",
             "prerequisites": preds}
            for nid, preds in edges.items()
        ],
    }
    return CourseRoadmap.from_json(doc, created_at=FIXED_NOW)


@pytest.fixture
def mock_gen():
    return MockGenerationBackend(seed=7)


@pytest.fixture
def mock_emb():
    return MockEmbeddingBackend()


@pytest.fixture
def mock_tts():
    return MockSpeechBackend()


@pytest.fixture
def store(tmp_path):
    return DocumentStore(tmp_path / "store")


@pytest.fixture
def engine(tmp_path):
    return TeachingEngine(
        store=DocumentStore(tmp_path / "store"),
        backends=Backends.mocks(seed=7),
        config=ServiceConfig(seed=7),
        clock=lambda: FIXED_NOW,
    )
