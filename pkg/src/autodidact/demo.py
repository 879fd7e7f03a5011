"""Seeded end-to-end run with mock backends: course to metric report."""

from __future__ import annotations

import json
from pathlib import Path

from . import curriculum, lesson
from .backends import MockEmbeddingBackend, MockGenerationBackend
from .config import ServiceConfig
from .engine import Backends, TeachingEngine
from .metrics import RagPipeline, evaluate_pipeline
from .store import DocumentStore

DEMO_CLOCK = "2026-01-01T00:00:00+00:00"


def _topo_order(roadmap) -> list[str]:
    done: list[str] = []
    done_set: set[str] = set()
    pending = {n.id: set(n.prerequisites) for n in roadmap.nodes}
    while pending:
        ready = sorted(nid for nid, preds in pending.items() if preds <= done_set)
        for nid in ready:
            done.append(nid)
            done_set.add(nid)
            del pending[nid]
    return done


def run_demo(seed: int, store_root: str | Path, user_id: str = "demo-user") -> dict:
    """Course -> roadmap -> lesson -> narration -> doubt -> quiz -> exam -> metrics.

    Pure function of the seed: mock backends and a fixed clock make the
    returned document bit-identical across runs.
    """
    config = ServiceConfig(seed=seed)
    engine = TeachingEngine(
        store=DocumentStore(store_root),
        backends=Backends.mocks(seed=seed),
        config=config,
        clock=lambda: DEMO_CLOCK,
    )

    roadmap = engine.create_course("Binary Search")
    order = _topo_order(roadmap)
    out: dict = {"seed": seed, "course": roadmap.to_json(), "nodes": []}

    first = True
    for node_id in order:
        deck = engine.start_node(user_id, node_id)
        segments = engine.get_narration(user_id, node_id)
        node_record = {
            "node_id": node_id,
            "content_hash": deck.content_hash,
            "n_segments": len(segments),
        }
        if first:
            plan = lesson.narration_plan(segments)
            session = engine.open_session(user_id, node_id)
            session = engine.interrupt(user_id, node_id, "wake_word")
            _, exchange = engine.answer_doubt(
                user_id, node_id, "How does the search narrow the range?", "chat")
            session = engine.resume(user_id, node_id)
            node_record["plan_steps"] = [(s.kind, s.ordinal) for s in plan]
            node_record["doubt"] = exchange.to_json()
            first = False
        paper = engine.create_quiz(user_id, node_id, n_items=5)
        answers = [item.correct_index for item in paper.items]
        score, passed, progress = engine.submit_quiz(user_id, paper.quiz_id, answers)
        node_record["quiz_score"] = score
        node_record["quiz_passed"] = passed
        out["nodes"].append(node_record)

    out["progress"] = engine.get_progress(user_id, roadmap.course_id).to_json()
    out["notes_sections"] = len(engine.course_notes(user_id, roadmap.course_id)["sections"])

    exam_id, questions = engine.create_exam(user_id, roadmap.course_id, n_questions=4)
    submissions = [q.reference_answer for q in questions]
    grade = engine.submit_exam(exam_id, submissions)
    out["exam"] = grade.to_json()

    index, lookup = engine.course_index(roadmap.course_id)
    pipeline = RagPipeline(index, lookup, engine.backends.emb,
                           MockGenerationBackend(seed=seed), k=config.retrieval_k)
    qa = [(q.prompt, q.reference_answer) for q in questions]
    metric_report = evaluate_pipeline(qa, pipeline, engine.backends.emb,
                                      relevance_threshold=config.relevance_threshold)
    out["metrics"] = metric_report.to_json()
    return out


def demo_json(seed: int, store_root: str | Path) -> str:
    return json.dumps(run_demo(seed, store_root), sort_keys=True, indent=2)
