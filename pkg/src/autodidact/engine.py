"""Orchestration layer binding storage, backends, and the domain modules.

The HTTP service and the CLI both drive this engine, so every state
reachable over the API is reachable through direct calls with identical
persisted bytes.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from dataclasses import dataclass

from . import assessment, curriculum, lesson, retrieval, session as session_mod
from .backends import (
    EmbeddingBackend,
    GenerationBackend,
    MockEmbeddingBackend,
    MockGenerationBackend,
    MockSpeechBackend,
    SpeechBackend,
)
from .config import ServiceConfig
from .curriculum import CourseRoadmap, ProgressRecord
from .errors import DeckMissing, NodeLocked, UnknownNode
from .lesson import LessonDeck, NarrationSegment
from .store import DocumentStore


@dataclass
class Backends:
    gen: GenerationBackend
    summarizer: GenerationBackend
    emb: EmbeddingBackend
    tts: SpeechBackend

    @classmethod
    def mocks(cls, seed: int = 0) -> "Backends":
        return cls(
            gen=MockGenerationBackend(seed=seed),
            summarizer=MockGenerationBackend(seed=seed),
            emb=MockEmbeddingBackend(),
            tts=MockSpeechBackend(),
        )


class TeachingEngine:
    def __init__(self, store: DocumentStore, backends: Backends, config: ServiceConfig,
                 clock=None):
        self.store = store
        self.backends = backends
        self.config = config
        # clock() -> iso8601 string; injectable for reproducible runs
        self.clock = clock or curriculum.utc_now
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()
        self._index_cache: dict[str, tuple[retrieval.EmbeddingIndex, dict[str, str]]] = {}

    def _lock(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[key]

    # -- courses -----------------------------------------------------------

    def create_course(self, title: str, syllabus: str | None = None) -> CourseRoadmap:
        roadmap = curriculum.generate_roadmap(
            title, syllabus, self.backends.gen,
            min_nodes=self.config.min_nodes, max_nodes=self.config.max_nodes,
            seed=self.config.seed, now=self.clock(),
        )
        self.store.put("courses", roadmap.course_id, roadmap.to_json())
        self._build_course_index(roadmap)
        return roadmap

    def get_roadmap(self, course_id: str) -> CourseRoadmap | None:
        doc = self.store.get("courses", course_id)
        return None if doc is None else CourseRoadmap.from_json(doc)

    def _build_course_index(self, roadmap: CourseRoadmap) -> None:
        docs = retrieval.clean_documents(
            [f"{n.title}. {n.summary}" for n in roadmap.nodes]
        )
        chunks = []
        for i, doc in enumerate(docs):
            chunks.extend(retrieval.chunk_document(
                doc, self.config.chunk_size, self.config.chunk_overlap,
                source_doc=f"{roadmap.course_id}-{i}",
            ))
        index = retrieval.build_index(chunks, self.backends.emb)
        retrieval.save_index(index, self.store.root / "indexes" / roadmap.course_id)
        lookup = {c.chunk_id: c.text for c in chunks}
        self.store.put("indexes", f"{roadmap.course_id}-chunks", {"chunks": lookup})
        self._index_cache[roadmap.course_id] = (index, lookup)

    def course_index(self, course_id: str) -> tuple[retrieval.EmbeddingIndex, dict[str, str]]:
        if course_id not in self._index_cache:
            index = retrieval.load_index(self.store.root / "indexes" / course_id)
            doc = self.store.get("indexes", f"{course_id}-chunks") or {"chunks": {}}
            self._index_cache[course_id] = (index, doc["chunks"])
        return self._index_cache[course_id]

    def extend_course_corpus(self, course_id: str, raw_docs: list[str]) -> int:
        """Ingest extra material into the course's retrieval index."""
        roadmap = self.get_roadmap(course_id)
        if roadmap is None:
            raise UnknownNode(course_id)
        index, lookup = self.course_index(course_id)
        docs = retrieval.clean_documents(raw_docs)
        chunks = []
        for i, doc in enumerate(docs):
            chunks.extend(retrieval.chunk_document(
                doc, self.config.chunk_size, self.config.chunk_overlap,
                source_doc=f"{course_id}-extra-{len(lookup)}-{i}",
            ))
        new_index = retrieval.build_index(chunks, self.backends.emb)
        merged = retrieval.EmbeddingIndex(
            dim=index.dim, entries=index.entries + new_index.entries
        )
        lookup = dict(lookup)
        lookup.update({c.chunk_id: c.text for c in chunks})
        retrieval.save_index(merged, self.store.root / "indexes" / course_id)
        self.store.put("indexes", f"{course_id}-chunks", {"chunks": lookup})
        self._index_cache[course_id] = (merged, lookup)
        return len(chunks)

    # -- progress ----------------------------------------------------------

    def _progress_key(self, user_id: str, course_id: str) -> str:
        return f"{user_id}/{course_id}"

    def get_progress(self, user_id: str, course_id: str) -> ProgressRecord:
        key = self._progress_key(user_id, course_id)
        doc = self.store.get("users", key)
        if doc is not None:
            return ProgressRecord.from_json(doc)
        roadmap = self.get_roadmap(course_id)
        if roadmap is None:
            raise UnknownNode(course_id)
        progress = curriculum.initial_progress(user_id, roadmap, now=self.clock())
        self.store.put("users", key, progress.to_json())
        return progress

    def _save_progress(self, progress: ProgressRecord) -> None:
        key = self._progress_key(progress.user_id, progress.course_id)
        self.store.put("users", key, progress.to_json())

    def _course_for_node(self, node_id: str) -> CourseRoadmap:
        for _, doc in self.store.scan("courses"):
            roadmap = CourseRoadmap.from_json(doc)
            if node_id in roadmap.node_ids():
                return roadmap
        raise UnknownNode(node_id)

    # -- lessons -----------------------------------------------------------

    def start_node(self, user_id: str, node_id: str) -> LessonDeck:
        """Generate-and-freeze on first start (lazy, first writer wins)."""
        roadmap = self._course_for_node(node_id)
        with self._lock(f"deck:{user_id}:{node_id}"):
            with self._lock(f"progress:{user_id}:{roadmap.course_id}"):
                progress = self.get_progress(user_id, roadmap.course_id)
                if progress.node_states.get(node_id) == curriculum.LOCKED:
                    raise NodeLocked(node_id)
                progress = curriculum.mark_in_progress(progress, node_id, now=self.clock())
                self._save_progress(progress)
            deck = lesson.fetch_deck(user_id, node_id, self.store)
            if deck is not None:
                return deck
            node = roadmap.node(node_id)
            index, lookup = self.course_index(roadmap.course_id)
            hits = retrieval.query_top_k(index, node.title, self.config.retrieval_k,
                                         self.backends.emb)
            context = [lookup[h.chunk_id] for h in hits]
            deck = lesson.generate_deck(
                node, user_id, self.backends.gen, context_texts=context,
                n_slides=self.config.slides_per_deck,
                batch_size=self.config.gen_batch_size,
                seed=self.config.seed, now=self.clock(),
            )
            frozen = lesson.freeze_deck(deck, self.store)
            segments = lesson.summarize_deck(
                frozen, self.backends.summarizer,
                max_narration_chars=self.config.max_narration_chars,
                seed=self.config.seed,
            )
            self.store.put("decks", f"{user_id}/{node_id}/narration",
                           {"segments": [s.to_json() for s in segments]})
            return frozen

    def get_deck(self, user_id: str, node_id: str) -> LessonDeck | None:
        return lesson.fetch_deck(user_id, node_id, self.store)

    def get_narration(self, user_id: str, node_id: str) -> list[NarrationSegment]:
        doc = self.store.get("decks", f"{user_id}/{node_id}/narration")
        if doc is None:
            raise DeckMissing(f"{user_id}/{node_id}")
        return [
            NarrationSegment(
                slide_ordinal=s["slide_ordinal"],
                summary_text=s["summary_text"],
                audio_ref=s.get("audio_ref"),
                est_duration_ms=s["est_duration_ms"],
            )
            for s in doc["segments"]
        ]

    # -- sessions ----------------------------------------------------------

    def open_session(self, user_id: str, node_id: str) -> session_mod.TutorSession:
        roadmap = self._course_for_node(node_id)
        progress = self.get_progress(user_id, roadmap.course_id)
        deck = self.get_deck(user_id, node_id)
        segments = self.get_narration(user_id, node_id) if deck else []
        return session_mod.open_session(
            user_id, node_id, deck, len(segments), self.store,
            node_state=progress.node_states.get(node_id, curriculum.LOCKED),
            now=self.clock(),
        )

    def get_session(self, user_id: str, node_id: str) -> session_mod.TutorSession | None:
        doc = self.store.get("sessions", session_mod.session_key(user_id, node_id))
        return None if doc is None else session_mod.TutorSession.from_json(doc)

    def _require_session(self, user_id: str, node_id: str) -> session_mod.TutorSession:
        s = self.get_session(user_id, node_id)
        if s is None:
            raise DeckMissing(f"no session for {user_id}/{node_id}")
        return s

    def interrupt(self, user_id: str, node_id: str, trigger: str) -> session_mod.TutorSession:
        with self._lock(f"session:{user_id}:{node_id}"):
            s = self._require_session(user_id, node_id)
            return session_mod.interrupt(s, trigger, self.store, now=self.clock())

    def resume(self, user_id: str, node_id: str) -> session_mod.TutorSession:
        with self._lock(f"session:{user_id}:{node_id}"):
            s = self._require_session(user_id, node_id)
            return session_mod.resume(s, self.store, now=self.clock())

    def advance(self, user_id: str, node_id: str) -> session_mod.TutorSession:
        with self._lock(f"session:{user_id}:{node_id}"):
            s = self._require_session(user_id, node_id)
            return session_mod.advance(s, self.store, now=self.clock())

    def answer_doubt(self, user_id: str, node_id: str, question: str, channel: str):
        roadmap = self._course_for_node(node_id)
        index, lookup = self.course_index(roadmap.course_id)
        with self._lock(f"session:{user_id}:{node_id}"):
            s = self._require_session(user_id, node_id)
            return session_mod.answer_doubt(
                s, question, channel, self.backends.summarizer, index, lookup,
                self.backends.emb, self.store, k=self.config.retrieval_k,
                max_chars=self.config.max_narration_chars, now=self.clock(),
            )

    # -- assessment --------------------------------------------------------

    def create_quiz(self, user_id: str, node_id: str, n_items: int = 5) -> assessment.QuizPaper:
        roadmap = self._course_for_node(node_id)
        deck = self.get_deck(user_id, node_id)
        if deck is None:
            raise DeckMissing(f"{user_id}/{node_id}")
        paper = assessment.generate_quiz(
            roadmap.node(node_id), deck, self.backends.gen, n_items,
            pass_threshold=self.config.gating_threshold, seed=self.config.seed,
        )
        self.store.put("datasets", f"quiz/{user_id}/{paper.quiz_id}", paper.to_json())
        return paper

    def submit_quiz(self, user_id: str, quiz_id: str, answers: list[int]):
        doc = self.store.get("datasets", f"quiz/{user_id}/{quiz_id}")
        if doc is None:
            raise UnknownNode(quiz_id)
        paper = assessment.QuizPaper.from_json(doc)
        score, passed = assessment.grade_quiz(paper, answers)
        roadmap = self._course_for_node(paper.node_id)
        with self._lock(f"progress:{user_id}:{roadmap.course_id}"):
            progress = self.get_progress(user_id, roadmap.course_id)
            progress = curriculum.record_quiz_result(
                progress, roadmap, paper.node_id, score,
                self.config.gating_threshold, now=self.clock(),
            )
            self._save_progress(progress)
        return score, passed, progress

    def decks_for_course(self, user_id: str, roadmap: CourseRoadmap) -> dict[str, LessonDeck]:
        decks = {}
        for node in roadmap.nodes:
            deck = self.get_deck(user_id, node.id)
            if deck is not None:
                decks[node.id] = deck
        return decks

    def course_notes(self, user_id: str, course_id: str) -> dict:
        roadmap = self.get_roadmap(course_id)
        if roadmap is None:
            raise UnknownNode(course_id)
        progress = self.get_progress(user_id, course_id)
        decks = self.decks_for_course(user_id, roadmap)
        return assessment.generate_notes(roadmap, progress, decks, self.backends.gen,
                                         seed=self.config.seed)

    def create_exam(self, user_id: str, course_id: str, n_questions: int = 4):
        roadmap = self.get_roadmap(course_id)
        if roadmap is None:
            raise UnknownNode(course_id)
        with self._lock(f"exam:{user_id}:{course_id}"):
            progress = self.get_progress(user_id, course_id)
            decks = self.decks_for_course(user_id, roadmap)
            questions = assessment.generate_final_exam(
                roadmap, progress, decks, self.backends.gen, n_questions,
                seed=self.config.seed,
            )
            exam_id = f"exam-{user_id}-{course_id}"
            self.store.put("datasets", f"exam/{exam_id}",
                           {"exam_id": exam_id, "user_id": user_id,
                            "questions": [q.to_json() for q in questions]})
            return exam_id, questions

    def submit_exam(self, exam_id: str, answers: list[str]) -> assessment.GradeReport:
        doc = self.store.get("datasets", f"exam/{exam_id}")
        if doc is None:
            raise UnknownNode(exam_id)
        questions = [
            assessment.ExamQuestion(
                question_id=q["question_id"], prompt=q["prompt"],
                reference_answer=q["reference_answer"],
            )
            for q in doc["questions"]
        ]
        report = assessment.exam_report(
            questions, answers, self.backends.emb,
            self.config.grading_threshold, gen=self.backends.gen,
            seed=self.config.seed,
        )
        self.store.put("reports", exam_id, report.to_json())
        return report
