"""Quizzes, course notes, final exams, and similarity-based grading."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from . import prompts
from .backends import (
    EmbeddingBackend,
    EmbeddingRequest,
    GenerationBackend,
    GenerationRequest,
    Message,
)
from .curriculum import PASSED, CourseRoadmap, ProgressRecord, TopicNode
from .errors import (
    AutodidactError,
    CourseIncomplete,
    EmptyAnswer,
    LengthMismatch,
    MalformedQuiz,
)
from .lesson import LessonDeck, deck_slide_text
from .metrics import cosine
from .tokenization import normalize_text


@dataclass(frozen=True)
class McqItem:
    stem: str
    options: tuple[str, str, str, str]
    correct_index: int


@dataclass(frozen=True)
class QuizPaper:
    quiz_id: str
    node_id: str
    items: tuple[McqItem, ...]
    pass_threshold: float

    def to_json(self, student_facing: bool = False) -> dict:
        items = []
        for item in self.items:
            rec = {"stem": item.stem, "options": list(item.options)}
            if not student_facing:
                rec["correct_index"] = item.correct_index
            items.append(rec)
        return {"quiz_id": self.quiz_id, "node_id": self.node_id, "items": items,
                "pass_threshold": self.pass_threshold}

    @classmethod
    def from_json(cls, doc: dict) -> "QuizPaper":
        return cls(
            quiz_id=doc["quiz_id"],
            node_id=doc["node_id"],
            items=tuple(
                McqItem(stem=i["stem"], options=tuple(i["options"]),
                        correct_index=i["correct_index"])
                for i in doc["items"]
            ),
            pass_threshold=doc["pass_threshold"],
        )


@dataclass(frozen=True)
class ExamQuestion:
    question_id: str
    prompt: str
    reference_answer: str

    def to_json(self) -> dict:
        return {"question_id": self.question_id, "prompt": self.prompt,
                "reference_answer": self.reference_answer}


@dataclass(frozen=True)
class QuestionGrade:
    question_id: str
    similarity: float
    passed: bool
    feedback: str = ""


@dataclass(frozen=True)
class GradeReport:
    per_question: tuple[QuestionGrade, ...]
    overall_score: float
    overall_passed: bool
    feedback: str

    def to_json(self) -> dict:
        return {
            "per_question": [
                {"question_id": g.question_id, "similarity": g.similarity,
                 "passed": g.passed, "feedback": g.feedback}
                for g in self.per_question
            ],
            "overall_score": self.overall_score,
            "overall_passed": self.overall_passed,
            "feedback": self.feedback,
        }


def _deck_text(deck: LessonDeck) -> str:
    parts = []
    for slide in deck.slides:
        parts.append(slide.title)
        parts.extend(deck_slide_text(slide))
    return "\n".join(parts)


def generate_quiz(
    node: TopicNode,
    deck: LessonDeck,
    gen: GenerationBackend,
    n_items: int,
    pass_threshold: float = 0.7,
    seed: int = 0,
) -> QuizPaper:
    if not deck.frozen:
        raise ValueError("quiz requires a frozen deck")
    if n_items < 1:
        raise ValueError("n_items must be >= 1")
    prompt = prompts.quiz_prompt(node.title, n_items, _deck_text(deck))
    last_error = "unparseable output"
    for attempt in range(2):
        req = GenerationRequest(messages=[Message("user", prompt)], seed=seed + attempt)
        text = gen.generate(req).text
        items = _parse_quiz(text, n_items)
        if isinstance(items, str):
            last_error = items
            continue
        return QuizPaper(
            quiz_id=f"quiz-{node.id}",
            node_id=node.id,
            items=tuple(items),
            pass_threshold=pass_threshold,
        )
    raise MalformedQuiz(last_error)


def _parse_quiz(text: str, n_items: int):
    try:
        doc = json.loads(text)
        items = [
            McqItem(stem=i["stem"], options=tuple(i["options"]),
                    correct_index=int(i["correct_index"]))
            for i in doc["items"]
        ]
    except (ValueError, KeyError, TypeError) as exc:
        return str(exc)
    if len(items) != n_items:
        return f"expected {n_items} items, got {len(items)}"
    for item in items:
        if not item.stem.strip():
            return "empty stem"
        if len(item.options) != 4 or len(set(item.options)) != 4:
            return "options must be 4 distinct texts"
        if not 0 <= item.correct_index <= 3:
            return "correct_index out of range"
    return items


def grade_quiz(paper: QuizPaper, answers: list[int]) -> tuple[float, bool]:
    if len(answers) != len(paper.items):
        raise LengthMismatch(f"{len(answers)} answers for {len(paper.items)} items")
    correct = sum(1 for item, a in zip(paper.items, answers) if a == item.correct_index)
    score = correct / len(paper.items)
    return score, score >= paper.pass_threshold


def generate_notes(
    roadmap: CourseRoadmap,
    progress: ProgressRecord,
    decks: dict[str, LessonDeck],
    gen: GenerationBackend,
    seed: int = 0,
) -> dict:
    """Question/answer revision notes, one section per passed node."""
    sections = []
    for node in roadmap.nodes:
        if progress.node_states.get(node.id) != PASSED:
            continue
        deck = decks.get(node.id)
        deck_text = _deck_text(deck) if deck else node.summary
        prompt = prompts.notes_prompt(node.title, deck_text)
        req = GenerationRequest(messages=[Message("user", prompt)], seed=seed)
        text = gen.generate(req).text
        try:
            qa = json.loads(text)["qa"]
        except (ValueError, KeyError, TypeError):
            qa = [{"q": f"What is {node.title}?", "a": node.summary or node.title}]
        sections.append({"node_id": node.id, "title": node.title, "qa": qa})
    return {"course_id": roadmap.course_id, "sections": sections}


def notes_to_markdown(notes: dict) -> str:
    lines = [f"# Notes: {notes['course_id']}", ""]
    for section in notes["sections"]:
        lines.append(f"## {section['title']}")
        lines.append("")
        for pair in section["qa"]:
            lines.append(f"**Q:** {pair['q']}")
            lines.append("")
            lines.append(f"**A:** {pair['a']}")
            lines.append("")
    return "\n".join(lines)


def generate_final_exam(
    roadmap: CourseRoadmap,
    progress: ProgressRecord,
    decks: dict[str, LessonDeck],
    gen: GenerationBackend,
    n_questions: int,
    seed: int,
) -> list[ExamQuestion]:
    """Random exam spanning the whole course; requires every node passed."""
    unpassed = [n.id for n in roadmap.nodes
                if progress.node_states.get(n.id) != PASSED]
    if unpassed:
        raise CourseIncomplete(f"nodes not passed: {sorted(unpassed)}")
    if n_questions < 1:
        raise ValueError("n_questions must be >= 1")
    rng = random.Random(seed)
    node_ids = [n.id for n in roadmap.nodes]
    questions = []
    for i in range(n_questions):
        # round-robin over a shuffled node order so questions span nodes
        if i % len(node_ids) == 0:
            order = list(node_ids)
            rng.shuffle(order)
        node = roadmap.node(order[i % len(node_ids)])
        deck = decks.get(node.id)
        deck_text = _deck_text(deck) if deck else node.summary
        prompt = prompts.exam_question_prompt(node.title, deck_text, i)
        req = GenerationRequest(messages=[Message("user", prompt)], seed=seed + i)
        text = gen.generate(req).text
        try:
            doc = json.loads(text)
            q = ExamQuestion(
                question_id=f"exam-{roadmap.course_id}-{i}",
                prompt=doc["prompt"],
                reference_answer=doc["reference_answer"],
            )
        except (ValueError, KeyError, TypeError):
            q = ExamQuestion(
                question_id=f"exam-{roadmap.course_id}-{i}",
                prompt=f"Explain the key ideas of {node.title}.",
                reference_answer=node.summary or node.title,
            )
        questions.append(q)
    return questions


def grade_long_answer(
    student: str,
    reference: str,
    emb: EmbeddingBackend,
    threshold: float,
) -> tuple[float, bool]:
    """Cosine of the two texts' embeddings after lowercasing/normalizing."""
    if not reference.strip():
        raise ValueError("reference answer is empty")
    if not student.strip():
        raise EmptyAnswer("student answer is empty")
    s = normalize_text(student)
    r = normalize_text(reference)
    vecs = emb.embed(EmbeddingRequest(texts=[s, r])).vectors
    similarity = cosine(vecs[0], vecs[1])
    return similarity, similarity >= threshold


def exam_report(
    questions: list[ExamQuestion],
    submissions: list[str],
    emb: EmbeddingBackend,
    threshold: float,
    gen: GenerationBackend | None = None,
    seed: int = 0,
) -> GradeReport:
    """Grade every answer; feedback is best-effort and never blocks grading."""
    if len(submissions) != len(questions):
        raise LengthMismatch(f"{len(submissions)} answers for {len(questions)} questions")
    grades = []
    for question, answer in zip(questions, submissions):
        try:
            similarity, passed = grade_long_answer(answer, question.reference_answer,
                                                   emb, threshold)
        except EmptyAnswer:
            similarity, passed = 0.0, False
        feedback = ""
        if gen is not None:
            try:
                prompt = prompts.feedback_prompt(question.prompt, answer,
                                                 question.reference_answer, similarity)
                req = GenerationRequest(messages=[Message("user", prompt)], seed=seed)
                feedback = gen.generate(req).text
            except AutodidactError:
                feedback = ""
        grades.append(QuestionGrade(
            question_id=question.question_id,
            similarity=similarity,
            passed=passed,
            feedback=feedback,
        ))
    overall = sum(g.similarity for g in grades) / len(grades)
    failed = [g.question_id for g in grades if not g.passed]
    summary = "All questions passed." if not failed else \
        "Review needed on: " + ", ".join(failed)
    return GradeReport(
        per_question=tuple(grades),
        overall_score=overall,
        overall_passed=overall >= threshold,
        feedback=summary,
    )
