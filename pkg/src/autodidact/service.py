"""HTTP API over the teaching engine."""

from __future__ import annotations

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import curriculum, lesson
from .engine import TeachingEngine
from .errors import (
    AlreadyFrozen,
    AutodidactError,
    BackendRejected,
    BackendTimeout,
    BackendUnavailable,
    CourseIncomplete,
    DeckMissing,
    InvalidTransition,
    NodeLocked,
    NotPlaying,
    UnknownNode,
    UnsupportedFormat,
)

_STATUS = {
    NodeLocked: 409,
    AlreadyFrozen: 409,
    NotPlaying: 409,
    InvalidTransition: 409,
    CourseIncomplete: 409,
    UnknownNode: 404,
    DeckMissing: 404,
    BackendUnavailable: 502,
    BackendTimeout: 502,
    BackendRejected: 502,
}


class CourseBody(BaseModel):
    title: str
    syllabus: str | None = None


class DoubtBody(BaseModel):
    question: str
    channel: str = "chat"


class QuizSubmitBody(BaseModel):
    user_id: str
    answers: list[int]


class ExamBody(BaseModel):
    n_questions: int = 4


class ExamSubmitBody(BaseModel):
    answers: list[str]


class QuizBody(BaseModel):
    n_items: int = 5


def _progress_json(progress) -> dict:
    return progress.to_json() | {"available": sorted(curriculum.available_nodes(progress))}


def create_app(engine: TeachingEngine) -> FastAPI:
    app = FastAPI(title="autodidact")

    @app.exception_handler(AutodidactError)
    async def handle_engine_error(request: Request, exc: AutodidactError):
        status = next((s for t, s in _STATUS.items() if isinstance(exc, t)), 422)
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "detail": exc.detail})

    @app.post("/courses")
    def create_course(body: CourseBody):
        roadmap = engine.create_course(body.title, body.syllabus)
        return roadmap.to_json()

    @app.get("/courses/{course_id}/roadmap")
    def get_roadmap(course_id: str):
        roadmap = engine.get_roadmap(course_id)
        if roadmap is None:
            raise UnknownNode(course_id)
        return roadmap.to_json()

    @app.get("/users/{user_id}/courses/{course_id}/progress")
    def get_progress(user_id: str, course_id: str):
        return _progress_json(engine.get_progress(user_id, course_id))

    @app.post("/users/{user_id}/nodes/{node_id}/start")
    def start_node(user_id: str, node_id: str):
        deck = engine.start_node(user_id, node_id)
        return deck.to_json()

    @app.get("/users/{user_id}/nodes/{node_id}/deck")
    def get_deck(user_id: str, node_id: str):
        deck = engine.get_deck(user_id, node_id)
        if deck is None:
            raise DeckMissing(f"{user_id}/{node_id}")
        return deck.to_json()

    @app.get("/users/{user_id}/nodes/{node_id}/deck/export")
    def export_deck(user_id: str, node_id: str, format: str = Query("json")):
        deck = engine.get_deck(user_id, node_id)
        if deck is None:
            raise DeckMissing(f"{user_id}/{node_id}")
        data = lesson.export_deck(deck, format)
        media = "application/json" if format == "json" else "text/markdown"
        return Response(content=data, media_type=media)

    @app.get("/users/{user_id}/nodes/{node_id}/narration")
    def get_narration(user_id: str, node_id: str):
        return {"segments": [s.to_json() for s in engine.get_narration(user_id, node_id)]}

    @app.post("/users/{user_id}/nodes/{node_id}/session/open")
    def open_session(user_id: str, node_id: str):
        return engine.open_session(user_id, node_id).to_json()

    @app.post("/users/{user_id}/nodes/{node_id}/session/interrupt")
    def interrupt(user_id: str, node_id: str, trigger: str = Query("ui_button")):
        return engine.interrupt(user_id, node_id, trigger).to_json()

    @app.post("/users/{user_id}/nodes/{node_id}/session/resume")
    def resume(user_id: str, node_id: str):
        return engine.resume(user_id, node_id).to_json()

    @app.post("/users/{user_id}/nodes/{node_id}/session/advance")
    def advance(user_id: str, node_id: str):
        return engine.advance(user_id, node_id).to_json()

    @app.post("/users/{user_id}/nodes/{node_id}/doubt")
    def doubt(user_id: str, node_id: str, body: DoubtBody):
        _, exchange = engine.answer_doubt(user_id, node_id, body.question, body.channel)
        return exchange.to_json()

    @app.post("/users/{user_id}/nodes/{node_id}/quiz")
    def create_quiz(user_id: str, node_id: str, body: QuizBody | None = None):
        n_items = body.n_items if body else 5
        paper = engine.create_quiz(user_id, node_id, n_items)
        return paper.to_json(student_facing=True)

    @app.post("/quizzes/{quiz_id}/submit")
    def submit_quiz(quiz_id: str, body: QuizSubmitBody):
        score, passed, progress = engine.submit_quiz(body.user_id, quiz_id, body.answers)
        return {"score": score, "passed": passed, "progress": _progress_json(progress)}

    @app.get("/courses/{course_id}/notes")
    def notes(course_id: str, user: str = Query(...)):
        return engine.course_notes(user, course_id)

    @app.post("/users/{user_id}/courses/{course_id}/exam")
    def create_exam(user_id: str, course_id: str, body: ExamBody | None = None):
        n = body.n_questions if body else 4
        exam_id, questions = engine.create_exam(user_id, course_id, n)
        return {
            "exam_id": exam_id,
            "questions": [{"question_id": q.question_id, "prompt": q.prompt}
                          for q in questions],
        }

    @app.post("/exams/{exam_id}/submit")
    def submit_exam(exam_id: str, body: ExamSubmitBody):
        return engine.submit_exam(exam_id, body.answers).to_json()

    return app
