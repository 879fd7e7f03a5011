"""Live lesson session: narration playback, doubt interruption, resumption."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from . import prompts
from .backends import EmbeddingBackend, GenerationBackend, GenerationRequest, Message
from .curriculum import utc_now
from .errors import (
    DeckMissing,
    EmptyQuestion,
    InvalidTransition,
    NodeLocked,
    NotPlaying,
)
from .lesson import LessonDeck
from .retrieval import EmbeddingIndex, query_top_k
from .store import DocumentStore

IDLE = "idle"
PLAYING = "playing"
PAUSED_FOR_DOUBT = "paused_for_doubt"
FINISHED = "finished"


@dataclass(frozen=True)
class DoubtExchange:
    question: str
    channel: str  # "chat" | "voice_transcript"
    answer: str
    sources: tuple[str, ...]
    asked_at: str

    def to_json(self) -> dict:
        return {
            "question": self.question,
            "channel": self.channel,
            "answer": self.answer,
            "sources": list(self.sources),
            "asked_at": self.asked_at,
        }


@dataclass(frozen=True)
class TutorSession:
    session_id: str
    user_id: str
    node_id: str
    state: str
    position: int
    segment_count: int
    transcript: tuple[DoubtExchange, ...] = ()

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "user_id": self.user_id,
            "node_id": self.node_id,
            "state": self.state,
            "position": self.position,
            "segment_count": self.segment_count,
            "transcript": [d.to_json() for d in self.transcript],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TutorSession":
        return cls(
            session_id=doc["session_id"],
            user_id=doc["user_id"],
            node_id=doc["node_id"],
            state=doc["state"],
            position=doc["position"],
            segment_count=doc["segment_count"],
            transcript=tuple(
                DoubtExchange(
                    question=d["question"],
                    channel=d["channel"],
                    answer=d["answer"],
                    sources=tuple(d["sources"]),
                    asked_at=d["asked_at"],
                )
                for d in doc["transcript"]
            ),
        )


def session_key(user_id: str, node_id: str) -> str:
    return f"{user_id}/{node_id}"


def _persist(session: TutorSession, store: DocumentStore, event: str, now: str) -> None:
    store.put("sessions", session_key(session.user_id, session.node_id), session.to_json())
    store.append_line(
        "sessions",
        session_key(session.user_id, session.node_id) + "/events",
        {"session_id": session.session_id, "event": event, "at": now,
         "state": session.state, "position": session.position},
    )


def open_session(
    user_id: str,
    node_id: str,
    deck: LessonDeck | None,
    segment_count: int,
    store: DocumentStore,
    node_state: str = "unlocked",
    now: str | None = None,
) -> TutorSession:
    """Open (or resume) the session for a frozen deck; node goes in_progress."""
    if deck is None or not deck.frozen:
        raise DeckMissing(f"{user_id}/{node_id}")
    if node_state == "locked":
        raise NodeLocked(node_id)
    existing = store.get("sessions", session_key(user_id, node_id))
    if existing is not None and existing["state"] != FINISHED:
        return TutorSession.from_json(existing)
    session = TutorSession(
        session_id=f"s-{user_id}-{node_id}",
        user_id=user_id,
        node_id=node_id,
        state=PLAYING,
        position=1,
        segment_count=segment_count,
    )
    _persist(session, store, "open", now or utc_now())
    return session


def interrupt(session: TutorSession, trigger: str, store: DocumentStore,
              now: str | None = None) -> TutorSession:
    if session.state != PLAYING:
        raise NotPlaying(f"state is {session.state}")
    if trigger not in ("wake_word", "ui_button"):
        raise ValueError(f"unknown trigger {trigger!r}")
    out = replace(session, state=PAUSED_FOR_DOUBT)
    _persist(out, store, "interrupt", now or utc_now())
    return out


def answer_doubt(
    session: TutorSession,
    question: str,
    channel: str,
    gen: GenerationBackend,
    index: EmbeddingIndex,
    chunk_lookup: dict[str, str],
    emb: EmbeddingBackend,
    store: DocumentStore,
    k: int = 4,
    max_chars: int = 600,
    now: str | None = None,
) -> tuple[TutorSession, DoubtExchange]:
    if session.state != PAUSED_FOR_DOUBT:
        raise InvalidTransition(f"cannot answer doubts while {session.state}")
    if not question.strip():
        raise EmptyQuestion("question is empty")
    if channel not in ("chat", "voice_transcript"):
        raise ValueError(f"unknown channel {channel!r}")
    hits = query_top_k(index, question, k, emb)
    context = "\n".join(
        f"[{i}] {chunk_lookup[h.chunk_id]}" for i, h in enumerate(hits, start=1)
    )
    prompt = prompts.doubt_prompt(question, context, max_chars)
    answer = gen.generate(GenerationRequest(messages=[Message("user", prompt)])).text
    if len(answer) > max_chars:
        answer = answer[:max_chars]
    exchange = DoubtExchange(
        question=question,
        channel=channel,
        answer=answer,
        sources=tuple(h.chunk_id for h in hits),
        asked_at=now or utc_now(),
    )
    out = replace(session, transcript=session.transcript + (exchange,))
    _persist(out, store, "doubt", exchange.asked_at)
    return out, exchange


def resume(session: TutorSession, store: DocumentStore, now: str | None = None) -> TutorSession:
    if session.state != PAUSED_FOR_DOUBT:
        raise InvalidTransition(f"cannot resume from {session.state}")
    out = replace(session, state=PLAYING)
    _persist(out, store, "resume", now or utc_now())
    return out


def advance(session: TutorSession, store: DocumentStore, now: str | None = None) -> TutorSession:
    if session.state != PLAYING:
        raise InvalidTransition(f"cannot advance from {session.state}")
    if session.position >= session.segment_count:
        out = replace(session, state=FINISHED)
        _persist(out, store, "finish", now or utc_now())
    else:
        out = replace(session, position=session.position + 1)
        _persist(out, store, "advance", now or utc_now())
    return out
