"""Lesson decks: batched slide generation, narration summaries, freezing, export."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from . import prompts
from .backends import GenerationBackend, GenerationRequest, Message, SpeechBackend, SpeechRequest
from .curriculum import TopicNode, utc_now
from .errors import (
    AlreadyFrozen,
    BackendRejected,
    DeckMissing,
    MalformedSlide,
    OverlongSummary,
    UnsupportedFormat,
)
from .backends import truncate_at_sentence
from .store import DocumentStore

MS_PER_CHAR = 60  # narration duration fallback when the speech backend gives none


@dataclass(frozen=True)
class Slide:
    ordinal: int
    title: str
    bullets: tuple[str, ...]
    body: str


@dataclass(frozen=True)
class LessonDeck:
    node_id: str
    user_id: str
    slides: tuple[Slide, ...]
    content_hash: str
    frozen: bool
    created_at: str = ""

    def to_json(self) -> dict:
        return {
            "node_id": self.node_id,
            "user_id": self.user_id,
            "frozen": self.frozen,
            "slides": [
                {
                    "ordinal": s.ordinal,
                    "title": s.title,
                    "bullets": list(s.bullets),
                    "body": s.body,
                }
                for s in self.slides
            ],
            "content_hash": self.content_hash,
        }

    @classmethod
    def from_json(cls, doc: dict, created_at: str = "") -> "LessonDeck":
        slides = tuple(
            Slide(
                ordinal=s["ordinal"],
                title=s["title"],
                bullets=tuple(s["bullets"]),
                body=s["body"],
            )
            for s in doc["slides"]
        )
        return cls(
            node_id=doc["node_id"],
            user_id=doc["user_id"],
            slides=slides,
            content_hash=doc["content_hash"],
            frozen=doc["frozen"],
            created_at=created_at,
        )


@dataclass(frozen=True)
class NarrationSegment:
    slide_ordinal: int
    summary_text: str
    audio_ref: str | None = None
    est_duration_ms: int = 0

    def to_json(self) -> dict:
        return {
            "slide_ordinal": self.slide_ordinal,
            "summary_text": self.summary_text,
            "audio_ref": self.audio_ref,
            "est_duration_ms": self.est_duration_ms,
        }


def content_hash(node_id: str, user_id: str, slides: tuple[Slide, ...]) -> str:
    """SHA-256 of the canonical slide JSON (sorted keys, no extra whitespace)."""
    canon = {
        "node_id": node_id,
        "user_id": user_id,
        "slides": [
            {"ordinal": s.ordinal, "title": s.title, "bullets": list(s.bullets), "body": s.body}
            for s in slides
        ],
    }
    data = json.dumps(canon, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def _validate_slides(slides: list[Slide], expected_ordinals: list[int]) -> str | None:
    if [s.ordinal for s in slides] != expected_ordinals:
        return "ordinal sequence mismatch"
    for s in slides:
        if not s.title.strip():
            return f"slide {s.ordinal}: empty title"
        if not s.body.strip() and not any(b.strip() for b in s.bullets):
            return f"slide {s.ordinal}: no content"
    return None


def generate_deck(
    node: TopicNode,
    user_id: str,
    gen: GenerationBackend,
    context_texts: list[str] | None = None,
    n_slides: int = 8,
    batch_size: int = 4,
    seed: int = 0,
    now: str | None = None,
) -> LessonDeck:
    """Produce an unfrozen deck in sequential batches of slides."""
    context = "\n".join(context_texts or [])
    slides: list[Slide] = []
    for start in range(1, n_slides + 1, batch_size):
        ordinals = list(range(start, min(start + batch_size, n_slides + 1)))
        batch = _generate_batch(node, gen, ordinals, n_slides, context, seed)
        slides.extend(batch)
    error = _validate_slides(slides, list(range(1, n_slides + 1)))
    if error:
        raise MalformedSlide(error)
    return LessonDeck(
        node_id=node.id,
        user_id=user_id,
        slides=tuple(slides),
        content_hash=content_hash(node.id, user_id, tuple(slides)),
        frozen=False,
        created_at=now or utc_now(),
    )


def _generate_batch(node, gen, ordinals, total, context, seed) -> list[Slide]:
    prompt = prompts.slides_prompt(node.title, ordinals, total, context)
    last_error = "unparseable output"
    for attempt in range(2):
        req = GenerationRequest(messages=[Message("user", prompt)], seed=seed + attempt)
        text = gen.generate(req).text
        try:
            doc = json.loads(text)
            batch = [
                Slide(
                    ordinal=s["ordinal"],
                    title=s["title"],
                    bullets=tuple(s["bullets"]),
                    body=s["body"],
                )
                for s in doc["slides"]
            ]
        except (ValueError, KeyError, TypeError) as exc:
            last_error = str(exc)
            continue
        error = _validate_slides(batch, ordinals)
        if error is None:
            return batch
        last_error = error
    raise MalformedSlide(last_error)


def summarize_deck(
    deck: LessonDeck,
    summarizer: GenerationBackend,
    max_narration_chars: int = 600,
    seed: int = 0,
) -> list[NarrationSegment]:
    """One spoken-script segment per slide, in slide order."""
    if not deck.slides:
        raise ValueError("deck has no slides")
    segments = []
    for slide in deck.slides:
        source = slide.title + ". " + " ".join(deck_slide_text(slide))
        summary = _summarize_text(source, summarizer, max_narration_chars, seed)
        segments.append(
            NarrationSegment(
                slide_ordinal=slide.ordinal,
                summary_text=summary,
                est_duration_ms=MS_PER_CHAR * len(summary),
            )
        )
    return segments


def deck_slide_text(slide: Slide) -> list[str]:
    parts = [b for b in slide.bullets if b.strip()]
    if slide.body.strip():
        parts.append(slide.body)
    return parts


def _summarize_text(text: str, summarizer: GenerationBackend, max_chars: int, seed: int) -> str:
    prompt = prompts.summarize_prompt(text, max_chars)
    req = GenerationRequest(messages=[Message("user", prompt)], seed=seed)
    summary = summarizer.generate(req).text
    if len(summary) > max_chars:
        # one re-ask, then hard truncation at a sentence boundary
        req = GenerationRequest(messages=[Message("user", prompt)], seed=seed + 1)
        summary = summarizer.generate(req).text
        if len(summary) > max_chars:
            summary = truncate_at_sentence(summary, max_chars)
            if len(summary) > max_chars:
                raise OverlongSummary(f"{len(summary)} chars after truncation")
    return summary


def deck_key(user_id: str, node_id: str) -> str:
    return f"{user_id}/{node_id}"


def freeze_deck(deck: LessonDeck, store: DocumentStore) -> LessonDeck:
    if deck.frozen:
        raise AlreadyFrozen(deck_key(deck.user_id, deck.node_id))
    frozen = replace(deck, frozen=True)
    store.put("decks", deck_key(deck.user_id, deck.node_id), frozen.to_json())
    return frozen


def fetch_deck(user_id: str, node_id: str, store: DocumentStore) -> LessonDeck | None:
    doc = store.get("decks", deck_key(user_id, node_id))
    if doc is None:
        return None
    return LessonDeck.from_json(doc)


def export_deck(deck: LessonDeck, fmt: str) -> bytes:
    if not deck.frozen:
        raise ValueError("only frozen decks are exportable")
    if fmt == "json":
        return json.dumps(deck.to_json(), sort_keys=True, indent=2).encode("utf-8")
    if fmt == "markdown":
        lines = [f"# Lesson: {deck.node_id}", ""]
        for s in deck.slides:
            lines.append(f"## {s.title}")
            lines.append("")
            for b in s.bullets:
                lines.append(f"- {b}")
            if s.body:
                lines.append("")
                lines.append(s.body)
            lines.append("")
        return "\n".join(lines).encode("utf-8")
    raise UnsupportedFormat(fmt)


# ---------------------------------------------------------------------------
# Narration planning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanStep:
    kind: str  # "synth" | "play"
    ordinal: int
    deps: tuple[tuple[str, int], ...]  # steps that must complete first


def narration_plan(segments: list[NarrationSegment]) -> list[PlanStep]:
    """Two-stage pipeline: synth(i+1) waits only on synth(i); play is ordinal-ordered.

    Returned steps are topologically ordered; an executor may run any
    step whose dependencies are complete, which lets synthesis of the
    next segment overlap playback of the current one.
    """
    if not segments:
        raise ValueError("no segments to plan")
    ordered = sorted(segments, key=lambda s: s.slide_ordinal)
    steps: list[PlanStep] = []
    prev_synth: tuple[str, int] | None = None
    prev_play: tuple[str, int] | None = None
    for seg in ordered:
        synth_deps = (prev_synth,) if prev_synth else ()
        steps.append(PlanStep("synth", seg.slide_ordinal, synth_deps))
        play_deps = [("synth", seg.slide_ordinal)]
        if prev_play:
            play_deps.append(prev_play)
        steps.append(PlanStep("play", seg.slide_ordinal, tuple(play_deps)))
        prev_synth = ("synth", seg.slide_ordinal)
        prev_play = ("play", seg.slide_ordinal)
    return steps


def synthesize_segments(
    segments: list[NarrationSegment], tts: SpeechBackend, store: DocumentStore,
    user_id: str = "", node_id: str = "",
) -> list[NarrationSegment]:
    """Run synthesis for each segment, storing audio and real durations."""
    out = []
    for seg in segments:
        try:
            resp = tts.synthesize(SpeechRequest(text=seg.summary_text))
        except BackendRejected:
            out.append(seg)
            continue
        ref = f"{user_id}/{node_id}/{seg.slide_ordinal}"
        out.append(replace(seg, audio_ref=ref, est_duration_ms=resp.duration_ms))
    return out
