"""Course roadmaps as prerequisite DAGs and the quiz-driven unlocking machine."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from . import prompts
from .backends import GenerationBackend, GenerationRequest, Message
from .errors import InvalidRoadmap, MalformedRoadmap, NodeLocked, UnknownNode

LOCKED = "locked"
UNLOCKED = "unlocked"
IN_PROGRESS = "in_progress"
PASSED = "passed"


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class TopicNode:
    id: str
    title: str
    summary: str
    prerequisites: frozenset[str]
    depth: int = 0


@dataclass(frozen=True)
class CourseRoadmap:
    course_id: str
    title: str
    nodes: tuple[TopicNode, ...]
    created_at: str = ""

    def node(self, node_id: str) -> TopicNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise UnknownNode(node_id)

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def to_json(self) -> dict:
        return {
            "course_id": self.course_id,
            "title": self.title,
            "nodes": [
                {
                    "id": n.id,
                    "title": n.title,
                    "summary": n.summary,
                    "prerequisites": sorted(n.prerequisites),
                }
                for n in self.nodes
            ],
        }

    @classmethod
    def from_json(cls, doc: dict, created_at: str = "") -> "CourseRoadmap":
        nodes = tuple(
            TopicNode(
                id=n["id"],
                title=n["title"],
                summary=n.get("summary", ""),
                prerequisites=frozenset(n.get("prerequisites", [])),
            )
            for n in doc["nodes"]
        )
        roadmap = cls(course_id=doc["course_id"], title=doc["title"], nodes=nodes,
                      created_at=created_at)
        return _with_depths(roadmap)


@dataclass(frozen=True)
class ProgressRecord:
    user_id: str
    course_id: str
    node_states: dict[str, str]
    quiz_scores: dict[str, float]
    updated_at: str = ""

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "course_id": self.course_id,
            "node_states": dict(self.node_states),
            "quiz_scores": dict(self.quiz_scores),
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ProgressRecord":
        return cls(
            user_id=doc["user_id"],
            course_id=doc["course_id"],
            node_states=dict(doc["node_states"]),
            quiz_scores={k: float(v) for k, v in doc["quiz_scores"].items()},
            updated_at=doc.get("updated_at", ""),
        )


def _with_depths(roadmap: CourseRoadmap) -> CourseRoadmap:
    """Recompute node depths as distance from the nearest root (BFS)."""
    depth: dict[str, int] = {}
    remaining = {n.id: n for n in roadmap.nodes}
    level = 0
    while remaining:
        ready = [
            nid for nid, n in remaining.items()
            if all(p in depth for p in n.prerequisites)
        ]
        if not ready:
            break  # cycle; validation reports it
        for nid in ready:
            preds = remaining[nid].prerequisites
            depth[nid] = 0 if not preds else 1 + max(depth[p] for p in preds)
            del remaining[nid]
        level += 1
    nodes = tuple(replace(n, depth=depth.get(n.id, 0)) for n in roadmap.nodes)
    return replace(roadmap, nodes=nodes)


def validate_roadmap(roadmap: CourseRoadmap) -> list[dict]:
    """Return a list of invariant violations; empty iff the roadmap is valid."""
    violations: list[dict] = []
    ids = [n.id for n in roadmap.nodes]
    id_set = set(ids)
    if not roadmap.nodes:
        violations.append({"node_id": None, "rule": "non_empty"})
        return violations
    seen: set[str] = set()
    for n in roadmap.nodes:
        if n.id in seen:
            violations.append({"node_id": n.id, "rule": "duplicate_id"})
        seen.add(n.id)
        if n.id in n.prerequisites:
            violations.append({"node_id": n.id, "rule": "self_prerequisite"})
        for p in n.prerequisites:
            if p not in id_set:
                violations.append({"node_id": n.id, "rule": "unknown_prerequisite"})
    roots = [n.id for n in roadmap.nodes if not n.prerequisites]
    if not roots:
        violations.append({"node_id": None, "rule": "no_root"})
    # Kahn's algorithm: nodes left over sit on a cycle (or behind one).
    order: list[str] = []
    resolved: set[str] = set()
    pending = {n.id: set(p for p in n.prerequisites if p in id_set) for n in roadmap.nodes}
    while True:
        ready = sorted(nid for nid, preds in pending.items() if preds <= resolved and nid not in resolved)
        if not ready:
            break
        resolved.update(ready)
        order.extend(ready)
    for nid in sorted(id_set - resolved):
        violations.append({"node_id": nid, "rule": "cycle"})
    return violations


def generate_roadmap(
    course_title: str,
    syllabus_hint: str | None,
    gen: GenerationBackend,
    min_nodes: int = 3,
    max_nodes: int = 40,
    seed: int = 0,
    now: str | None = None,
) -> CourseRoadmap:
    """Ask the generation backend for a roadmap; validate, retry once on junk."""
    if not course_title.strip():
        raise MalformedRoadmap("course title is empty")
    prompt = prompts.roadmap_prompt(course_title, syllabus_hint, min_nodes, max_nodes)
    last_error = "unparseable output"
    for attempt in range(2):
        req = GenerationRequest(messages=[Message("user", prompt)], seed=seed + attempt)
        text = gen.generate(req).text
        try:
            doc = json.loads(text)
            roadmap = CourseRoadmap.from_json(doc, created_at=now or utc_now())
        except (ValueError, KeyError, TypeError) as exc:
            last_error = str(exc)
            continue
        violations = validate_roadmap(roadmap)
        if not violations and min_nodes <= len(roadmap.nodes) <= max_nodes:
            return roadmap
        last_error = f"violations={violations}, node_count={len(roadmap.nodes)}"
    raise MalformedRoadmap(last_error)


def initial_progress(user_id: str, roadmap: CourseRoadmap, now: str | None = None) -> ProgressRecord:
    if validate_roadmap(roadmap):
        raise InvalidRoadmap("roadmap fails validation")
    states = {
        n.id: UNLOCKED if not n.prerequisites else LOCKED
        for n in roadmap.nodes
    }
    return ProgressRecord(
        user_id=user_id,
        course_id=roadmap.course_id,
        node_states=states,
        quiz_scores={},
        updated_at=now or utc_now(),
    )


def record_quiz_result(
    progress: ProgressRecord,
    roadmap: CourseRoadmap,
    node_id: str,
    score: float,
    pass_threshold: float,
    now: str | None = None,
) -> ProgressRecord:
    """Record a quiz score and propagate unlocks when the node passes."""
    if node_id not in progress.node_states:
        raise UnknownNode(node_id)
    state = progress.node_states[node_id]
    if state == LOCKED:
        raise NodeLocked(node_id)
    if not 0 <= score <= 1:
        raise ValueError(f"score must be in [0, 1], got {score}")
    states = dict(progress.node_states)
    scores = dict(progress.quiz_scores)
    scores[node_id] = score
    if score >= pass_threshold:
        states[node_id] = PASSED
        passed = {nid for nid, s in states.items() if s == PASSED}
        for n in roadmap.nodes:
            if states[n.id] == LOCKED and n.prerequisites <= passed:
                states[n.id] = UNLOCKED
    elif state == IN_PROGRESS:
        states[node_id] = UNLOCKED  # retake allowed
    return replace(progress, node_states=states, quiz_scores=scores,
                   updated_at=now or utc_now())


def mark_in_progress(progress: ProgressRecord, node_id: str, now: str | None = None) -> ProgressRecord:
    if node_id not in progress.node_states:
        raise UnknownNode(node_id)
    state = progress.node_states[node_id]
    if state == LOCKED:
        raise NodeLocked(node_id)
    if state == PASSED:
        return progress
    states = dict(progress.node_states)
    states[node_id] = IN_PROGRESS
    return replace(progress, node_states=states, updated_at=now or utc_now())


def available_nodes(progress: ProgressRecord) -> set[str]:
    """Node ids the user may work on right now."""
    return {
        nid for nid, state in progress.node_states.items()
        if state in (UNLOCKED, IN_PROGRESS)
    }
