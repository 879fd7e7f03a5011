"""Prompt construction for the generation backends.

Every prompt starts with a machine-readable header (task name + JSON
params) followed by free text for the model. The deterministic mock
backend dispatches on the header; real backends simply see the whole
prompt as text.
"""

from __future__ import annotations

import json

TASK_PREFIX = "#task="
PARAMS_PREFIX = "#params="


def build_prompt(task: str, params: dict, body: str = "") -> str:
    header = f"{TASK_PREFIX}{task}\n{PARAMS_PREFIX}{json.dumps(params, sort_keys=True)}"
    return header + ("\n" + body if body else "")


def parse_task(prompt: str) -> tuple[str, dict, str]:
    """Return (task, params, body); task is "" for untagged prompts."""
    lines = prompt.split("\n")
    if not lines or not lines[0].startswith(TASK_PREFIX):
        return "", {}, prompt
    task = lines[0][len(TASK_PREFIX):]
    params: dict = {}
    body_start = 1
    if len(lines) > 1 and lines[1].startswith(PARAMS_PREFIX):
        params = json.loads(lines[1][len(PARAMS_PREFIX):])
        body_start = 2
    return task, params, "\n".join(lines[body_start:])


def roadmap_prompt(title: str, syllabus: str | None, min_nodes: int, max_nodes: int) -> str:
    params = {"title": title, "syllabus": syllabus, "min_nodes": min_nodes, "max_nodes": max_nodes}
    body = (
        f"Design a prerequisite-ordered course roadmap for '{title}'. "
        "Reply with JSON: {\"course_id\": str, \"title\": str, \"nodes\": "
        "[{\"id\": str, \"title\": str, \"summary\": str, \"prerequisites\": [str]}]}."
    )
    if syllabus:
        body += f"\nSyllabus hints:\n{syllabus}"
    return build_prompt("roadmap", params, body)


def slides_prompt(node_title: str, ordinals: list[int], total_slides: int, context: str) -> str:
    params = {"node_title": node_title, "ordinals": ordinals, "total_slides": total_slides}
    body = (
        f"Write slides {ordinals[0]}..{ordinals[-1]} of {total_slides} for the topic "
        f"'{node_title}'. Reply with JSON: {{\"slides\": [{{\"ordinal\": int, "
        "\"title\": str, \"bullets\": [str], \"body\": str}]}."
    )
    if context:
        body += f"\nReference material:\n{context}"
    return build_prompt("slides", params, body)


def summarize_prompt(text: str, max_chars: int) -> str:
    params = {"max_chars": max_chars}
    body = f"Summarize into a spoken script of at most {max_chars} characters:\n{text}"
    return build_prompt("summarize", params, body)


def doubt_prompt(question: str, context: str, max_chars: int) -> str:
    params = {"max_chars": max_chars}
    body = f"Answer the student's question in at most {max_chars} characters.\n{context}\nQuestion: {question}"
    return build_prompt("doubt", params, body)


def quiz_prompt(node_title: str, n_items: int, deck_text: str) -> str:
    params = {"node_title": node_title, "n_items": n_items}
    body = (
        f"Write {n_items} multiple-choice questions covering only the lecture below. "
        "Reply with JSON: {\"items\": [{\"stem\": str, \"options\": [4 strings], "
        "\"correct_index\": int}]}.\n" + deck_text
    )
    return build_prompt("quiz", params, body)


def notes_prompt(node_title: str, deck_text: str) -> str:
    params = {"node_title": node_title}
    body = (
        f"Write revision question/answer pairs for '{node_title}'. "
        "Reply with JSON: {\"qa\": [{\"q\": str, \"a\": str}]}.\n" + deck_text
    )
    return build_prompt("notes", params, body)


def exam_question_prompt(node_title: str, deck_text: str, index: int) -> str:
    params = {"node_title": node_title, "index": index}
    body = (
        f"Write one long-answer exam question (variant {index}) on '{node_title}' "
        "with a model answer. Reply with JSON: {\"prompt\": str, \"reference_answer\": str}.\n"
        + deck_text
    )
    return build_prompt("exam_question", params, body)


def feedback_prompt(question: str, student_answer: str, reference: str, similarity: float) -> str:
    params = {"similarity": round(similarity, 6)}
    body = (
        "Give brief feedback on this exam answer.\n"
        f"Question: {question}\nStudent answer: {student_answer}\nModel answer: {reference}"
    )
    return build_prompt("feedback", params, body)
