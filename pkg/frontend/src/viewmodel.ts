/** Pure view-model builders and reducers.
 *
 * Everything here is a projection of server payloads. Lock states, scores, and
 * unlock transitions are rendered from progress responses only — the client
 * never recomputes gating or grading. The one piece of client-side computation
 * is layout: assigning each roadmap node a row by prerequisite depth, which
 * affects pixels, not behavior.
 */

import type {
  Deck,
  DoubtExchange,
  Exam,
  GradeReport,
  NarrationSegment,
  NodeState,
  Progress,
  Quiz,
  Roadmap,
  Session,
} from "./types.js";

// ---------------------------------------------------------------------------
// Roadmap screen
// ---------------------------------------------------------------------------

export interface RoadmapNodeView {
  id: string;
  title: string;
  summary: string;
  state: NodeState;
  /** Only unlocked / in-progress nodes respond to clicks. */
  clickable: boolean;
  /** Row in the top-down layout: longest prerequisite chain length. */
  depth: number;
  /** Column within the row, stable alphabetical order. */
  column: number;
}

export interface RoadmapView {
  courseId: string;
  title: string;
  nodes: RoadmapNodeView[];
  rows: RoadmapNodeView[][];
}

function layoutDepths(roadmap: Roadmap): Map<string, number> {
  const prereqs = new Map(roadmap.nodes.map((n) => [n.id, n.prerequisites]));
  const depths = new Map<string, number>();
  const visit = (id: string): number => {
    const known = depths.get(id);
    if (known !== undefined) return known;
    const preds = prereqs.get(id) ?? [];
    const depth = preds.length === 0 ? 0 : 1 + Math.max(...preds.map(visit));
    depths.set(id, depth);
    return depth;
  };
  roadmap.nodes.forEach((n) => visit(n.id));
  return depths;
}

export function buildRoadmapView(roadmap: Roadmap, progress: Progress): RoadmapView {
  const depths = layoutDepths(roadmap);
  const nodes: RoadmapNodeView[] = roadmap.nodes.map((n) => {
    const state = progress.node_states[n.id] ?? "locked";
    return {
      id: n.id,
      title: n.title,
      summary: n.summary,
      state,
      clickable: state === "unlocked" || state === "in_progress",
      depth: depths.get(n.id) ?? 0,
      column: 0,
    };
  });
  const rows: RoadmapNodeView[][] = [];
  for (const node of nodes) {
    (rows[node.depth] ??= []).push(node);
  }
  rows.forEach((row) => {
    row.sort((a, b) => a.id.localeCompare(b.id));
    row.forEach((node, i) => {
      node.column = i;
    });
  });
  return { courseId: roadmap.course_id, title: roadmap.title, nodes, rows };
}

/** Gate for click handlers: returns the node id to start, or null when the
 * click must be swallowed without issuing any request. */
export function clickTarget(view: RoadmapView, nodeId: string): string | null {
  const node = view.nodes.find((n) => n.id === nodeId);
  return node && node.clickable ? node.id : null;
}

/** Nodes that became clickable between two progress snapshots — drives the
 * unlock animation. Purely a diff of server responses. */
export function newlyUnlocked(before: Progress, after: Progress): string[] {
  return Object.keys(after.node_states)
    .filter(
      (id) => after.node_states[id] === "unlocked" && before.node_states[id] === "locked",
    )
    .sort();
}

// ---------------------------------------------------------------------------
// Lesson player
// ---------------------------------------------------------------------------

export interface PlayerView {
  nodeId: string;
  slides: Deck["slides"];
  transcript: NarrationSegment[];
  /** 1-based segment/slide position, mirrored from the server session. */
  position: number;
  playing: boolean;
  /** True while the doubt chat is open and playback is held. */
  handRaised: boolean;
  finished: boolean;
  currentSlide: Deck["slides"][number] | null;
  currentSegment: NarrationSegment | null;
  /** Drives the avatar's speaking indicator. */
  speaking: boolean;
}

export function buildPlayerView(
  deck: Deck,
  narration: NarrationSegment[],
  session: Session,
): PlayerView {
  const position = session.position;
  return {
    nodeId: deck.node_id,
    slides: deck.slides,
    transcript: narration,
    position,
    playing: session.state === "playing",
    handRaised: session.state === "paused_for_doubt",
    finished: session.state === "finished",
    currentSlide: deck.slides[position - 1] ?? null,
    currentSegment: narration[position - 1] ?? null,
    speaking: session.state === "playing",
  };
}

/** Fold a fresh server session response into the view — the only way the
 * player's position or play state ever changes. */
export function applySession(view: PlayerView, session: Session): PlayerView {
  return {
    ...view,
    position: session.position,
    playing: session.state === "playing",
    handRaised: session.state === "paused_for_doubt",
    finished: session.state === "finished",
    currentSlide: view.slides[session.position - 1] ?? null,
    currentSegment: view.transcript[session.position - 1] ?? null,
    speaking: session.state === "playing",
  };
}

// ---------------------------------------------------------------------------
// Doubt chat
// ---------------------------------------------------------------------------

export interface ChatMessage {
  role: "student" | "tutor";
  text: string;
  /** 1-based source markers, e.g. "[1]", shown next to tutor answers. */
  sourceMarkers: string[];
  sources: string[];
}

export function buildChatView(exchanges: DoubtExchange[]): ChatMessage[] {
  const messages: ChatMessage[] = [];
  for (const ex of exchanges) {
    messages.push({ role: "student", text: ex.question, sourceMarkers: [], sources: [] });
    messages.push({
      role: "tutor",
      text: ex.answer,
      sourceMarkers: ex.sources.map((_, i) => `[${i + 1}]`),
      sources: ex.sources,
    });
  }
  return messages;
}

// ---------------------------------------------------------------------------
// Assessment screens
// ---------------------------------------------------------------------------

export interface QuizFormView {
  quizId: string;
  nodeId: string;
  items: { stem: string; options: string[]; selected: number | null }[];
  canSubmit: boolean;
}

export function buildQuizForm(quiz: Quiz): QuizFormView {
  return {
    quizId: quiz.quiz_id,
    nodeId: quiz.node_id,
    items: quiz.items.map((i) => ({ stem: i.stem, options: i.options, selected: null })),
    canSubmit: false,
  };
}

export function selectAnswer(form: QuizFormView, item: number, option: number): QuizFormView {
  const items = form.items.map((it, i) => (i === item ? { ...it, selected: option } : it));
  return { ...form, items, canSubmit: items.every((it) => it.selected !== null) };
}

export function selectedAnswers(form: QuizFormView): number[] {
  return form.items.map((it) => it.selected ?? -1);
}

export interface ExamFormView {
  examId: string;
  questions: { questionId: string; prompt: string; answer: string }[];
  canSubmit: boolean;
}

export function buildExamForm(exam: Exam): ExamFormView {
  return {
    examId: exam.exam_id,
    questions: exam.questions.map((q) => ({
      questionId: q.question_id,
      prompt: q.prompt,
      answer: "",
    })),
    canSubmit: false,
  };
}

export function typeAnswer(form: ExamFormView, index: number, answer: string): ExamFormView {
  const questions = form.questions.map((q, i) => (i === index ? { ...q, answer } : q));
  return { ...form, questions, canSubmit: questions.every((q) => q.answer.trim().length > 0) };
}

export interface GradeRowView {
  questionId: string;
  similarityPercent: string;
  passed: boolean;
  feedback: string;
}

export function buildGradeView(report: GradeReport): {
  rows: GradeRowView[];
  overallPercent: string;
  overallPassed: boolean;
  feedback: string;
} {
  return {
    rows: report.per_question.map((g) => ({
      questionId: g.question_id,
      similarityPercent: `${(g.similarity * 100).toFixed(1)}%`,
      passed: g.passed,
      feedback: g.feedback,
    })),
    overallPercent: `${(report.overall_score * 100).toFixed(1)}%`,
    overallPassed: report.overall_passed,
    feedback: report.feedback,
  };
}
