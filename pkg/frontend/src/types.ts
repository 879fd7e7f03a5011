/** Payload shapes of the teaching-engine HTTP API, mirrored verbatim. */

export interface RoadmapNode {
  id: string;
  title: string;
  summary: string;
  prerequisites: string[];
}

export interface Roadmap {
  course_id: string;
  title: string;
  nodes: RoadmapNode[];
}

export type NodeState = "locked" | "unlocked" | "in_progress" | "passed";

export interface Progress {
  user_id: string;
  course_id: string;
  node_states: Record<string, NodeState>;
  quiz_scores: Record<string, number>;
  updated_at: string;
  /** Server-computed convenience list; the client never derives it. */
  available: string[];
}

export interface Slide {
  ordinal: number;
  title: string;
  bullets: string[];
  notes: string;
}

export interface Deck {
  node_id: string;
  user_id: string;
  slides: Slide[];
  content_hash: string;
  frozen: boolean;
}

export interface NarrationSegment {
  slide_ordinal: number;
  summary_text: string;
  audio_ref: string | null;
  est_duration_ms: number;
}

export type SessionState = "idle" | "playing" | "paused_for_doubt" | "finished";

export interface DoubtExchange {
  question: string;
  channel: string;
  answer: string;
  sources: string[];
  asked_at: string;
}

export interface Session {
  session_id: string;
  user_id: string;
  node_id: string;
  state: SessionState;
  position: number;
  segment_count: number;
  transcript: DoubtExchange[];
}

export interface QuizItem {
  stem: string;
  options: string[];
}

export interface Quiz {
  quiz_id: string;
  node_id: string;
  items: QuizItem[];
  pass_threshold: number;
}

export interface QuizResult {
  score: number;
  passed: boolean;
  progress: Progress;
}

export interface ExamQuestion {
  question_id: string;
  prompt: string;
}

export interface Exam {
  exam_id: string;
  questions: ExamQuestion[];
}

export interface QuestionGrade {
  question_id: string;
  similarity: number;
  passed: boolean;
  feedback: string;
}

export interface GradeReport {
  per_question: QuestionGrade[];
  overall_score: number;
  overall_passed: boolean;
  feedback: string;
}

export interface ApiError {
  error: string;
  detail: string;
}
