/** Typed client over the teaching-engine HTTP API.
 *
 * Every mutating call the UI makes goes through this client, and the client can
 * record its calls; replaying the recorded calls against a fresh server must
 * reproduce the same server-side state, which is how we verify the UI holds no
 * gating/grading logic of its own.
 */

import type {
  Deck,
  DoubtExchange,
  Exam,
  GradeReport,
  NarrationSegment,
  Progress,
  Quiz,
  QuizResult,
  Roadmap,
  Session,
} from "./types.js";

export interface RecordedCall {
  method: "GET" | "POST";
  path: string;
  body?: unknown;
}

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    public readonly detail: string,
  ) {
    super(`${code} (${status}): ${detail}`);
  }
}

export class ApiClient {
  readonly calls: RecordedCall[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly record = false,
  ) {}

  private async request<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<T> {
    if (this.record) {
      this.calls.push(body === undefined ? { method, path } : { method, path, body });
    }
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    if (!resp.ok) {
      let code = "HttpError";
      let detail = text;
      try {
        const doc = JSON.parse(text);
        code = doc.error ?? code;
        detail = doc.detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiRequestError(resp.status, code, detail);
    }
    const contentType = resp.headers.get("content-type") ?? "";
    return (contentType.includes("json") ? JSON.parse(text) : text) as T;
  }

  /** Replay a recorded call list verbatim against this client's server. */
  async replay(calls: RecordedCall[]): Promise<void> {
    for (const call of calls) {
      await this.request(call.method, call.path, call.body);
    }
  }

  createCourse(title: string, syllabus?: string): Promise<Roadmap> {
    return this.request("POST", "/courses", { title, syllabus: syllabus ?? null });
  }

  getRoadmap(courseId: string): Promise<Roadmap> {
    return this.request("GET", `/courses/${courseId}/roadmap`);
  }

  getProgress(userId: string, courseId: string): Promise<Progress> {
    return this.request("GET", `/users/${userId}/courses/${courseId}/progress`);
  }

  startNode(userId: string, nodeId: string): Promise<Deck> {
    return this.request("POST", `/users/${userId}/nodes/${nodeId}/start`);
  }

  getDeck(userId: string, nodeId: string): Promise<Deck> {
    return this.request("GET", `/users/${userId}/nodes/${nodeId}/deck`);
  }

  exportDeck(userId: string, nodeId: string, format: "json" | "markdown"): Promise<string> {
    return this.request("GET", `/users/${userId}/nodes/${nodeId}/deck/export?format=${format}`);
  }

  async getNarration(userId: string, nodeId: string): Promise<NarrationSegment[]> {
    const doc = await this.request<{ segments: NarrationSegment[] }>(
      "GET",
      `/users/${userId}/nodes/${nodeId}/narration`,
    );
    return doc.segments;
  }

  openSession(userId: string, nodeId: string): Promise<Session> {
    return this.request("POST", `/users/${userId}/nodes/${nodeId}/session/open`);
  }

  interrupt(userId: string, nodeId: string, trigger = "ui_button"): Promise<Session> {
    return this.request(
      "POST",
      `/users/${userId}/nodes/${nodeId}/session/interrupt?trigger=${trigger}`,
    );
  }

  resume(userId: string, nodeId: string): Promise<Session> {
    return this.request("POST", `/users/${userId}/nodes/${nodeId}/session/resume`);
  }

  advance(userId: string, nodeId: string): Promise<Session> {
    return this.request("POST", `/users/${userId}/nodes/${nodeId}/session/advance`);
  }

  askDoubt(userId: string, nodeId: string, question: string, channel = "chat"): Promise<DoubtExchange> {
    return this.request("POST", `/users/${userId}/nodes/${nodeId}/doubt`, { question, channel });
  }

  createQuiz(userId: string, nodeId: string, nItems = 5): Promise<Quiz> {
    return this.request("POST", `/users/${userId}/nodes/${nodeId}/quiz`, { n_items: nItems });
  }

  submitQuiz(quizId: string, userId: string, answers: number[]): Promise<QuizResult> {
    return this.request("POST", `/quizzes/${quizId}/submit`, { user_id: userId, answers });
  }

  getNotes(courseId: string, userId: string): Promise<unknown> {
    return this.request("GET", `/courses/${courseId}/notes?user=${userId}`);
  }

  createExam(userId: string, courseId: string, nQuestions = 4): Promise<Exam> {
    return this.request("POST", `/users/${userId}/courses/${courseId}/exam`, {
      n_questions: nQuestions,
    });
  }

  submitExam(examId: string, answers: string[]): Promise<GradeReport> {
    return this.request("POST", `/exams/${examId}/submit`, { answers });
  }
}
