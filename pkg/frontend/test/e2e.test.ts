/** End-to-end tests against the real HTTP service running with deterministic
 * mock model backends.
 *
 * - Replay property: a scripted session (open course, pass one quiz, ask one
 *   doubt, submit the exam) is recorded as raw HTTP calls; replaying those
 *   calls against a fresh server reproduces the same server-side state, and
 *   the lock states the UI renders match GET progress at every step. This is
 *   what "no gating/grading logic client-side" means operationally.
 * - Interrupt flow: raise-hand pauses at the current segment, the doubt answer
 *   carries source markers, and resume continues at the same segment.
 *
 * Quiz answer keys are read from the server's on-disk admin store by the test
 * harness (never by the client); with seeded mocks both servers generate the
 * same papers, so the recorded submissions stay valid on replay.
 */

import { type ChildProcess, spawn } from "node:child_process";
import { readFileSync, readdirSync, rmSync, statSync } from "node:fs";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { writeFileSync } from "node:fs";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { buildChatView, buildPlayerView, buildRoadmapView } from "../src/viewmodel.js";
import type { Progress, Roadmap } from "../src/types.js";

interface Server {
  proc: ChildProcess;
  baseUrl: string;
  storeRoot: string;
}

const workDir = mkdtempSync(join(tmpdir(), "study-ui-e2e-"));
const servers: Server[] = [];

async function startServer(name: string, port: number): Promise<Server> {
  const storeRoot = join(workDir, `${name}-store`);
  const configPath = join(workDir, `${name}-config.json`);
  writeFileSync(
    configPath,
    JSON.stringify({ listen: `127.0.0.1:${port}`, store_root: storeRoot, seed: 7 }),
  );
  const proc = spawn("autodidact", ["serve", "--config", configPath], {
    stdio: ["ignore", "ignore", "pipe"],
  });
  let stderr = "";
  proc.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });
  const baseUrl = `http://127.0.0.1:${port}`;
  for (let attempt = 0; attempt < 200; attempt++) {
    if (proc.exitCode !== null) {
      throw new Error(`server ${name} exited early:\n${stderr}`);
    }
    try {
      await fetch(`${baseUrl}/courses/probe/roadmap`);
      const server = { proc, baseUrl, storeRoot };
      servers.push(server);
      return server;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 100));
    }
  }
  throw new Error(`server ${name} never became reachable:\n${stderr}`);
}

afterAll(() => {
  for (const server of servers) server.proc.kill("SIGTERM");
  rmSync(workDir, { recursive: true, force: true });
});

/** Answer key for a quiz, read from the server's admin store on disk. */
function answerKey(storeRoot: string, userId: string, quizId: string): number[] {
  const file = join(storeRoot, "datasets", `quiz__${userId}__${quizId}.json`);
  const doc = JSON.parse(readFileSync(file, "utf-8"));
  return doc.items.map((item: { correct_index: number }) => item.correct_index);
}

/** Strip volatile wall-clock fields so two servers written at different times
 * can be compared structurally. */
function normalize(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(normalize);
  if (value && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const [key, inner] of Object.entries(value)) {
      if (key === "at" || key.endsWith("_at")) continue;
      out[key] = normalize(inner);
    }
    return out;
  }
  return value;
}

function snapshotStore(storeRoot: string): Record<string, unknown> {
  const snapshot: Record<string, unknown> = {};
  const walk = (dir: string, prefix: string) => {
    for (const entry of readdirSync(dir).sort()) {
      const full = join(dir, entry);
      if (statSync(full).isDirectory()) {
        walk(full, `${prefix}${entry}/`);
      } else if (entry.endsWith(".jsonl")) {
        snapshot[prefix + entry] = readFileSync(full, "utf-8")
          .split("\n")
          .filter((line) => line.trim())
          .map((line) => normalize(JSON.parse(line)));
      } else if (entry.endsWith(".json")) {
        snapshot[prefix + entry] = normalize(JSON.parse(readFileSync(full, "utf-8")));
      }
    }
  };
  walk(storeRoot, "");
  return snapshot;
}

function expectUiMatchesProgress(roadmap: Roadmap, progress: Progress): void {
  const view = buildRoadmapView(roadmap, progress);
  for (const node of view.nodes) {
    expect(node.state).toBe(progress.node_states[node.id]);
    expect(node.clickable).toBe(
      progress.node_states[node.id] === "unlocked" ||
        progress.node_states[node.id] === "in_progress",
    );
  }
}

const USER = "student-1";

/** The scripted browser session. Asserts UI/lock-state agreement at every
 * step; returns ids the assertions outside need. */
async function scriptedSession(server: Server) {
  const api = new ApiClient(server.baseUrl, true);
  const roadmap = await api.createCourse("Binary Search");
  let progress = await api.getProgress(USER, roadmap.course_id);
  expectUiMatchesProgress(roadmap, progress);

  // pass every node (the exam requires course completion); the first node is
  // "pass one quiz" of the scripted flow, the rest unlock the exam
  const passed = new Set<string>();
  let firstQuizResult: { score: number; passed: boolean } | null = null;
  while (passed.size < roadmap.nodes.length) {
    for (const node of roadmap.nodes) {
      if (passed.has(node.id)) continue;
      if (progress.node_states[node.id] !== "unlocked") continue;
      await api.startNode(USER, node.id);
      const quiz = await api.createQuiz(USER, node.id);
      const result = await api.submitQuiz(
        quiz.quiz_id,
        USER,
        answerKey(server.storeRoot, USER, quiz.quiz_id),
      );
      expect(result.passed).toBe(true);
      firstQuizResult ??= result;
      progress = result.progress;
      expectUiMatchesProgress(roadmap, progress);
      passed.add(node.id);
    }
  }

  // ask one doubt inside a narrated session on the first node
  const firstNode = roadmap.nodes.find((n) => n.prerequisites.length === 0)!;
  await api.openSession(USER, firstNode.id);
  await api.interrupt(USER, firstNode.id);
  const doubt = await api.askDoubt(USER, firstNode.id, "Why halve the interval?");
  expect(doubt.answer.length).toBeGreaterThan(0);
  await api.resume(USER, firstNode.id);

  // sit the final exam
  const exam = await api.createExam(USER, roadmap.course_id);
  const report = await api.submitExam(
    exam.exam_id,
    exam.questions.map((q) => `My understanding of ${q.prompt}`),
  );
  expect(report.per_question).toHaveLength(exam.questions.length);

  progress = await api.getProgress(USER, roadmap.course_id);
  expectUiMatchesProgress(roadmap, progress);
  return { api, roadmap, progress };
}

describe("replay property", () => {
  it("recorded UI calls replayed on a fresh server reproduce identical state", async () => {
    const original = await startServer("original", 8931);
    const fresh = await startServer("fresh", 8932);

    const { api } = await scriptedSession(original);
    expect(api.calls.length).toBeGreaterThan(10);

    const replayer = new ApiClient(fresh.baseUrl);
    await replayer.replay(api.calls);

    expect(snapshotStore(fresh.storeRoot)).toEqual(snapshotStore(original.storeRoot));
  });
});

describe("interrupt flow", () => {
  it("raise-hand pauses at the current segment, sourced answer, resume in place", async () => {
    const server = await startServer("interrupt", 8933);
    const api = new ApiClient(server.baseUrl);
    const roadmap = await api.createCourse("Sorting Algorithms");
    const root = roadmap.nodes.find((n) => n.prerequisites.length === 0)!;
    const deck = await api.startNode(USER, root.id);
    const narration = await api.getNarration(USER, root.id);
    expect(narration).toHaveLength(deck.slides.length);

    let session = await api.openSession(USER, root.id);
    session = await api.advance(USER, root.id);
    session = await api.advance(USER, root.id);
    let player = buildPlayerView(deck, narration, session);
    expect(player.position).toBe(3);
    expect(player.playing).toBe(true);

    // raise hand: playback holds at segment 3 and the chat opens
    session = await api.interrupt(USER, root.id);
    player = buildPlayerView(deck, narration, session);
    expect(player.handRaised).toBe(true);
    expect(player.position).toBe(3);

    const doubt = await api.askDoubt(USER, root.id, "What does a pivot do?");
    const chat = buildChatView([doubt]);
    expect(chat[1]?.sourceMarkers.length).toBeGreaterThan(0);
    expect(chat[1]?.sources.length).toBe(chat[1]?.sourceMarkers.length);

    // resume continues at the same segment
    session = await api.resume(USER, root.id);
    player = buildPlayerView(deck, narration, session);
    expect(player.playing).toBe(true);
    expect(player.position).toBe(3);
    expect(player.currentSegment?.slide_ordinal).toBe(3);
  });

  it("the markdown download equals the API export byte for byte", async () => {
    const server = servers.find((s) => s.baseUrl.endsWith("8933"))!;
    const api = new ApiClient(server.baseUrl);
    const roadmap = await api.getProgress(USER, "sorting-algorithms");
    const nodeId = Object.keys(roadmap.node_states).find(
      (id) => roadmap.node_states[id] !== "locked",
    )!;
    const first = await api.exportDeck(USER, nodeId, "markdown");
    const second = await api.exportDeck(USER, nodeId, "markdown");
    expect(first).toContain("## ");
    expect(second).toBe(first);
  });
});
