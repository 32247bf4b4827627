/** In-memory stand-in for the evaluation API, driving the fetch-shaped
 *  client without a network. Mirrors the server's status codes. */

import type { FetchLike, TaskView } from "../src/api.js";

export interface FakeTask {
  view: Omit<TaskView, "done" | "task_index" | "task_count">;
  correctInstance: number;
  correctCandidate: string;
}

export function makeTask(index: number): FakeTask {
  const source = `def probe_${index}(self, items):\n    return len(items)\n`;
  const start = source.indexOf("items)");
  return {
    view: {
      source,
      instances: [
        {
          id: 0,
          location: 11,
          bug_type: "VarReplace",
          span: { start, end: start + 5 },
          candidates: [
            { id: "0:0", display: "items -> self" },
            { id: "0:1", display: "items -> values" },
          ],
        },
      ],
    },
    correctInstance: 0,
    correctCandidate: "0:1",
  };
}

export class FakeServer {
  answers: Array<Record<string, unknown>> = [];
  private tasks: FakeTask[] = [];
  private cursor = 0;
  private sessionId = "sess-test";

  constructor(private readonly n: number) {
    for (let i = 0; i < n; i++) this.tasks.push(makeTask(i));
  }

  fetchLike(): FetchLike {
    return async (input, init) => {
      const url = new URL(input, "http://fake");
      return this.route(url, init);
    };
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private route(url: URL, init?: RequestInit): Response {
    const p = url.pathname;
    if (p === "/api/session/new") {
      return this.json({ session: this.sessionId });
    }
    if (p === `/api/session/${this.sessionId}/task`) {
      if (this.cursor >= this.n) {
        return this.json({ done: true, task_index: this.cursor, task_count: this.n });
      }
      return this.json({
        done: false,
        task_index: this.cursor,
        task_count: this.n,
        ...this.tasks[this.cursor].view,
      });
    }
    if (p === `/api/session/${this.sessionId}/answer`) {
      if (this.cursor >= this.n) return this.json({ detail: "done" }, 409);
      const body = JSON.parse(String(init?.body));
      if (body.task_index !== this.cursor) {
        return this.json({ detail: "stale task" }, 409);
      }
      const task = this.tasks[this.cursor];
      const correct =
        body.instance === task.correctInstance &&
        body.candidate === task.correctCandidate;
      this.answers.push({ ...body, correct });
      this.cursor += 1;
      return this.json({ correct, task_index: body.task_index });
    }
    if (p === `/api/session/${this.sessionId}/summary`) {
      const correct = this.answers.filter((a) => a.correct).length;
      return this.json({
        session: this.sessionId,
        mode: "top4",
        answered: this.answers.length,
        task_count: this.n,
        correct,
        accuracy: this.answers.length ? correct / this.answers.length : null,
        records: this.answers.map((a, i) => ({
          task_index: i,
          instance: a.instance,
          candidate: a.candidate,
          elapsed_ms: a.elapsed_ms,
          correct: a.correct,
        })),
      });
    }
    return this.json({ detail: "not found" }, 404);
  }
}
