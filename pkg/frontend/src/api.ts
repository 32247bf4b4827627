/** Typed client for the repair-evaluation HTTP API. */

export type Mode = "full" | "top4";

export interface Candidate {
  id: string;
  display: string;
}

export interface InstanceView {
  id: number;
  location: number;
  bug_type: string;
  span: { start: number; end: number };
  candidates: Candidate[];
}

export interface TaskView {
  done: false;
  task_index: number;
  task_count: number;
  source: string;
  instances: InstanceView[];
}

export interface SessionDone {
  done: true;
  task_index: number;
  task_count: number;
}

export interface AnswerResult {
  correct: boolean;
  task_index: number;
}

export interface SummaryRecord {
  task_index: number;
  instance: number;
  candidate: string;
  elapsed_ms: number;
  correct: boolean;
}

export interface Summary {
  session: string;
  mode: Mode;
  answered: number;
  task_count: number;
  correct: number;
  accuracy: number | null;
  records: SummaryRecord[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = (i, init) => fetch(i, init),
    private readonly base: string = "",
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(this.base + path);
    if (!res.ok) {
      throw new ApiError(res.status, await res.text());
    }
    return (await res.json()) as T;
  }

  async newSession(mode: Mode, n: number): Promise<string> {
    const body = await this.get<{ session: string }>(
      `/api/session/new?mode=${mode}&n=${n}`,
    );
    return body.session;
  }

  async task(session: string): Promise<TaskView | SessionDone> {
    return this.get<TaskView | SessionDone>(`/api/session/${session}/task`);
  }

  async answer(
    session: string,
    taskIndex: number,
    instance: number,
    candidate: string,
    elapsedMs: number,
  ): Promise<AnswerResult> {
    const res = await this.fetchImpl(`${this.base}/api/session/${session}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        instance,
        candidate,
        elapsed_ms: Math.round(elapsedMs),
        task_index: taskIndex,
      }),
    });
    if (!res.ok) {
      throw new ApiError(res.status, await res.text());
    }
    return (await res.json()) as AnswerResult;
  }

  async summary(session: string): Promise<Summary> {
    return this.get<Summary>(`/api/session/${session}/summary`);
  }
}
