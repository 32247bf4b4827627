/** Session state machine: one selection per task, client-side timing. */

import { ApiClient, Mode, SessionDone, TaskView } from "./api.js";

export type Phase = "idle" | "task" | "submitting" | "finished";

export interface SessionState {
  phase: Phase;
  sessionId: string | null;
  task: TaskView | null;
  answered: number;
  taskCount: number;
}

export class SessionController {
  private state: SessionState = {
    phase: "idle",
    sessionId: null,
    task: null,
    answered: 0,
    taskCount: 0,
  };
  private taskShownAt = 0;
  private submittedFor = new Set<number>();

  constructor(
    private readonly api: ApiClient,
    private readonly now: () => number = () => Date.now(),
  ) {}

  snapshot(): SessionState {
    return { ...this.state };
  }

  async start(mode: Mode, n: number): Promise<SessionState> {
    const sessionId = await this.api.newSession(mode, n);
    this.state = { phase: "idle", sessionId, task: null, answered: 0, taskCount: n };
    this.submittedFor.clear();
    return this.loadTask();
  }

  async loadTask(): Promise<SessionState> {
    if (!this.state.sessionId) throw new Error("no active session");
    const view = await this.api.task(this.state.sessionId);
    if ((view as SessionDone).done) {
      this.state = { ...this.state, phase: "finished", task: null };
    } else {
      const task = view as TaskView;
      this.state = {
        ...this.state,
        phase: "task",
        task,
        taskCount: task.task_count,
        answered: task.task_index,
      };
      this.taskShownAt = this.now();
    }
    return this.snapshot();
  }

  /** Submits exactly one answer for the open task; repeats are refused
   *  locally before they ever reach the server. */
  async submit(instanceId: number, candidateId: string): Promise<SessionState> {
    const { sessionId, task, phase } = this.state;
    if (!sessionId || !task || phase !== "task") {
      throw new Error("no open task");
    }
    if (this.submittedFor.has(task.task_index)) {
      throw new Error("task already answered");
    }
    this.state = { ...this.state, phase: "submitting" };
    const elapsed = this.now() - this.taskShownAt;
    await this.api.answer(sessionId, task.task_index, instanceId, candidateId, elapsed);
    this.submittedFor.add(task.task_index);
    return this.loadTask();
  }

  async summary() {
    if (!this.state.sessionId) throw new Error("no active session");
    return this.api.summary(this.state.sessionId);
  }
}
