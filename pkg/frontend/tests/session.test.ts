import { describe, expect, it } from "vitest";
import { ApiClient, ApiError, TaskView } from "../src/api.js";
import { SessionController } from "../src/session.js";
import { FakeServer } from "./fake_server.js";

function setup(n: number) {
  const server = new FakeServer(n);
  const api = new ApiClient(server.fetchLike());
  let clock = 1000;
  const controller = new SessionController(api, () => (clock += 250));
  return { server, api, controller };
}

describe("ApiClient", () => {
  it("round-trips a session through the wire format", async () => {
    const { api } = setup(2);
    const sid = await api.newSession("top4", 2);
    const task = (await api.task(sid)) as TaskView;
    expect(task.done).toBe(false);
    expect(task.instances[0].candidates.map((c) => c.id)).toEqual(["0:0", "0:1"]);

    const result = await api.answer(sid, 0, 0, "0:1", 730);
    expect(result).toEqual({ correct: true, task_index: 0 });
  });

  it("surfaces server errors with their status code", async () => {
    const { api } = setup(1);
    const sid = await api.newSession("top4", 1);
    await expect(api.answer(sid, 5, 0, "0:1", 10)).rejects.toMatchObject({
      status: 409,
    });
    await expect(api.answer(sid, 5, 0, "0:1", 10)).rejects.toBeInstanceOf(ApiError);
  });
});

describe("SessionController", () => {
  it("walks a session to completion and reports progress", async () => {
    const { controller } = setup(3);
    let state = await controller.start("top4", 3);
    expect(state.phase).toBe("task");
    expect(state.taskCount).toBe(3);

    state = await controller.submit(0, "0:1");
    expect(state.task?.task_index).toBe(1);
    state = await controller.submit(0, "0:0");
    state = await controller.submit(0, "0:1");
    expect(state.phase).toBe("finished");

    const summary = await controller.summary();
    expect(summary.answered).toBe(3);
    expect(summary.correct).toBe(2);
    expect(summary.records.map((r) => r.correct)).toEqual([true, false, true]);
  });

  it("measures elapsed time from task display to submission", async () => {
    const { server, controller } = setup(1);
    await controller.start("top4", 1);
    await controller.submit(0, "0:1");
    const sent = server.answers[0].elapsed_ms as number;
    expect(sent).toBeGreaterThan(0);
    expect(Number.isInteger(sent)).toBe(true);
  });

  it("refuses a second submission for the same task locally", async () => {
    const { server, controller } = setup(2);
    await controller.start("top4", 2);
    const first = controller.submit(0, "0:1");
    await expect(controller.submit(0, "0:0")).rejects.toThrow(/no open task/);
    await first;
    expect(server.answers).toHaveLength(1);
  });

  it("sends the task index so stale submissions are rejected upstream", async () => {
    const { server, controller } = setup(2);
    await controller.start("top4", 2);
    await controller.submit(0, "0:1");
    expect(server.answers[0].task_index).toBe(0);
  });

  it("rejects submissions before a session starts", async () => {
    const { controller } = setup(1);
    await expect(controller.submit(0, "0:0")).rejects.toThrow(/no open task/);
  });

  it("never exposes the correct answer in the task payload", async () => {
    const { controller } = setup(1);
    const state = await controller.start("top4", 1);
    const text = JSON.stringify(state.task);
    expect(text).not.toMatch(/correct/i);
    expect(text).not.toMatch(/reference/i);
  });
});
