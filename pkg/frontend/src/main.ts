/** DOM wiring for the repair-evaluation console. */

import { ApiClient, InstanceView, Mode, Summary } from "./api.js";
import {
  buildHighlights,
  candidateRows,
  formatAccuracy,
  Highlight,
  segmentSource,
} from "./render.js";
import { SessionController, SessionState } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ConsoleApp {
  private controller: SessionController;
  private selected: { instanceId: number; candidateId: string } | null = null;

  constructor(
    private readonly root: HTMLElement,
    api: ApiClient = new ApiClient(),
  ) {
    this.controller = new SessionController(api);
  }

  renderStart(): void {
    this.root.replaceChildren();
    const panel = el("div", "panel");
    panel.append(el("h1", undefined, "Semantic repair console"));
    panel.append(
      el(
        "p",
        "hint",
        "Each task shows a snippet with one seeded bug. Click a highlighted " +
          "location, pick the repair you believe is correct, then submit.",
      ),
    );
    const modeSel = el("select");
    for (const m of ["top4", "full"] as Mode[]) {
      const opt = el("option", undefined, m);
      opt.value = m;
      modeSel.append(opt);
    }
    const countInput = el("input");
    countInput.type = "number";
    countInput.value = "10";
    countInput.min = "1";
    const startBtn = el("button", "primary", "Start session");
    startBtn.addEventListener("click", () => {
      const n = Math.max(1, Number(countInput.value) || 10);
      void this.run(modeSel.value as Mode, n);
    });
    const row = el("div", "controls");
    row.append("Mode: ", modeSel, " Tasks: ", countInput, startBtn);
    panel.append(row);
    this.root.append(panel);
  }

  private async run(mode: Mode, n: number): Promise<void> {
    try {
      const state = await this.controller.start(mode, n);
      this.renderState(state);
    } catch (err) {
      this.renderError(err);
    }
  }

  private renderState(state: SessionState): void {
    if (state.phase === "finished") {
      void this.renderSummary();
      return;
    }
    if (state.phase === "task" && state.task) {
      this.renderTask(state);
    }
  }

  private renderTask(state: SessionState): void {
    const task = state.task!;
    this.selected = null;
    this.root.replaceChildren();
    const panel = el("div", "panel");
    panel.append(
      el("div", "progress", `Task ${task.task_index + 1} of ${task.task_count}`),
    );

    const highlights = buildHighlights(task.instances);
    const pre = el("pre", "source");
    const candidatePane = el("div", "candidates");
    candidatePane.append(el("p", "hint", "Click a highlighted location."));

    for (const seg of segmentSource(task.source, highlights)) {
      if (seg.kind === "text") {
        pre.append(document.createTextNode(seg.text));
      } else {
        const mark = el("span", "mark", seg.text);
        mark.addEventListener("click", () => {
          for (const m of pre.querySelectorAll(".mark.active")) {
            m.classList.remove("active");
          }
          mark.classList.add("active");
          this.renderCandidates(candidatePane, task.instances, seg.highlight);
        });
        pre.append(mark);
      }
    }

    const submit = el("button", "primary", "Submit");
    submit.disabled = true;
    submit.addEventListener("click", () => {
      if (!this.selected) return;
      submit.disabled = true;
      void this.controller
        .submit(this.selected.instanceId, this.selected.candidateId)
        .then((next) => this.renderState(next))
        .catch((err) => this.renderError(err));
    });

    candidatePane.addEventListener("candidate-picked", () => {
      submit.disabled = this.selected === null;
    });

    panel.append(pre, candidatePane, submit);
    this.root.append(panel);
  }

  private renderCandidates(
    pane: HTMLElement,
    instances: InstanceView[],
    highlight: Highlight,
  ): void {
    pane.replaceChildren();
    this.selected = null;
    const rows = candidateRows(instances, highlight);
    for (const row of rows) {
      const label = el("label", "candidate");
      const radio = el("input");
      radio.type = "radio";
      radio.name = "candidate";
      radio.addEventListener("change", () => {
        this.selected = { instanceId: row.instanceId, candidateId: row.candidateId };
        pane.dispatchEvent(new Event("candidate-picked", { bubbles: true }));
      });
      label.append(radio, ` [${row.bugType}] ${row.display}`);
      pane.append(label);
    }
    pane.dispatchEvent(new Event("candidate-picked", { bubbles: true }));
  }

  private async renderSummary(): Promise<void> {
    let summary: Summary;
    try {
      summary = await this.controller.summary();
    } catch (err) {
      this.renderError(err);
      return;
    }
    this.root.replaceChildren();
    const panel = el("div", "panel");
    panel.append(el("h1", undefined, "Session complete"));
    panel.append(
      el(
        "p",
        "score",
        `Accuracy: ${formatAccuracy(summary.correct, summary.answered)}`,
      ),
    );
    const list = el("ol", "records");
    for (const rec of summary.records) {
      list.append(
        el(
          "li",
          rec.correct ? "ok" : "miss",
          `task ${rec.task_index + 1}: ${rec.correct ? "correct" : "missed"} ` +
            `(${(rec.elapsed_ms / 1000).toFixed(1)}s)`,
        ),
      );
    }
    panel.append(list);
    const again = el("button", "primary", "New session");
    again.addEventListener("click", () => this.renderStart());
    panel.append(again);
    this.root.append(panel);
  }

  private renderError(err: unknown): void {
    const msg = err instanceof Error ? err.message : String(err);
    const box = el("div", "error", `Something went wrong: ${msg}`);
    this.root.prepend(box);
  }
}

const mount = document.getElementById("app");
if (mount) {
  new ConsoleApp(mount).renderStart();
}
