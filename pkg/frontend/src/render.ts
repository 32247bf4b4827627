/** Pure view-model builders, kept DOM-free so they are unit-testable. */

import type { InstanceView } from "./api.js";

/** One visual highlight; several instances can share an identical span
 *  (the same name can host more than one repair instance). */
export interface Highlight {
  start: number;
  end: number;
  instanceIds: number[];
}

export type Segment =
  | { kind: "text"; text: string }
  | { kind: "highlight"; text: string; highlight: Highlight };

/** Groups instances into non-overlapping highlights, sorted by start. */
export function buildHighlights(instances: InstanceView[]): Highlight[] {
  const bySpan = new Map<string, Highlight>();
  for (const inst of instances) {
    const key = `${inst.span.start}:${inst.span.end}`;
    const got = bySpan.get(key);
    if (got) {
      got.instanceIds.push(inst.id);
    } else {
      bySpan.set(key, {
        start: inst.span.start,
        end: inst.span.end,
        instanceIds: [inst.id],
      });
    }
  }
  return [...bySpan.values()].sort((a, b) => a.start - b.start);
}

/** Splits the source into plain and highlighted segments covering it
 *  exactly. Spans are expected non-overlapping once grouped. */
export function segmentSource(source: string, highlights: Highlight[]): Segment[] {
  const out: Segment[] = [];
  let cursor = 0;
  for (const h of highlights) {
    if (h.start < cursor || h.end > source.length || h.end <= h.start) {
      throw new Error(`bad span ${h.start}..${h.end}`);
    }
    if (h.start > cursor) {
      out.push({ kind: "text", text: source.slice(cursor, h.start) });
    }
    out.push({ kind: "highlight", text: source.slice(h.start, h.end), highlight: h });
    cursor = h.end;
  }
  if (cursor < source.length) {
    out.push({ kind: "text", text: source.slice(cursor) });
  }
  return out;
}

export interface CandidateRow {
  instanceId: number;
  bugType: string;
  candidateId: string;
  display: string;
}

/** Candidate rows for one activated highlight, in server order. */
export function candidateRows(
  instances: InstanceView[],
  highlight: Highlight,
): CandidateRow[] {
  const rows: CandidateRow[] = [];
  for (const id of highlight.instanceIds) {
    const inst = instances.find((i) => i.id === id);
    if (!inst) continue;
    for (const cand of inst.candidates) {
      rows.push({
        instanceId: inst.id,
        bugType: inst.bug_type,
        candidateId: cand.id,
        display: cand.display,
      });
    }
  }
  return rows;
}

export function formatAccuracy(correct: number, total: number): string {
  if (total === 0) return "n/a";
  return `${correct}/${total} (${((100 * correct) / total).toFixed(1)}%)`;
}
