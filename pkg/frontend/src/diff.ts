// Character-level diff between the graphemic source and the normalized
// target, plus marker classification for abbreviation-aware coloring.

import type { MarkerTable } from "./types.js";

export type ChunkType = "equal" | "replace" | "delete" | "insert";

export interface DiffChunk {
  type: ChunkType;
  a: string; // source side text ("" for inserts)
  b: string; // target side text ("" for deletes)
}

/**
 * Myers-flavored LCS diff over code points. Pair texts are bounded by the
 * pipeline (1000 source bytes), so the quadratic table stays small.
 */
export function diffChars(a: string, b: string): DiffChunk[] {
  const xs = Array.from(a);
  const ys = Array.from(b);
  const n = xs.length;
  const m = ys.length;
  const width = m + 1;
  const table = new Int32Array((n + 1) * width);
  for (let i = n - 1; i >= 0; i--) {
    for (let j = m - 1; j >= 0; j--) {
      table[i * width + j] =
        xs[i] === ys[j]
          ? table[(i + 1) * width + j + 1] + 1
          : Math.max(table[(i + 1) * width + j], table[i * width + j + 1]);
    }
  }
  const raw: { type: ChunkType; a: string; b: string }[] = [];
  let i = 0;
  let j = 0;
  const push = (type: ChunkType, ca: string, cb: string) => {
    const last = raw[raw.length - 1];
    if (last && last.type === type) {
      last.a += ca;
      last.b += cb;
    } else {
      raw.push({ type, a: ca, b: cb });
    }
  };
  while (i < n && j < m) {
    if (xs[i] === ys[j]) {
      push("equal", xs[i], ys[j]);
      i++;
      j++;
    } else if (table[(i + 1) * width + j] >= table[i * width + j + 1]) {
      push("delete", xs[i], "");
      i++;
    } else {
      push("insert", "", ys[j]);
      j++;
    }
  }
  while (i < n) {
    push("delete", xs[i], "");
    i++;
  }
  while (j < m) {
    push("insert", "", ys[j]);
    j++;
  }
  return mergeReplacements(raw);
}

/** Adjacent delete+insert runs render better as one replacement. */
function mergeReplacements(chunks: DiffChunk[]): DiffChunk[] {
  const out: DiffChunk[] = [];
  for (const chunk of chunks) {
    const last = out[out.length - 1];
    if (
      last &&
      last.type !== "equal" &&
      chunk.type !== "equal" &&
      last.type !== chunk.type
    ) {
      last.a += chunk.a;
      last.b += chunk.b;
      (last as { type: ChunkType }).type = "replace";
      continue;
    }
    out.push({ ...chunk });
  }
  return out;
}

export type MarkerPredicate = (ch: string) => boolean;

/** Compile the API's marker table into a code-point predicate. */
export function markerPredicate(table: MarkerTable): MarkerPredicate {
  const ranges = table.entries
    .map((e) => [parseInt(e.from, 16), parseInt(e.to, 16)] as const)
    .sort((p, q) => p[0] - q[0]);
  return (ch: string) => {
    const cp = ch.codePointAt(0);
    if (cp === undefined) return false;
    for (const [lo, hi] of ranges) {
      if (cp < lo) return false;
      if (cp <= hi) return true;
    }
    return false;
  };
}

export interface MarkedSpan {
  text: string;
  marker: boolean;
}

/** Split a run of characters into plain and abbreviation-marker spans. */
export function splitByMarkers(text: string, isMarker: MarkerPredicate): MarkedSpan[] {
  const spans: MarkedSpan[] = [];
  for (const ch of text) {
    const marker = isMarker(ch);
    const last = spans[spans.length - 1];
    if (last && last.marker === marker) {
      last.text += ch;
    } else {
      spans.push({ text: ch, marker });
    }
  }
  return spans;
}
