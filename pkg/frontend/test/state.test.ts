import { describe, expect, it } from "vitest";

import {
  StaleItemError,
  applyOptimistic,
  current,
  emptyQueue,
  indexOf,
  loadedQueue,
  move,
  rollback,
} from "../src/state.js";
import type { PairView } from "../src/types.js";

function pair(id: string, status: PairView["status"] = "pending"): PairView {
  return {
    pair_id: id,
    source: `src ${id}`,
    target: `tgt ${id}`,
    original_source: `src ${id}`,
    original_target: `tgt ${id}`,
    status,
    language: "lat",
    match_rate: 0.9,
    lineage: {},
    notes: null,
    annotator: null,
    decided_at: null,
  };
}

describe("queue state", () => {
  it("starts done when nothing is pending", () => {
    expect(emptyQueue().done).toBe(true);
    expect(loadedQueue([]).done).toBe(true);
  });

  it("keeps sampling order and a bounded cursor", () => {
    let q = loadedQueue([pair("a"), pair("b"), pair("c")]);
    expect(current(q)?.pair_id).toBe("a");
    q = move(q, 1);
    expect(current(q)?.pair_id).toBe("b");
    q = move(q, 10);
    expect(current(q)?.pair_id).toBe("c");
    q = move(q, -10);
    expect(current(q)?.pair_id).toBe("a");
  });

  it("removes a decided item without reload and reaches done", () => {
    let q = loadedQueue([pair("a"), pair("b")]);
    q = applyOptimistic(q, "a");
    expect(q.items.map((p) => p.pair_id)).toEqual(["b"]);
    expect(q.done).toBe(false);
    q = applyOptimistic(q, "b");
    expect(q.done).toBe(true);
  });

  it("refuses to decide a stale item", () => {
    const q = loadedQueue([pair("a")]);
    q.items[0].status = "accepted";
    expect(() => applyOptimistic(q, "a")).toThrow(StaleItemError);
  });

  it("rolls a failed decision back into place", () => {
    const original = loadedQueue([pair("a"), pair("b"), pair("c")]);
    const index = indexOf(original, "b");
    const removed = applyOptimistic(original, "b");
    const restored = rollback(removed, original.items[1], index);
    expect(restored.items.map((p) => p.pair_id)).toEqual(["a", "b", "c"]);
    expect(restored.cursor).toBe(index);
    expect(restored.done).toBe(false);
  });
});
