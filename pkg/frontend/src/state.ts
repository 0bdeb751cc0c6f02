// Review-queue state: pure functions so the flow is testable without a DOM.
//
// The queue holds pending pairs in sampling order. Decisions update
// optimistically and roll back if the API refuses; a submission is refused
// locally when the item listed here is no longer pending (stale view).

import type { PairStatus, PairView } from "./types.js";

export interface QueueState {
  items: PairView[];
  cursor: number;
  done: boolean;
}

export function emptyQueue(): QueueState {
  return { items: [], cursor: 0, done: true };
}

export function loadedQueue(pending: PairView[]): QueueState {
  return { items: [...pending], cursor: 0, done: pending.length === 0 };
}

export function current(state: QueueState): PairView | undefined {
  return state.items[state.cursor];
}

export function move(state: QueueState, delta: number): QueueState {
  if (state.items.length === 0) return state;
  const cursor = Math.min(
    Math.max(state.cursor + delta, 0),
    state.items.length - 1,
  );
  return { ...state, cursor };
}

export class StaleItemError extends Error {
  constructor(pairId: string, status: PairStatus) {
    super(`pair ${pairId} is ${status}, not pending; refresh before deciding`);
  }
}

/** Remove the decided item from the queue without waiting for the API. */
export function applyOptimistic(state: QueueState, pairId: string): QueueState {
  const item = state.items.find((p) => p.pair_id === pairId);
  if (!item) return state;
  if (item.status !== "pending") {
    throw new StaleItemError(pairId, item.status);
  }
  const items = state.items.filter((p) => p.pair_id !== pairId);
  const cursor = Math.min(state.cursor, Math.max(items.length - 1, 0));
  return { items, cursor, done: items.length === 0 };
}

/** Put an item back where it was after a failed decision. */
export function rollback(
  state: QueueState,
  item: PairView,
  index: number,
): QueueState {
  const items = [...state.items];
  items.splice(Math.min(index, items.length), 0, item);
  return { items, cursor: index, done: false };
}

export function indexOf(state: QueueState, pairId: string): number {
  return state.items.findIndex((p) => p.pair_id === pairId);
}
