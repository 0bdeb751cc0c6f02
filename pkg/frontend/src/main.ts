// Application wiring: queue navigation, diffing, decisions, edit mode.

import { ApiConfig, ApiError, getMarkers, getStats, listPairs, postDecision } from "./api.js";
import { diffChars, markerPredicate, MarkerPredicate } from "./diff.js";
import { renderDiff, setBanner } from "./render.js";
import {
  QueueState,
  StaleItemError,
  applyOptimistic,
  current,
  emptyQueue,
  indexOf,
  loadedQueue,
  move,
  rollback,
} from "./state.js";
import type { DecisionBody } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const apiConfig: ApiConfig = {
  baseUrl: localStorage.getItem("scriptorium.apiBase") ?? "",
  token: localStorage.getItem("scriptorium.token") ?? undefined,
};

let queue: QueueState = emptyQueue();
let isMarker: MarkerPredicate = () => false;
let editing = false;

const nodes = {
  banner: () => el<HTMLDivElement>("banner"),
  stats: () => el<HTMLDivElement>("stats"),
  position: () => el<HTMLDivElement>("position"),
  lineage: () => el<HTMLDivElement>("lineage"),
  source: () => el<HTMLPreElement>("source"),
  target: () => el<HTMLPreElement>("target"),
  editor: () => el<HTMLTextAreaElement>("editor"),
  notes: () => el<HTMLInputElement>("notes"),
  annotator: () => el<HTMLInputElement>("annotator"),
  card: () => el<HTMLDivElement>("card"),
  doneBox: () => el<HTMLDivElement>("done"),
};

async function refreshStats(): Promise<void> {
  try {
    const stats = await getStats(apiConfig);
    nodes.stats().textContent =
      `pending ${stats.by_status.pending} · accepted ${stats.by_status.accepted} · ` +
      `rejected ${stats.by_status.rejected} · edited ${stats.by_status.edited} · ` +
      `decisions ${stats.decisions}`;
  } catch {
    /* the banner already reports connectivity */
  }
}

function show(): void {
  const item = current(queue);
  nodes.card().classList.toggle("hidden", queue.done);
  nodes.doneBox().classList.toggle("hidden", !queue.done);
  if (!item) {
    nodes.position().textContent = "";
    return;
  }
  nodes.position().textContent = `${queue.cursor + 1} / ${queue.items.length}`;
  const lineage = item.lineage as Record<string, string>;
  nodes.lineage().textContent =
    `${lineage.doc_id ?? "?"} / ${lineage.page_id ?? "?"} → ${lineage.work_id ?? "?"}` +
    ` · ${item.language} · match ${item.match_rate == null ? "?" : (item.match_rate * 100).toFixed(1) + "%"}`;
  const target = editing ? nodes.editor().value : item.target;
  renderDiff(nodes.source(), nodes.target(), diffChars(item.source, target), isMarker);
  nodes.target().classList.toggle("hidden", editing);
  nodes.editor().classList.toggle("hidden", !editing);
}

function startEdit(): void {
  const item = current(queue);
  if (!item || editing) return;
  editing = true;
  nodes.editor().value = item.target;
  show();
  nodes.editor().focus();
}

function stopEdit(): void {
  editing = false;
  show();
}

async function decide(status: "accepted" | "rejected" | "edited"): Promise<void> {
  const item = current(queue);
  if (!item) return;
  const annotator = nodes.annotator().value.trim();
  if (!annotator) {
    setBanner(nodes.banner(), "enter an annotator name first");
    return;
  }
  const body: DecisionBody = { status, annotator };
  const notes = nodes.notes().value;
  if (notes) body.notes = notes;
  if (status === "edited") {
    // Save exactly what was typed; no trimming, no normalization.
    body.corrected_target = nodes.editor().value;
  }
  const index = indexOf(queue, item.pair_id);
  let optimistic: QueueState;
  try {
    optimistic = applyOptimistic(queue, item.pair_id);
  } catch (err) {
    if (err instanceof StaleItemError) {
      setBanner(nodes.banner(), err.message);
      return;
    }
    throw err;
  }
  queue = optimistic;
  editing = false;
  nodes.notes().value = "";
  show();
  try {
    await postDecision(apiConfig, item.pair_id, body);
    setBanner(nodes.banner(), null);
    void refreshStats();
  } catch (err) {
    queue = rollback(queue, item, index);
    show();
    setBanner(
      nodes.banner(),
      err instanceof ApiError
        ? `decision failed, kept in queue: ${err.message}`
        : `decision failed: ${String(err)}`,
    );
  }
}

function bindKeys(): void {
  document.addEventListener("keydown", (event) => {
    if (editing && event.key === "Escape") {
      stopEdit();
      return;
    }
    if (editing && event.key === "Enter" && (event.ctrlKey || event.metaKey)) {
      void decide("edited");
      return;
    }
    if (editing) return;
    if (event.target instanceof HTMLInputElement) return;
    switch (event.key) {
      case "j":
      case "ArrowRight":
        queue = move(queue, 1);
        show();
        break;
      case "k":
      case "ArrowLeft":
        queue = move(queue, -1);
        show();
        break;
      case "a":
        void decide("accepted");
        break;
      case "r":
        void decide("rejected");
        break;
      case "e":
        startEdit();
        break;
    }
  });
}

function bindButtons(): void {
  el<HTMLButtonElement>("btn-accept").addEventListener("click", () => void decide("accepted"));
  el<HTMLButtonElement>("btn-reject").addEventListener("click", () => void decide("rejected"));
  el<HTMLButtonElement>("btn-edit").addEventListener("click", startEdit);
  el<HTMLButtonElement>("btn-save").addEventListener("click", () => void decide("edited"));
  el<HTMLButtonElement>("btn-cancel").addEventListener("click", stopEdit);
  el<HTMLButtonElement>("btn-prev").addEventListener("click", () => {
    queue = move(queue, -1);
    show();
  });
  el<HTMLButtonElement>("btn-next").addEventListener("click", () => {
    queue = move(queue, 1);
    show();
  });
  nodes.editor().addEventListener("input", () => {
    if (editing) show(); // live diff refresh while typing
  });
  nodes.annotator().value = localStorage.getItem("scriptorium.annotator") ?? "";
  nodes.annotator().addEventListener("change", () => {
    localStorage.setItem("scriptorium.annotator", nodes.annotator().value);
  });
}

async function boot(): Promise<void> {
  bindButtons();
  bindKeys();
  try {
    const markers = await getMarkers(apiConfig);
    isMarker = markerPredicate(markers);
    const { pairs } = await listPairs(apiConfig, "pending");
    queue = loadedQueue(pairs);
    setBanner(nodes.banner(), null);
  } catch (err) {
    setBanner(
      nodes.banner(),
      err instanceof ApiError ? err.message : `startup failed: ${String(err)}`,
    );
  }
  show();
  void refreshStats();
}

void boot();
