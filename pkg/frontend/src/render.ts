// DOM rendering. Texts from the API are inserted via textContent only, so
// the browser never interprets them and what you see is byte-for-byte what
// the store holds.

import { DiffChunk, MarkerPredicate, splitByMarkers } from "./diff.js";

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

function span(cls: string, text: string): HTMLSpanElement {
  const el = document.createElement("span");
  el.className = cls;
  el.textContent = text;
  return el;
}

function sideSpans(
  parent: HTMLElement,
  text: string,
  cls: string,
  isMarker: MarkerPredicate,
): void {
  for (const piece of splitByMarkers(text, isMarker)) {
    parent.appendChild(span(piece.marker ? `${cls} marker` : cls, piece.text));
  }
}

export function renderDiff(
  sourceNode: HTMLElement,
  targetNode: HTMLElement,
  chunks: DiffChunk[],
  isMarker: MarkerPredicate,
): void {
  clear(sourceNode);
  clear(targetNode);
  for (const chunk of chunks) {
    switch (chunk.type) {
      case "equal":
        sideSpans(sourceNode, chunk.a, "same", isMarker);
        sideSpans(targetNode, chunk.b, "same", isMarker);
        break;
      case "delete":
        sideSpans(sourceNode, chunk.a, "removed", isMarker);
        break;
      case "insert":
        sideSpans(targetNode, chunk.b, "added", isMarker);
        break;
      case "replace":
        sideSpans(sourceNode, chunk.a, "changed", isMarker);
        sideSpans(targetNode, chunk.b, "changed", isMarker);
        break;
    }
  }
}

export function setBanner(node: HTMLElement, message: string | null): void {
  node.textContent = message ?? "";
  node.classList.toggle("visible", message !== null);
}
