import type { CanvasSnapshot } from "./canvas.js";

/** The slice of the Web Storage interface the layout store needs. */
export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

function keyFor(corpusId: string): string {
  return `dgworkbench.layout.${corpusId}`;
}

export function saveLayout(
  storage: StorageLike,
  corpusId: string,
  snapshot: CanvasSnapshot,
): void {
  storage.setItem(keyFor(corpusId), JSON.stringify(snapshot));
}

/** Load a saved board, or null when absent or unreadable. */
export function loadLayout(
  storage: StorageLike,
  corpusId: string,
): CanvasSnapshot | null {
  const raw = storage.getItem(keyFor(corpusId));
  if (raw === null) return null;
  try {
    const parsed = JSON.parse(raw) as CanvasSnapshot;
    if (!Array.isArray(parsed.nodes) || !Array.isArray(parsed.edges)) return null;
    return parsed;
  } catch {
    return null;
  }
}

export function clearLayout(storage: StorageLike, corpusId: string): void {
  storage.removeItem(keyFor(corpusId));
}
