import type { ContextEntry, OverlayResponse } from "./types.js";

export interface LabelGroup {
  label: string;
  entries: ContextEntry[];
}

/**
 * Group context entries under their relation label, keeping the order the
 * service produced.  Entries arrive sorted, so adjacent runs are complete
 * groups; no reordering happens here.
 */
export function groupByLabel(entries: ContextEntry[]): LabelGroup[] {
  const groups: LabelGroup[] = [];
  let current: LabelGroup | undefined;
  for (const entry of entries) {
    if (!current || current.label !== entry.label) {
      current = { label: entry.label, entries: [] };
      groups.push(current);
    }
    current.entries.push(entry);
  }
  return groups;
}

/**
 * Badge text shown next to a node title: relation count over reference
 * count.  A missing reference count (virtual page, no backing blocks)
 * renders as a question mark rather than a misleading zero.
 */
export function overlayBadge(overlay: OverlayResponse): string {
  const refs =
    overlay.referenceCount === null ? "?" : String(overlay.referenceCount);
  return `${overlay.relationCount}/${refs}`;
}
