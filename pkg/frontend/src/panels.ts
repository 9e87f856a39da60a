/**
 * Side-panel state: KWIC contexts, synonym-class membership, concept
 * hierarchy, plus the stale-version banner raised on commit conflicts.
 */

import type { ConceptTreeNode, KwicLine, StatusRecord } from "./api.js";

export interface KwicPanel {
  termId: string | null;
  window: number;
  lines: KwicLine[];
}

export interface ClassPanel {
  classId: string | null;
  representative: string | null;
  members: { termId: string; linkType: string }[];
}

export interface DragState {
  kind: "term" | "concept";
  id: string;
}

export interface HierarchyPanel {
  roots: ConceptTreeNode[];
  expanded: Set<string>;
  drag: DragState | null;
}

export interface PanelState {
  kwic: KwicPanel;
  cls: ClassPanel;
  hierarchy: HierarchyPanel;
  /** Last committed server version the panels loaded. */
  loadedVersion: number;
  /** Non-null while a commit conflict awaits a refresh-and-retry. */
  conflictBanner: { message: string; currentVersion: number } | null;
  toasts: string[];
}

export function createPanels(): PanelState {
  return {
    kwic: { termId: null, window: 5, lines: [] },
    cls: { classId: null, representative: null, members: [] },
    hierarchy: { roots: [], expanded: new Set(), drag: null },
    loadedVersion: 0,
    conflictBanner: null,
    toasts: [],
  };
}

export function showConflict(
  panels: PanelState,
  message: string,
  currentVersion: number,
): PanelState {
  return { ...panels, conflictBanner: { message, currentVersion } };
}

export function clearConflict(panels: PanelState): PanelState {
  return { ...panels, conflictBanner: null };
}

export function pushToast(panels: PanelState, message: string): PanelState {
  return { ...panels, toasts: [...panels.toasts, message] };
}

/** One rendered line in the validation-status panel. */
export interface StatusRow {
  user: string;
  label: string;
  comment: string;
}

export interface RenderedStatuses {
  rows: StatusRow[];
  /** Count of records the scheme withheld; shown as a note, never as rows. */
  hiddenCount: number;
}

/**
 * Turn a scheme-filtered statuses payload into display rows.
 *
 * Redacted placeholders carry no user or label, so they are summarized as
 * "N other validation(s) exist" instead of producing label rows — the UI
 * cannot render what the server never sent.
 */
export function renderStatusRows(statuses: StatusRecord[]): RenderedStatuses {
  const rows: StatusRow[] = [];
  let hiddenCount = 0;
  for (const rec of statuses) {
    if (rec.redacted || rec.user === undefined || rec.label === undefined) {
      hiddenCount += 1;
      continue;
    }
    rows.push({ user: rec.user, label: rec.label, comment: rec.comment ?? "" });
  }
  return { rows, hiddenCount };
}

export function hiddenNote(rendered: RenderedStatuses): string | null {
  if (rendered.hiddenCount === 0) {
    return null;
  }
  const n = rendered.hiddenCount;
  return `${n} other validation${n === 1 ? "" : "s"} exist${n === 1 ? "s" : ""}`;
}
