/**
 * User-facing actions: server-side filtering, single-commit bulk
 * validation, and drag-and-drop structuring.  Every mutation is one
 * optimistic commit; a 409 surfaces as a conflict result with state
 * preserved so the user can refresh and retry.
 */

import { ApiClient, ApiError, ConflictError } from "./api.js";
import type { GridState } from "./grid.js";
import { loadPage } from "./grid.js";
import type { PanelState } from "./panels.js";
import { pushToast, showConflict } from "./panels.js";

export interface FilterOk {
  ok: true;
  grid: GridState;
  canonical: string;
}

export interface FilterSyntaxFailure {
  ok: false;
  message: string;
  /** Character offset for inline error markers, when the server reports one. */
  position: number | null;
}

/**
 * Parse the filter on the server, then refresh page 1 of the grid with
 * the canonical text.  On a syntax error the grid is returned unchanged.
 */
export async function applyFilter(
  client: ApiClient,
  projectId: string,
  grid: GridState,
  text: string,
): Promise<FilterOk | FilterSyntaxFailure> {
  const query = text.trim() === "" ? "all" : text;
  let canonical: string;
  try {
    canonical = (await client.parseFilter(query)).canonical;
  } catch (err) {
    if (err instanceof ApiError && err.code === "filter_syntax_error") {
      const pos = err.details.position;
      return {
        ok: false,
        message: err.message,
        position: typeof pos === "number" ? pos : null,
      };
    }
    throw err;
  }
  const page = await client.listTerms(projectId, {
    filter: canonical,
    sort: grid.sortKeys,
    page: 1,
    pageSize: grid.pageSize,
  });
  return { ok: true, grid: loadPage(grid, page, canonical, grid.sortKeys), canonical };
}

export interface BulkOk {
  ok: true;
  version: number;
  grid: GridState;
}

export interface BulkConflict {
  ok: false;
  conflict: true;
  currentVersion: number;
  /** Selection survives the conflict so retry re-sends the same rows. */
  grid: GridState;
}

/**
 * Validate every selected row with one commit: a single `set_statuses`
 * command envelope carrying all updates.  Disabled (throws) on an empty
 * selection.
 */
export async function bulkValidate(
  client: ApiClient,
  projectId: string,
  grid: GridState,
  label: string,
  comment = "",
): Promise<BulkOk | BulkConflict> {
  if (grid.selection.size === 0) {
    throw new Error("bulk validation needs a non-empty selection");
  }
  const updates = grid.rows
    .filter((r) => grid.selection.has(r.id))
    .map((r) => ({ term_id: r.id, label, comment }));
  try {
    const resp = await client.commit(projectId, grid.version, "set_statuses", {
      updates,
    });
    return { ok: true, version: resp.version, grid: { ...grid, version: resp.version } };
  } catch (err) {
    if (err instanceof ConflictError) {
      return { ok: false, conflict: true, currentVersion: err.currentVersion, grid };
    }
    throw err;
  }
}

export interface DragOutcome {
  ok: boolean;
  panels: PanelState;
  version?: number;
}

/** Drop a term onto a synonym class: an `add_member` commit. */
export async function dragTermToClass(
  client: ApiClient,
  projectId: string,
  panels: PanelState,
  termId: string,
  classId: string,
  linkType: string,
): Promise<DragOutcome> {
  return commitDrag(client, projectId, panels, "add_member", {
    class_id: classId,
    term_id: termId,
    link_type: linkType,
  });
}

/** Re-parent a concept in the hierarchy: a `move_subtree` commit. */
export async function dragConcept(
  client: ApiClient,
  projectId: string,
  panels: PanelState,
  conceptId: string,
  oldParent: string | null,
  newParent: string | null,
): Promise<DragOutcome> {
  return commitDrag(client, projectId, panels, "move_subtree", {
    concept: conceptId,
    old_parent: oldParent,
    new_parent: newParent,
  });
}

async function commitDrag(
  client: ApiClient,
  projectId: string,
  panels: PanelState,
  op: string,
  args: Record<string, unknown>,
): Promise<DragOutcome> {
  const cleared = { ...panels, hierarchy: { ...panels.hierarchy, drag: null } };
  try {
    const resp = await client.commit(projectId, cleared.loadedVersion, op, args);
    return { ok: true, panels: { ...cleared, loadedVersion: resp.version }, version: resp.version };
  } catch (err) {
    if (err instanceof ConflictError) {
      return {
        ok: false,
        panels: showConflict(cleared, err.message, err.currentVersion),
      };
    }
    if (err instanceof ApiError) {
      // Domain rejections (cycle paths, existing class, …) become toasts
      // carrying the server's explanatory payload.
      const detail = Object.keys(err.details).length
        ? ` (${JSON.stringify(err.details)})`
        : "";
      return { ok: false, panels: pushToast(cleared, `${err.code}: ${err.message}${detail}`) };
    }
    throw err;
  }
}
