/**
 * Term-grid state: user-configurable columns, server-driven pages,
 * multi-row selection.  The grid never filters or sorts locally — every
 * page it shows is a verbatim server response.
 */

import type { TermPage, TermRow } from "./api.js";

export const ALL_COLUMNS = [
  "surface",
  "lemma",
  "pos",
  "head_lemma",
  "expansion_lemma",
  "word_count",
  "occ_count",
  "index_occurrences",
] as const;

export type ColumnId = (typeof ALL_COLUMNS)[number];

export const DEFAULT_COLUMNS: ColumnId[] = [
  "surface",
  "lemma",
  "occ_count",
  "head_lemma",
];

export interface GridState {
  columns: ColumnId[];
  filterText: string;
  sortKeys: string;
  page: number;
  pageSize: number;
  total: number;
  /** Project version the loaded rows reflect; commits use it as expected_version. */
  version: number;
  rows: TermRow[];
  selection: Set<string>;
}

export function createGrid(pageSize = 50): GridState {
  return {
    columns: [...DEFAULT_COLUMNS],
    filterText: "all",
    sortKeys: "surface:asc",
    page: 1,
    pageSize,
    total: 0,
    version: 0,
    rows: [],
    selection: new Set(),
  };
}

/** Reorder/restrict visible columns; unknown ids are rejected. */
export function setColumns(grid: GridState, columns: string[]): GridState {
  for (const c of columns) {
    if (!(ALL_COLUMNS as readonly string[]).includes(c)) {
      throw new Error(`unknown column ${JSON.stringify(c)}`);
    }
  }
  if (columns.length === 0) {
    throw new Error("at least one column must stay visible");
  }
  return { ...grid, columns: [...new Set(columns)] as ColumnId[] };
}

/**
 * Install a freshly fetched page.  Selection is pruned to the loaded rows
 * so `selection ⊆ rows` holds across filter, sort and page changes.
 */
export function loadPage(
  grid: GridState,
  page: TermPage,
  filterText: string,
  sortKeys: string,
): GridState {
  const loaded = new Set(page.items.map((r) => r.id));
  const selection = new Set([...grid.selection].filter((id) => loaded.has(id)));
  return {
    ...grid,
    filterText,
    sortKeys,
    page: page.page,
    pageSize: page.page_size,
    total: page.total,
    version: page.version,
    rows: page.items,
    selection,
  };
}

export function toggleSelect(grid: GridState, termId: string): GridState {
  if (!grid.rows.some((r) => r.id === termId)) {
    throw new Error(`row ${JSON.stringify(termId)} is not loaded`);
  }
  const selection = new Set(grid.selection);
  if (selection.has(termId)) {
    selection.delete(termId);
  } else {
    selection.add(termId);
  }
  return { ...grid, selection };
}

export function selectAll(grid: GridState): GridState {
  return { ...grid, selection: new Set(grid.rows.map((r) => r.id)) };
}

export function clearSelection(grid: GridState): GridState {
  return { ...grid, selection: new Set() };
}

/** Cell values for rendering, in the grid's configured column order. */
export function rowCells(grid: GridState, row: TermRow): (string | number)[] {
  return grid.columns.map((c) => row[c]);
}
