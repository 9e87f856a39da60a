import { describe, expect, it } from "vitest";

import type { TermPage, TermRow } from "../src/api.js";
import {
  createGrid,
  loadPage,
  rowCells,
  selectAll,
  setColumns,
  toggleSelect,
} from "../src/grid.js";

function row(id: string, surface: string, occ = 1): TermRow {
  return {
    id,
    surface,
    lemma: surface,
    pos: "NP",
    head_lemma: surface.split(" ").at(-1) ?? surface,
    expansion_lemma: "",
    word_count: surface.split(" ").length,
    occ_count: occ,
    merged_into: null,
    doc_refs: [],
    index_occurrences: 0,
  };
}

function page(items: TermRow[], version = 1): TermPage {
  return { total: items.length, page: 1, page_size: 50, version, items };
}

describe("grid state", () => {
  it("selection stays a subset of loaded rows across page loads", () => {
    let grid = loadPage(createGrid(), page([row("T1", "oak"), row("T2", "elm")]), "all", "surface:asc");
    grid = selectAll(grid);
    expect([...grid.selection].sort()).toEqual(["T1", "T2"]);
    // New page keeps T2, drops T1: the selection is pruned with it.
    grid = loadPage(grid, page([row("T2", "elm"), row("T3", "ash")], 2), "occ >= 1", "surface:asc");
    expect([...grid.selection]).toEqual(["T2"]);
    expect(grid.version).toBe(2);
    expect(grid.filterText).toBe("occ >= 1");
  });

  it("toggling an unloaded row is an error", () => {
    const grid = loadPage(createGrid(), page([row("T1", "oak")]), "all", "surface:asc");
    expect(() => toggleSelect(grid, "ghost")).toThrow(/not loaded/);
  });

  it("toggle flips membership", () => {
    let grid = loadPage(createGrid(), page([row("T1", "oak")]), "all", "surface:asc");
    grid = toggleSelect(grid, "T1");
    expect(grid.selection.has("T1")).toBe(true);
    grid = toggleSelect(grid, "T1");
    expect(grid.selection.has("T1")).toBe(false);
  });

  it("columns are user-configurable but validated", () => {
    let grid = createGrid();
    grid = setColumns(grid, ["occ_count", "surface"]);
    expect(grid.columns).toEqual(["occ_count", "surface"]);
    const cells = rowCells(grid, row("T1", "mature avocado tree", 12));
    expect(cells).toEqual([12, "mature avocado tree"]);
    expect(() => setColumns(grid, ["nope"])).toThrow(/unknown column/);
    expect(() => setColumns(grid, [])).toThrow(/at least one column/);
  });
});
