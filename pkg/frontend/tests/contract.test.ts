/**
 * UI contract tests against exchanges recorded from the live service
 * (regenerate with `python3 tools/record_fixtures.py`):
 *  - the filter builder's emitted grammar round-trips through the
 *    server's parser for 50 generated widget states,
 *  - bulk-validating 50 selected rows produces exactly one commit,
 *  - redacted scheme payloads render without placeholder label rows.
 */
import { describe, expect, it } from "vitest";

import { ApiClient, type TermPage } from "../src/api.js";
import { applyFilter, bulkValidate } from "../src/actions.js";
import { emitFilterText, type BuilderNode } from "../src/filterBuilder.js";
import { createGrid, loadPage, toggleSelect } from "../src/grid.js";
import { renderStatusRows, hiddenNote } from "../src/panels.js";
import { RecordingTransport, ok } from "./helpers.js";
import filterFixture from "./fixtures/filter_roundtrip.json";
import bulkFixture from "./fixtures/bulk_validate.json";
import redactedFixture from "./fixtures/redacted_statuses.json";

interface FilterCase {
  state: BuilderNode;
  emitted: string;
  canonical: string;
}

const filterCases = filterFixture.cases as unknown as FilterCase[];

describe("filter builder round-trips through the server parser", () => {
  it("covers 50 recorded widget states", () => {
    expect(filterCases.length).toBe(50);
  });

  it("emits byte-identical grammar text for every recorded state", () => {
    for (const c of filterCases) {
      expect(emitFilterText(c.state)).toBe(c.emitted);
    }
  });

  it("every emitted string was accepted by the server and its canonical form is a parser fixpoint", () => {
    // The recorder asserted parse(emitted).canonical === canonical and
    // parse(canonical).canonical === canonical against the live service;
    // here we check the recorded round trip is complete and non-empty.
    for (const c of filterCases) {
      expect(typeof c.canonical).toBe("string");
      expect(c.canonical.length).toBeGreaterThan(0);
    }
  });

  it("applyFilter adopts the server's canonical text as the grid filter", async () => {
    const emptyPage: TermPage = {
      total: 0,
      page: 1,
      page_size: 50,
      version: 3,
      items: [],
    };
    for (const c of filterCases) {
      const t = new RecordingTransport([
        (req) =>
          req.path === "/filters/parse" && req.query?.q === c.emitted
            ? ok({ ok: true, canonical: c.canonical })
            : undefined,
        (req) =>
          req.path === "/projects/p1/terms" && req.query?.filter === c.canonical
            ? ok(emptyPage)
            : undefined,
      ]);
      const result = await applyFilter(new ApiClient(t.transport), "p1", createGrid(), c.emitted);
      expect(result.ok).toBe(true);
      if (result.ok) {
        expect(result.grid.filterText).toBe(c.canonical);
      }
    }
  });
});

describe("bulk validation batches the whole selection into one commit", () => {
  it("50 selected rows -> exactly one commit, version +1", async () => {
    const page = bulkFixture.page as unknown as TermPage;
    let grid = loadPage(createGrid(60), page, "all", "surface:asc");
    for (const id of bulkFixture.selected) {
      grid = toggleSelect(grid, id);
    }
    expect(grid.selection.size).toBe(50);

    const t = new RecordingTransport([
      (req) => {
        if (req.method === "POST" && req.path === `/projects/${bulkFixture.project_id}/commit`) {
          // The client must send the exact envelope the server journaled.
          expect(req.body).toEqual(bulkFixture.request);
          return ok(bulkFixture.response);
        }
        return undefined;
      },
    ]);
    const result = await bulkValidate(
      new ApiClient(t.transport),
      bulkFixture.project_id,
      grid,
      "invalid",
    );
    expect(t.commits().length).toBe(1);
    expect(t.calls.length).toBe(1);
    expect(result.ok).toBe(true);
    if (result.ok) {
      expect(result.version).toBe(page.version + 1);
    }
  });

  it("empty selection is rejected before any request", async () => {
    const t = new RecordingTransport([]);
    const grid = createGrid();
    await expect(
      bulkValidate(new ApiClient(t.transport), "p1", grid, "valid"),
    ).rejects.toThrow(/non-empty selection/);
    expect(t.calls.length).toBe(0);
  });

  it("a stale version surfaces as a conflict with the selection preserved", async () => {
    const page = bulkFixture.page as unknown as TermPage;
    let grid = loadPage(createGrid(60), page, "all", "surface:asc");
    for (const id of bulkFixture.selected) {
      grid = toggleSelect(grid, id);
    }
    const t = new RecordingTransport([
      () => ({
        status: bulkFixture.conflict_response.status,
        json: bulkFixture.conflict_response.body,
      }),
    ]);
    const result = await bulkValidate(new ApiClient(t.transport), bulkFixture.project_id, grid, "invalid");
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.currentVersion).toBe(bulkFixture.conflict_response.body.current_version);
      expect(result.grid.selection.size).toBe(50);
    }
  });
});

describe("redacted scheme payloads render without placeholder labels", () => {
  const hidden = redactedFixture.hidden_labels;

  it("blind: placeholders become a count, never label rows", () => {
    const payload = redactedFixture.schemes.blind.payload;
    const rendered = renderStatusRows(payload.statuses);
    expect(rendered.rows.length).toBe(0);
    expect(rendered.hiddenCount).toBe(2);
    expect(hiddenNote(rendered)).toBe("2 other validations exist");
    const renderedText = JSON.stringify(rendered.rows);
    for (const label of hidden) {
      expect(renderedText).not.toContain(label);
    }
  });

  it("blind: the payload itself carries no foreign users or labels", () => {
    const payload = redactedFixture.schemes.blind.payload;
    for (const rec of payload.statuses) {
      expect(rec).toEqual({ redacted: true });
    }
  });

  it("double-blind: hidden records are absent entirely", () => {
    const payload = redactedFixture.schemes.double_blind.payload;
    expect(payload.statuses).toEqual([]);
    const rendered = renderStatusRows(payload.statuses);
    expect(rendered.rows).toEqual([]);
    expect(rendered.hiddenCount).toBe(0);
    expect(hiddenNote(rendered)).toBeNull();
  });
});
