import { describe, expect, it } from "vitest";

import { buildComparison, formatMw, sortRows } from "../src/comparison";
import type { CfOptionPayload } from "../src/types";

function opt(delta: Record<string, number>, validated = true): CfOptionPayload {
  const total = Object.values(delta).reduce((a, b) => a + Math.abs(b), 0);
  return {
    delta,
    total_mw: total,
    proba: 0.9,
    logit: 2.0,
    distance: 0.1,
    n_changed: Object.keys(delta).length,
    validated,
  };
}

describe("buildComparison", () => {
  it("one column per touched bus, one row per option, zeros blank", () => {
    const view = buildComparison([
      opt({ "8": 16.903, "10": 1.869 }),
      opt({ "8": 12.918, "20": 0.257 }),
      opt({ "8": 28.383, "16": 2.947 }),
    ]);
    expect(view.kind).toBe("table");
    if (view.kind !== "table") return;
    expect(view.busColumns).toEqual([8, 10, 16, 20]);
    expect(view.rows).toHaveLength(3);
    // option 1 never touches bus 16 or 20 -> blank cells
    const row1 = view.rows[0];
    expect(row1.cells.map((c) => c.text)).toEqual(["16.903", "1.869", "", ""]);
    expect(row1.totalText).toBe(formatMw(16.903 + 1.869));
  });

  it("row totals reproduce the per-option sums", () => {
    const options = [opt({ "8": 10.5, "30": 2.25 }), opt({ "8": 5.125 })];
    const view = buildComparison(options);
    if (view.kind !== "table") throw new Error("expected table");
    view.rows.forEach((row, i) => {
      expect(row.total).toBeCloseTo(options[i].total_mw, 9);
    });
  });

  it("degenerate all-zero option is flagged no-change", () => {
    const view = buildComparison([opt({})]);
    if (view.kind !== "table") throw new Error("expected table");
    expect(view.rows[0].noChange).toBe(true);
    expect(view.rows[0].totalText).toBe("0.000");
  });

  it("empty list gives the call-to-action state", () => {
    const view = buildComparison([]);
    expect(view.kind).toBe("empty");
    if (view.kind === "empty") {
      expect(view.message.toLowerCase()).toContain("generate");
    }
  });

  it("validation badges mirror the flags exactly", () => {
    const view = buildComparison([opt({ "8": 1 }, true), opt({ "8": 2 }, false)]);
    if (view.kind !== "table") throw new Error("expected table");
    expect(view.rows.map((r) => r.validated)).toEqual([true, false]);
  });
});

describe("sortRows", () => {
  const table = buildComparison([
    opt({ "8": 30.0, "16": 3.0 }),
    opt({ "8": 5.0 }),
    opt({ "8": 12.0, "10": 2.0, "20": 1.0 }),
  ]);

  it("by total adjustment", () => {
    if (table.kind !== "table") throw new Error("expected table");
    const sorted = sortRows(table, "total");
    expect(sorted.rows.map((r) => r.label)).toEqual([
      "Option #2", "Option #3", "Option #1",
    ]);
  });

  it("by changed-bus count", () => {
    if (table.kind !== "table") throw new Error("expected table");
    const sorted = sortRows(table, "changed");
    expect(sorted.rows.map((r) => r.nChanged)).toEqual([1, 2, 3]);
  });
});
