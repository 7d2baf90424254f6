/** Option comparison table: the pure view model behind the side-by-side
 * matrix.  One row per option, one column per bus that any option touches,
 * zeros rendered blank, totals straight from the rows, validation badges
 * straight from the gateway flags. */

import type { CfOptionPayload } from "./types";

export interface ComparisonCell {
  /** 3-decimal MW text, or "" for an untouched bus. */
  text: string;
  value: number;
}

export interface ComparisonRow {
  label: string;
  cells: ComparisonCell[];
  /** Sum of the row's deltas, which must reproduce the server total. */
  total: number;
  totalText: string;
  nChanged: number;
  validated: boolean;
  proba: number;
  noChange: boolean;
}

export interface ComparisonTable {
  kind: "table";
  /** External bus ids with a nonzero delta in at least one option. */
  busColumns: number[];
  rows: ComparisonRow[];
}

export interface EmptyComparison {
  kind: "empty";
  message: string;
}

export type ComparisonView = ComparisonTable | EmptyComparison;

export const MW_DECIMALS = 3;

export function formatMw(value: number): string {
  return value.toFixed(MW_DECIMALS);
}

export function buildComparison(options: CfOptionPayload[]): ComparisonView {
  if (options.length === 0) {
    return { kind: "empty", message: "No options yet — generate counterfactuals." };
  }
  const buses = new Set<number>();
  for (const opt of options) {
    for (const bus of Object.keys(opt.delta)) {
      buses.add(Number(bus));
    }
  }
  const busColumns = [...buses].sort((a, b) => a - b);

  const rows = options.map((opt, i) => {
    const cells = busColumns.map((bus) => {
      const value = opt.delta[String(bus)] ?? 0;
      return { value, text: value === 0 ? "" : formatMw(value) };
    });
    const total = cells.reduce((acc, c) => acc + c.value, 0);
    return {
      label: `Option #${i + 1}`,
      cells,
      total,
      totalText: formatMw(total),
      nChanged: opt.n_changed,
      validated: opt.validated,
      proba: opt.proba,
      noChange: Object.keys(opt.delta).length === 0,
    };
  });
  return { kind: "table", busColumns, rows };
}

export type SortKey = "total" | "changed";

export function sortRows(table: ComparisonTable, key: SortKey): ComparisonTable {
  const rows = [...table.rows].sort((a, b) =>
    key === "total" ? a.total - b.total : a.nChanged - b.nChanged,
  );
  return { ...table, rows };
}
