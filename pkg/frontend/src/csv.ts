/** CSV contracts of the solver outputs, parsed into typed row arrays. */

import Papa from "papaparse";

export class MissingColumnError extends Error {
  constructor(column: string, available: string[]) {
    super(`missing column "${column}" (have: ${available.join(", ")})`);
    this.name = "MissingColumnError";
  }
}

export interface Table {
  columns: string[];
  rows: Record<string, number>[];
}

/** Parse a numeric CSV with a header row; empty cells become NaN. */
export function parseTable(text: string): Table {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  const rows = parsed.data.map((raw) => {
    const row: Record<string, number> = {};
    for (const col of columns) {
      const cell = raw[col];
      row[col] = cell === "" || cell === undefined ? NaN : Number(cell);
    }
    return row;
  });
  return { columns, rows };
}

export function requireColumns(table: Table, needed: string[]): void {
  for (const col of needed) {
    if (!table.columns.includes(col)) {
      throw new MissingColumnError(col, table.columns);
    }
  }
}

/** Columns of the refinement-study CSV (error fields and their rates). */
export const CONVERGENCE_ERROR_COLUMNS = [
  "e0_d",
  "e1_p",
  "ediv_sigma",
  "e0_u",
  "e0_gamma",
] as const;

export function parseConvergence(text: string): Table {
  const table = parseTable(text);
  requireColumns(table, ["level", "h", "dofs", ...CONVERGENCE_ERROR_COLUMNS]);
  if (table.rows.length < 2) {
    throw new Error("convergence plot needs at least 2 refinement levels");
  }
  return table;
}

export const TRANSIENT_COLUMNS = [
  "t",
  "p_probe1",
  "sxx_probe2",
  "syy_probe2",
  "ux_probe2",
  "uy_probe2",
] as const;

export function parseTransients(text: string): Table {
  const table = parseTable(text);
  requireColumns(table, [...TRANSIENT_COLUMNS]);
  return table;
}

export const MIDLINE_COLUMNS = ["x", "p", "ux", "dxx", "dyy", "sxx", "syy"] as const;

export function parseMidline(text: string): Table {
  const table = parseTable(text);
  requireColumns(table, [...MIDLINE_COLUMNS]);
  return table;
}
