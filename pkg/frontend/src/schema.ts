// Readers for the solver's emitted CSV/JSON files. The schemas are
// consumed verbatim; any drift is a hard error, not a best-effort parse.

import { readFileSync } from "node:fs";

export class SchemaMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaMismatch";
  }
}

export class MissingColumn extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MissingColumn";
  }
}

export const SERIES_HEADER =
  "time,sup_grad,sup_ut,lambda_hat,energy,psi_max,psi_argmax_boundary,eigmin_B";

export const SWEEP_HEADER = "param_value,epsilon2,eigmin_B,sup_grad,lambda_hat";

export const SCHEMA_VERSION = 1;

export interface Table {
  columns: string[];
  rows: number[][];
}

export function parseCsv(text: string, expectedHeader: string): Table {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0] !== expectedHeader) {
    throw new SchemaMismatch(
      `CSV header ${JSON.stringify(lines[0] ?? "")} does not match ` +
      `expected ${JSON.stringify(expectedHeader)}`);
  }
  const columns = lines[0].split(",");
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new SchemaMismatch(
        `row ${i} has ${cells.length} cells, expected ${columns.length}`);
    }
    rows.push(cells.map(Number));
  }
  return { columns, rows };
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new MissingColumn(`column ${JSON.stringify(name)} not present`);
  }
  return table.rows.map((r) => r[idx]);
}

export function readCsv(path: string, expectedHeader: string): Table {
  return parseCsv(readFileSync(path, "utf-8"), expectedHeader);
}

export interface EpsilonPath {
  eps: number[];
  lambda: number[];
  extrapolated_lambda: number;
  observed_order: number;
}

export function readTranslatorManifest(path: string): EpsilonPath {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  if (raw.schema_version !== SCHEMA_VERSION) {
    throw new SchemaMismatch(
      `manifest schema_version ${raw.schema_version}, ` +
      `expected ${SCHEMA_VERSION}`);
  }
  const p = raw.epsilon_path;
  if (!p || !Array.isArray(p.eps) || !Array.isArray(p.lambda)) {
    throw new MissingColumn("epsilon_path with eps/lambda arrays not present");
  }
  if (typeof p.extrapolated_lambda !== "number") {
    throw new MissingColumn("epsilon_path.extrapolated_lambda not present");
  }
  return p as EpsilonPath;
}
