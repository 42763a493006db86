/**
 * Reader for activegp CSV artifacts: a `# activegp csv schema ...` comment
 * line, a header row, then numeric rows (strings allowed in trailing
 * columns such as halt_reason).
 */

import * as fs from "node:fs";

export interface CsvTable {
  header: string[];
  rows: string[][];
}

export function readCsv(path: string): CsvTable {
  if (!fs.existsSync(path)) {
    throw new Error(`missing artifact: ${path}`);
  }
  const lines = fs
    .readFileSync(path, "utf8")
    .split(/\r?\n/)
    .filter((line) => line.length > 0 && !line.startsWith("#"));
  if (lines.length < 1) {
    throw new Error(`artifact ${path} has no header row`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { header, rows };
}

export function column(table: CsvTable, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`column ${name} not found in [${table.header.join(", ")}]`);
  }
  return table.rows.map((r) => Number(r[idx]));
}

/** All theta_* columns, in index order, as an array of points. */
export function thetaColumns(table: CsvTable): number[][] {
  const names = table.header.filter((h) => /^theta_\d+$/.test(h));
  names.sort((a, b) => Number(a.slice(6)) - Number(b.slice(6)));
  const cols = names.map((n) => column(table, n));
  return cols[0].map((_, i) => cols.map((c) => c[i]));
}
