/** Strict parser for the harness's CSV dialect: comma, '.' decimal, LF,
 * header always present, no quoting. */
import { SchemaMismatch } from "./errors.js";

export interface Table {
  header: string[];
  /** column-major numeric data, aligned with header */
  columns: number[][];
  rows: number;
}

export function parseCsv(text: string, source: string): Table {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length < 2) {
    throw new SchemaMismatch(`${source}: need a header and at least one row`);
  }
  const header = lines[0].split(",");
  const columns: number[][] = header.map(() => []);
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new SchemaMismatch(
        `${source}: row ${i} has ${parts.length} fields, header has ${header.length}`,
      );
    }
    for (let j = 0; j < parts.length; j++) {
      const v = parts[j] === "True" ? 1 : parts[j] === "False" ? 0 : Number(parts[j]);
      if (Number.isNaN(v)) {
        throw new SchemaMismatch(`${source}: non-numeric value '${parts[j]}' at row ${i}`);
      }
      columns[j].push(v);
    }
  }
  return { header, columns, rows: lines.length - 1 };
}

export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaMismatch(`missing column '${name}' (have: ${table.header.join(",")})`);
  }
  return table.columns[idx];
}
