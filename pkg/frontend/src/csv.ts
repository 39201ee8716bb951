/**
 * Reader for the simulator's CSV tables: `#`-prefixed provenance lines,
 * then a header row, then comma-separated values.
 */

export interface Table {
  meta: Record<string, string>;
  columns: string[];
  rows: string[][];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const meta: Record<string, string> = {};
  const columns: string[] = [];
  const rows: string[][] = [];
  let sawHeader = false;
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.trimEnd();
    if (line === "") continue;
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      const space = body.indexOf(" ");
      if (space > 0) meta[body.slice(0, space)] = body.slice(space + 1).trim();
      continue;
    }
    const cells = line.split(",");
    if (!sawHeader) {
      columns.push(...cells);
      sawHeader = true;
    } else {
      if (cells.length !== columns.length) {
        throw new SchemaError(
          `row has ${cells.length} cells but the header declares ${columns.length} columns`,
        );
      }
      rows.push(cells);
    }
  }
  if (!sawHeader) throw new SchemaError("no header row found");
  return { meta, columns, rows };
}

/** Indices of the named columns; throws a diagnostic naming what is missing. */
export function requireColumns(table: Table, names: string[], kind: string): number[] {
  const missing = names.filter((n) => !table.columns.includes(n));
  if (missing.length > 0) {
    throw new SchemaError(
      `plot kind '${kind}' needs columns [${names.join(", ")}]; ` +
        `missing [${missing.join(", ")}] in header [${table.columns.join(", ")}]`,
    );
  }
  return names.map((n) => table.columns.indexOf(n));
}

export function toNumber(cell: string): number {
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  const v = Number(cell);
  if (Number.isNaN(v)) throw new SchemaError(`cannot parse numeric cell '${cell}'`);
  return v;
}

/** Distinct values of a column, in first-appearance order. */
export function distinct(table: Table, column: number): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const row of table.rows) {
    const v = row[column];
    if (!seen.has(v)) {
      seen.add(v);
      out.push(v);
    }
  }
  return out;
}
