/** Minimal RFC-4180 reader for the laboratory's report tables. */

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const rows: string[][] = [];
  let field = "";
  let row: string[] = [];
  let inQuotes = false;
  const push = () => {
    row.push(field);
    field = "";
  };
  const endRow = () => {
    push();
    if (row.length > 1 || row[0] !== "") rows.push(row);
    row = [];
  };
  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          inQuotes = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      inQuotes = true;
    } else if (ch === ",") {
      push();
    } else if (ch === "\n") {
      endRow();
    } else if (ch !== "\r") {
      field += ch;
    }
  }
  if (field.length > 0 || row.length > 0) endRow();
  if (rows.length === 0) throw new Error("empty CSV");
  return { header: rows[0], rows: rows.slice(1) };
}

/**
 * Resolve the listed columns to indices.  Required columns missing is an
 * error; columns present in the file but not requested are reported through
 * `warn` and ignored.
 */
export function selectColumns(
  table: Table,
  required: string[],
  warn: (msg: string) => void = (m) => console.warn(m),
): Map<string, number> {
  const index = new Map<string, number>();
  for (const name of required) {
    const at = table.header.indexOf(name);
    if (at < 0) {
      throw new Error(`missing required column '${name}' (header: ${table.header.join(",")})`);
    }
    index.set(name, at);
  }
  for (const name of table.header) {
    if (!required.includes(name)) warn(`ignoring unknown column '${name}'`);
  }
  return index;
}

export function numericColumn(table: Table, cols: Map<string, number>, name: string): number[] {
  const at = cols.get(name);
  if (at === undefined) throw new Error(`column '${name}' was not selected`);
  return table.rows.map((r) => {
    const v = Number(r[at]);
    if (!Number.isFinite(v)) throw new Error(`non-numeric value '${r[at]}' in column '${name}'`);
    return v;
  });
}
