/**
 * Parsers for the simulator's CSV artifacts.
 *
 * Histogram files:    cell_index,y_lo,y_hi,count,probability
 * Interference files: cell_index,y_mid,p1,p2,p12,mixture,cos_theta,defined
 *
 * Lines starting with '#' are comments.  Each parsed row keeps its raw text
 * so that --dump can re-emit the data section byte for byte.
 */

import { readFileSync } from "node:fs";

export const HIST_HEADER = "cell_index,y_lo,y_hi,count,probability";
export const INTERF_HEADER =
  "cell_index,y_mid,p1,p2,p12,mixture,cos_theta,defined";

export class SchemaViolation extends Error {
  constructor(
    public readonly path: string,
    public readonly lineno: number,
    message: string,
  ) {
    super(`${path}:${lineno}: ${message}`);
  }
}

export interface HistogramRow {
  cellIndex: number;
  yLo: number;
  yHi: number;
  count: number;
  probability: number;
  raw: string;
}

export interface HistogramFile {
  path: string;
  header: string;
  rows: HistogramRow[];
}

export interface InterferenceRow {
  cellIndex: number;
  yMid: number;
  p1: number;
  p2: number;
  p12: number;
  mixture: number;
  cosTheta: number | null; // null where undefined
  defined: boolean;
  raw: string;
}

export interface InterferenceFile {
  path: string;
  header: string;
  rows: InterferenceRow[];
}

function dataLines(path: string): Array<[number, string]> {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new SchemaViolation(path, 0, `cannot read file: ${err}`);
  }
  const out: Array<[number, string]> = [];
  const lines = text.split("\n");
  // A trailing newline yields one empty final element; drop it.
  if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  lines.forEach((line, i) => {
    const clean = line.endsWith("\r") ? line.slice(0, -1) : line;
    if (clean.startsWith("#")) return;
    out.push([i + 1, clean]);
  });
  return out;
}

function parseNumber(
  path: string,
  lineno: number,
  field: string,
  value: string,
): number {
  if (value.trim() === "" || isNaN(Number(value))) {
    throw new SchemaViolation(path, lineno, `bad ${field}: ${JSON.stringify(value)}`);
  }
  return Number(value);
}

export function readHistogram(path: string): HistogramFile {
  const lines = dataLines(path);
  if (lines.length === 0) throw new SchemaViolation(path, 0, "empty file");
  const [headerLine, header] = lines[0];
  if (header !== HIST_HEADER) {
    throw new SchemaViolation(
      path,
      headerLine,
      `expected header ${JSON.stringify(HIST_HEADER)}`,
    );
  }
  const rows: HistogramRow[] = [];
  for (const [lineno, line] of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== 5) {
      throw new SchemaViolation(path, lineno, `expected 5 fields, got ${parts.length}`);
    }
    const cellIndex = parseNumber(path, lineno, "cell_index", parts[0]);
    if (cellIndex !== rows.length) {
      throw new SchemaViolation(path, lineno, `expected cell_index ${rows.length}`);
    }
    const count = parseNumber(path, lineno, "count", parts[3]);
    if (!Number.isInteger(count) || count < 0) {
      throw new SchemaViolation(path, lineno, `bad count: ${parts[3]}`);
    }
    rows.push({
      cellIndex,
      yLo: parseNumber(path, lineno, "y_lo", parts[1]),
      yHi: parseNumber(path, lineno, "y_hi", parts[2]),
      count,
      probability: parseNumber(path, lineno, "probability", parts[4]),
      raw: line,
    });
  }
  if (rows.length === 0) throw new SchemaViolation(path, 0, "no data rows");
  return { path, header, rows };
}

export function readInterference(path: string): InterferenceFile {
  const lines = dataLines(path);
  if (lines.length === 0) throw new SchemaViolation(path, 0, "empty file");
  const [headerLine, header] = lines[0];
  if (header !== INTERF_HEADER) {
    throw new SchemaViolation(
      path,
      headerLine,
      `expected header ${JSON.stringify(INTERF_HEADER)}`,
    );
  }
  const rows: InterferenceRow[] = [];
  for (const [lineno, line] of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== 8) {
      throw new SchemaViolation(path, lineno, `expected 8 fields, got ${parts.length}`);
    }
    const cellIndex = parseNumber(path, lineno, "cell_index", parts[0]);
    if (cellIndex !== rows.length) {
      throw new SchemaViolation(path, lineno, `expected cell_index ${rows.length}`);
    }
    let defined: boolean;
    if (parts[7] === "1") defined = true;
    else if (parts[7] === "0") defined = false;
    else throw new SchemaViolation(path, lineno, `bad defined flag: ${parts[7]}`);
    let cosTheta: number | null = null;
    if (defined) {
      cosTheta = parseNumber(path, lineno, "cos_theta", parts[6]);
    } else if (parts[6] !== "") {
      throw new SchemaViolation(path, lineno, "undefined cell must have empty cos_theta");
    }
    rows.push({
      cellIndex,
      yMid: parseNumber(path, lineno, "y_mid", parts[1]),
      p1: parseNumber(path, lineno, "p1", parts[2]),
      p2: parseNumber(path, lineno, "p2", parts[3]),
      p12: parseNumber(path, lineno, "p12", parts[4]),
      mixture: parseNumber(path, lineno, "mixture", parts[5]),
      cosTheta,
      defined,
      raw: line,
    });
  }
  if (rows.length === 0) throw new SchemaViolation(path, 0, "no data rows");
  return { path, header, rows };
}

/** Re-emit the parsed data section (header + rows) exactly as read. */
export function dumpDataSection(file: {
  header: string;
  rows: Array<{ raw: string }>;
}): string {
  return [file.header, ...file.rows.map((r) => r.raw)].join("\n") + "\n";
}
