/**
 * CLI:
 *   plot overlay      --out FIG p1.csv p2.csv p12.csv [--dump]
 *   plot interference --out FIG interference.csv [--dump]
 *
 * --dump re-emits the parsed data section of every input (header and data
 * rows, comments stripped) to stdout, byte-identical to the input files;
 * it is the no-rendering escape hatch for verifying that plotting never
 * alters data.
 */

import { writeFileSync } from "node:fs";
import process from "node:process";

import { SchemaViolation, dumpDataSection, readHistogram, readInterference } from "./csv.js";
import { interferenceFigure, overlayFigure } from "./figures.js";

export interface CliResult {
  code: number;
  stdout: string;
  stderr: string;
}

interface ParsedArgs {
  kind: string;
  out: string | null;
  dump: boolean;
  inputs: string[];
}

function parseArgs(argv: string[]): ParsedArgs | string {
  if (argv.length === 0) return "usage: plot overlay|interference --out FIG [inputs...]";
  const kind = argv[0];
  if (kind !== "overlay" && kind !== "interference") {
    return `unknown figure kind: ${kind} (expected overlay or interference)`;
  }
  let out: string | null = null;
  let dump = false;
  const inputs: string[] = [];
  for (let i = 1; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--out") {
      out = argv[++i] ?? null;
      if (out === null) return "--out requires a path";
    } else if (a === "--dump") {
      dump = true;
    } else if (a.startsWith("--")) {
      return `unknown flag: ${a}`;
    } else {
      inputs.push(a);
    }
  }
  return { kind, out, dump, inputs };
}

export function run(argv: string[]): CliResult {
  const parsed = parseArgs(argv);
  if (typeof parsed === "string") {
    return { code: 1, stdout: "", stderr: parsed + "\n" };
  }
  const { kind, out, dump, inputs } = parsed;

  try {
    if (kind === "overlay") {
      if (inputs.length !== 3) {
        return {
          code: 1,
          stdout: "",
          stderr: "overlay needs exactly 3 inputs: p1.csv p2.csv p12.csv\n",
        };
      }
      if (dump) {
        const text = inputs.map((p) => dumpDataSection(readHistogram(p))).join("");
        return { code: 0, stdout: text, stderr: "" };
      }
      if (!out) return { code: 1, stdout: "", stderr: "--out is required\n" };
      const { svg } = overlayFigure(inputs[0], inputs[1], inputs[2]);
      writeFileSync(out, svg);
      return { code: 0, stdout: `overlay figure -> ${out}\n`, stderr: "" };
    }

    // interference
    if (inputs.length !== 1) {
      return {
        code: 1,
        stdout: "",
        stderr: "interference needs exactly 1 input: interference.csv\n",
      };
    }
    if (dump) {
      const text = dumpDataSection(readInterference(inputs[0]));
      return { code: 0, stdout: text, stderr: "" };
    }
    if (!out) return { code: 1, stdout: "", stderr: "--out is required\n" };
    const { svg, nDefined } = interferenceFigure(inputs[0]);
    writeFileSync(out, svg);
    const warning =
      nDefined === 0
        ? "warning: every cell is undefined; the plot is empty\n"
        : "";
    return {
      code: 0,
      stdout: `interference figure -> ${out}\n`,
      stderr: warning,
    };
  } catch (err) {
    if (err instanceof SchemaViolation) {
      return { code: 2, stdout: "", stderr: `schema violation: ${err.message}\n` };
    }
    throw err;
  }
}

const isDirectRun =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;

if (isDirectRun) {
  const result = run(process.argv.slice(2));
  process.stdout.write(result.stdout);
  process.stderr.write(result.stderr);
  process.exit(result.code);
}
