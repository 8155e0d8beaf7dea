/**
 * The two figures built from simulator output:
 *
 * - overlay: the classical mixture (P1+P2)/2 against the both-slits P12,
 *   probability versus detector coordinate;
 * - interference: cos(theta) versus detector coordinate, with undefined
 *   cells rendered as gaps (never interpolated across).
 */

import {
  HistogramFile,
  InterferenceFile,
  SchemaViolation,
  readHistogram,
  readInterference,
} from "./csv.js";
import { Point, Series, renderChart } from "./svg.js";

export function checkGridsMatch(files: HistogramFile[]): void {
  const ref = files[0];
  for (const f of files.slice(1)) {
    if (f.rows.length !== ref.rows.length) {
      throw new SchemaViolation(
        f.path,
        0,
        `grid mismatch: ${f.rows.length} cells vs ${ref.rows.length} in ${ref.path}`,
      );
    }
    for (let k = 0; k < ref.rows.length; k++) {
      if (f.rows[k].yLo !== ref.rows[k].yLo || f.rows[k].yHi !== ref.rows[k].yHi) {
        throw new SchemaViolation(
          f.path,
          0,
          `grid mismatch at cell ${k}: [${f.rows[k].yLo}, ${f.rows[k].yHi}] vs ` +
            `[${ref.rows[k].yLo}, ${ref.rows[k].yHi}]`,
        );
      }
    }
  }
}

export function overlayFigure(
  p1Path: string,
  p2Path: string,
  p12Path: string,
): { svg: string; files: HistogramFile[] } {
  const files = [readHistogram(p1Path), readHistogram(p2Path), readHistogram(p12Path)];
  checkGridsMatch(files);
  const [f1, f2, f12] = files;
  const mid = (k: number) => (f1.rows[k].yLo + f1.rows[k].yHi) / 2;
  const mixture: Point[] = f1.rows.map((_, k) => ({
    x: mid(k),
    y: (f1.rows[k].probability + f2.rows[k].probability) / 2,
  }));
  const both: Point[] = f12.rows.map((r, k) => ({ x: mid(k), y: r.probability }));
  const series: Series[] = [
    { label: "(P1 + P2) / 2", color: "#1f77b4", segments: [mixture] },
    { label: "P12", color: "#d62728", segments: [both] },
  ];
  const svg = renderChart(series, {
    title: "Detector distributions: classical mixture vs both slits open",
    xLabel: "detector coordinate y",
    yLabel: "probability per cell",
  });
  return { svg, files };
}

/** Split interference rows into contiguous defined segments. */
export function definedSegments(file: InterferenceFile): Point[][] {
  const segments: Point[][] = [];
  let current: Point[] = [];
  for (const r of file.rows) {
    if (r.defined && r.cosTheta !== null) {
      current.push({ x: r.yMid, y: r.cosTheta });
    } else if (current.length > 0) {
      segments.push(current);
      current = [];
    }
  }
  if (current.length > 0) segments.push(current);
  return segments;
}

export function interferenceFigure(path: string): {
  svg: string;
  file: InterferenceFile;
  nDefined: number;
} {
  const file = readInterference(path);
  const segments = definedSegments(file);
  const nDefined = segments.reduce((n, s) => n + s.length, 0);
  const series: Series[] = [
    { label: "cos(theta)", color: "#2ca02c", segments },
  ];
  const svg = renderChart(series, {
    title: "Interference term",
    xLabel: "detector coordinate y",
    yLabel: "cos(theta)",
  });
  return { svg, file, nDefined };
}
