/**
 * Minimal SVG line-chart writer: axes, nice ticks, multi-segment series.
 *
 * A series is a list of polyline segments; gaps between segments are real
 * gaps in the data (e.g. cells where the plotted quantity is undefined)
 * and are never bridged.
 */

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  color: string;
  segments: Point[][];
}

export interface ChartOptions {
  width?: number;
  height?: number;
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

const MARGIN = { top: 42, right: 24, bottom: 46, left: 64 };

function niceTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 1.0;
    lo -= pad;
    hi += pad;
  }
  const span = hi - lo;
  const rawStep = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= rawStep) {
      step = m * mag;
      break;
    }
  }
  const ticks: number[] = [];
  let t = Math.ceil(lo / step) * step;
  for (; t <= hi + step * 1e-9; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return ticks;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.001) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderChart(series: Series[], opts: ChartOptions = {}): string {
  const width = opts.width ?? 840;
  const height = opts.height ?? 480;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const points = series.flatMap((s) => s.segments.flat());
  let xLo = Math.min(...points.map((p) => p.x), Infinity);
  let xHi = Math.max(...points.map((p) => p.x), -Infinity);
  let yLo = Math.min(...points.map((p) => p.y), Infinity);
  let yHi = Math.max(...points.map((p) => p.y), -Infinity);
  if (!isFinite(xLo)) {
    // No data at all: draw an empty frame around the origin.
    xLo = -1; xHi = 1; yLo = -1; yHi = 1;
  }
  if (yLo === yHi) {
    yLo -= 0.5;
    yHi += 0.5;
  }
  const yPad = 0.06 * (yHi - yLo);
  yLo -= yPad;
  yHi += yPad;

  const sx = (x: number) =>
    MARGIN.left + ((x - xLo) / (xHi - xLo || 1)) * plotW;
  const sy = (y: number) =>
    MARGIN.top + plotH - ((y - yLo) / (yHi - yLo || 1)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="13">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  // Gridlines and ticks.
  for (const t of niceTicks(xLo, xHi)) {
    const x = sx(t);
    parts.push(
      `<line x1="${x.toFixed(2)}" y1="${MARGIN.top}" x2="${x.toFixed(2)}" ` +
        `y2="${MARGIN.top + plotH}" stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${x.toFixed(2)}" y="${MARGIN.top + plotH + 18}" ` +
        `text-anchor="middle">${fmtTick(t)}</text>`,
    );
  }
  for (const t of niceTicks(yLo, yHi)) {
    const y = sy(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y.toFixed(2)}" x2="${MARGIN.left + plotW}" ` +
        `y2="${y.toFixed(2)}" stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${(y + 4).toFixed(2)}" ` +
        `text-anchor="end">${fmtTick(t)}</text>`,
    );
  }

  // Frame.
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#333333" stroke-width="1"/>`,
  );

  // Series polylines, one per contiguous segment.
  for (const s of series) {
    for (const seg of s.segments) {
      if (seg.length === 0) continue;
      if (seg.length === 1) {
        const p = seg[0];
        parts.push(
          `<circle cx="${sx(p.x).toFixed(2)}" cy="${sy(p.y).toFixed(2)}" r="2.5" ` +
            `fill="${s.color}"/>`,
        );
        continue;
      }
      const pts = seg
        .map((p) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`)
        .join(" ");
      parts.push(
        `<polyline points="${pts}" fill="none" stroke="${s.color}" stroke-width="1.8"/>`,
      );
    }
  }

  // Legend (top-right inside the frame).
  series.forEach((s, i) => {
    const lx = MARGIN.left + plotW - 160;
    const ly = MARGIN.top + 16 + i * 18;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 26}" y2="${ly - 4}" ` +
        `stroke="${s.color}" stroke-width="2.5"/>`,
    );
    parts.push(`<text x="${lx + 32}" y="${ly}">${escapeXml(s.label)}</text>`);
  });

  if (opts.title) {
    parts.push(
      `<text x="${width / 2}" y="24" text-anchor="middle" font-size="16">` +
        `${escapeXml(opts.title)}</text>`,
    );
  }
  if (opts.xLabel) {
    parts.push(
      `<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" ` +
        `text-anchor="middle">${escapeXml(opts.xLabel)}</text>`,
    );
  }
  if (opts.yLabel) {
    const x = 18;
    const y = MARGIN.top + plotH / 2;
    parts.push(
      `<text x="${x}" y="${y}" text-anchor="middle" ` +
        `transform="rotate(-90 ${x} ${y})">${escapeXml(opts.yLabel)}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
