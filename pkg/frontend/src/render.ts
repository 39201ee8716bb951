/**
 * Figure renderers over the simulator's public CSV schemas.
 *
 * Every renderer is a pure function of the parsed table, so re-rendering a
 * file reproduces the SVG byte for byte.  Heatmap cells whose fidelity falls
 * below the mask threshold are painted pure white (#ffffff); white is used
 * nowhere else in the document, so masked cells can be counted directly.
 */

import { SchemaError, Table, distinct, requireColumns, toNumber } from "./csv.js";
import {
  axes,
  fmt,
  heatColor,
  legend,
  linearScale,
  polyline,
  seriesColor,
  svgDocument,
  text,
  trimNumber,
} from "./svg.js";

export type PlotKind = "decay" | "fidelity" | "heatmap" | "echo" | "t2";

export interface PlotSpec {
  kind: PlotKind;
  input: string;
  output: string;
  mask: number;
}

export const MASK_FILL = "#ffffff";

const PLOT_W = 720;
const PLOT_H = 420;
const MARGIN = { left: 64, right: 150, top: 28, bottom: 48 };

interface Series {
  label: string;
  points: Array<[number, number]>;
}

function curvePlot(series: Series[], xLabel: string, yLabel: string, title: string): string {
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  if (xs.length === 0) throw new SchemaError("no data rows to plot");
  const xScale = linearScale(Math.min(...xs), Math.max(...xs), MARGIN.left, PLOT_W - MARGIN.right);
  const yMin = Math.min(0, Math.min(...ys));
  const yMax = Math.max(1, Math.max(...ys));
  const yScale = linearScale(yMin, yMax, PLOT_H - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [];
  parts.push(text(MARGIN.left, 18, title, 13));
  parts.push(
    axes(MARGIN.left, MARGIN.top, PLOT_W - MARGIN.right, PLOT_H - MARGIN.bottom, xScale, yScale, xLabel, yLabel),
  );
  series.forEach((s, i) => {
    parts.push(
      polyline(
        s.points.map(([x, y]) => [xScale(x), yScale(y)] as [number, number]),
        seriesColor(i),
      ),
    );
  });
  parts.push(
    legend(
      PLOT_W - MARGIN.right + 12,
      MARGIN.top + 12,
      series.map((s, i) => [s.label, seriesColor(i)] as [string, string]),
    ),
  );
  return svgDocument(PLOT_W, PLOT_H, parts.join("\n"));
}

function groupSeries(
  table: Table,
  keyCols: number[],
  xCol: number,
  yCol: number,
): Series[] {
  const order: string[] = [];
  const byKey = new Map<string, Array<[number, number]>>();
  for (const row of table.rows) {
    const key = keyCols.map((c) => row[c]).join(" ");
    const x = toNumber(row[xCol]);
    const y = toNumber(row[yCol]);
    if (!Number.isFinite(x) || !Number.isFinite(y)) continue;
    if (!byKey.has(key)) {
      byKey.set(key, []);
      order.push(key);
    }
    byKey.get(key)!.push([x, y]);
  }
  return order.map((label) => ({ label, points: byKey.get(label)! }));
}

/** fig2/fig6-style tables: time plus fidelity or magnetization columns. */
export function renderDecay(table: Table): string {
  const [seqCol, timeCol] = requireColumns(table, ["sequence", "time"], "decay");
  if (table.columns.includes("fidelity")) {
    const yCol = table.columns.indexOf("fidelity");
    return curvePlot(groupSeries(table, [seqCol], timeCol, yCol), "time", "process fidelity", "fidelity decay");
  }
  if (table.columns.includes("mx") && table.columns.includes("my")) {
    const keyCols = [seqCol];
    if (table.columns.includes("initial_axis")) keyCols.push(table.columns.indexOf("initial_axis"));
    const mx = table.columns.indexOf("mx");
    const my = table.columns.indexOf("my");
    // transverse magnitude is the natural decay observable for both schemas
    const order: string[] = [];
    const byKey = new Map<string, Array<[number, number]>>();
    for (const row of table.rows) {
      const key = keyCols.map((c) => row[c]).join(" ");
      const t = toNumber(row[timeCol]);
      const m = Math.hypot(toNumber(row[mx]), toNumber(row[my]));
      if (!byKey.has(key)) {
        byKey.set(key, []);
        order.push(key);
      }
      byKey.get(key)!.push([t, m]);
    }
    const series = order.map((label) => ({ label, points: byKey.get(label)! }));
    return curvePlot(series, "time", "|transverse magnetization|", "magnetization decay");
  }
  throw new SchemaError(
    `plot kind 'decay' needs a 'fidelity' or 'mx'/'my' column in header [${table.columns.join(", ")}]`,
  );
}

/** fig4-style tables: epsilon sweep with a fidelity column per row. */
export function renderFidelity(table: Table): string {
  const [seqCol, epsCol, fidCol] = requireColumns(
    table,
    ["sequence", "epsilon", "fidelity_propagator"],
    "fidelity",
  );
  const series = groupSeries(table, [seqCol], epsCol, fidCol);
  return curvePlot(series, "flip-angle error", "fidelity", "fidelity vs flip-angle error");
}

/** fig7-style tables: decoherence time vs duty cycle (inf points skipped). */
export function renderT2(table: Table): string {
  const [seqCol, dutyCol, t2Col] = requireColumns(table, ["sequence", "duty_cycle", "t2"], "t2");
  const series = groupSeries(table, [seqCol], dutyCol, t2Col);
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  if (xs.length === 0) throw new SchemaError("no finite t2 values to plot");
  const xScale = linearScale(Math.min(...xs), Math.max(...xs), MARGIN.left, PLOT_W - MARGIN.right);
  const yScale = linearScale(0, Math.max(...ys), PLOT_H - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [];
  parts.push(text(MARGIN.left, 18, "decoherence time vs duty cycle", 13));
  parts.push(
    axes(MARGIN.left, MARGIN.top, PLOT_W - MARGIN.right, PLOT_H - MARGIN.bottom, xScale, yScale, "duty cycle", "T2"),
  );
  series.forEach((s, i) => {
    const pts = s.points.map(([x, y]) => [xScale(x), yScale(y)] as [number, number]);
    parts.push(polyline(pts, seriesColor(i)));
    for (const [px, py] of pts) {
      parts.push(`<circle cx="${fmt(px)}" cy="${fmt(py)}" r="3" fill="${seriesColor(i)}"/>`);
    }
  });
  parts.push(
    legend(PLOT_W - MARGIN.right + 12, MARGIN.top + 12, series.map((s, i) => [s.label, seriesColor(i)])),
  );
  return svgDocument(PLOT_W, PLOT_H, parts.join("\n"));
}

/** fig3-style tables: pulse ticks and echo markers per sequence band. */
export function renderEcho(table: Table): string {
  const [seqCol, markerCol, , timeCol] = requireColumns(
    table,
    ["sequence", "marker", "index", "time"],
    "echo",
  );
  const sequences = distinct(table, seqCol);
  const times = table.rows.map((r) => toNumber(r[timeCol]));
  const xScale = linearScale(0, Math.max(...times), MARGIN.left, PLOT_W - MARGIN.right);
  const bandH = 64;
  const height = MARGIN.top + sequences.length * bandH + MARGIN.bottom;
  const parts: string[] = [];
  parts.push(text(MARGIN.left, 18, "pulse and echo positions", 13));
  sequences.forEach((seq, i) => {
    const y0 = MARGIN.top + i * bandH + 20;
    parts.push(text(MARGIN.left, y0 - 6, seq, 11));
    parts.push(
      `<line x1="${fmt(MARGIN.left)}" y1="${fmt(y0 + 18)}" x2="${fmt(PLOT_W - MARGIN.right)}" y2="${fmt(
        y0 + 18,
      )}" stroke="#888888"/>`,
    );
    for (const row of table.rows) {
      if (row[seqCol] !== seq) continue;
      const px = xScale(toNumber(row[timeCol]));
      if (row[markerCol] === "pulse") {
        parts.push(
          `<line x1="${fmt(px)}" y1="${fmt(y0)}" x2="${fmt(px)}" y2="${fmt(y0 + 18)}" ` +
            `stroke="#222222" stroke-width="2"/>`,
        );
      } else {
        parts.push(`<circle cx="${fmt(px)}" cy="${fmt(y0 + 18)}" r="4" fill="${seriesColor(1)}"/>`);
      }
    }
  });
  parts.push(text((MARGIN.left + PLOT_W - MARGIN.right) / 2, height - 14, "time", 12, "middle"));
  return svgDocument(PLOT_W, height, parts.join("\n"));
}

/** fig5-style tables: one masked heatmap panel per sequence. */
export function renderHeatmap(table: Table, mask: number): string {
  const [seqCol, epsCol, deltaCol, fidCol] = requireColumns(
    table,
    ["sequence", "epsilon", "delta", "fidelity"],
    "heatmap",
  );
  const sequences = distinct(table, seqCol);
  const panelSize = 220;
  const gap = 44;
  const cols = Math.min(3, sequences.length);
  const rowsN = Math.ceil(sequences.length / cols);
  const width = MARGIN.left + cols * (panelSize + gap);
  const height = MARGIN.top + rowsN * (panelSize + gap) + 20;
  const parts: string[] = [];
  parts.push(text(MARGIN.left, 18, `fidelity maps (white: F < ${trimNumber(mask)})`, 13));
  sequences.forEach((seq, i) => {
    const px0 = MARGIN.left + (i % cols) * (panelSize + gap);
    const py0 = MARGIN.top + Math.floor(i / cols) * (panelSize + gap) + 16;
    const rows = table.rows.filter((r) => r[seqCol] === seq);
    const eps = Array.from(new Set(rows.map((r) => toNumber(r[epsCol])))).sort((a, b) => a - b);
    const deltas = Array.from(new Set(rows.map((r) => toNumber(r[deltaCol])))).sort((a, b) => a - b);
    const cellW = panelSize / eps.length;
    const cellH = panelSize / deltas.length;
    const epsIndex = new Map(eps.map((v, k) => [v, k]));
    const deltaIndex = new Map(deltas.map((v, k) => [v, k]));
    parts.push(text(px0, py0 - 4, seq, 12));
    for (const row of rows) {
      const ix = epsIndex.get(toNumber(row[epsCol]))!;
      const iy = deltaIndex.get(toNumber(row[deltaCol]))!;
      const f = toNumber(row[fidCol]);
      const fill = f < mask ? MASK_FILL : heatColor((f - mask) / (1 - mask || 1));
      const x = px0 + ix * cellW;
      // delta axis points up: last index at the top
      const y = py0 + (deltas.length - 1 - iy) * cellH;
      parts.push(
        `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(cellW + 0.01)}" height="${fmt(cellH + 0.01)}" fill="${fill}"/>`,
      );
    }
    parts.push(
      `<rect x="${fmt(px0)}" y="${fmt(py0)}" width="${panelSize}" height="${panelSize}" ` +
        `fill="none" stroke="#222222"/>`,
    );
    parts.push(text(px0 + panelSize / 2, py0 + panelSize + 14, "flip-angle error", 10, "middle"));
    parts.push(
      `<text x="${fmt(px0 - 8)}" y="${fmt(py0 + panelSize / 2)}" font-size="10" text-anchor="middle" ` +
        `fill="#222222" transform="rotate(-90 ${fmt(px0 - 8)} ${fmt(py0 + panelSize / 2)})">offset</text>`,
    );
  });
  return svgDocument(width, height, parts.join("\n"));
}

export function render(kind: PlotKind, table: Table, mask: number): string {
  switch (kind) {
    case "decay":
      return renderDecay(table);
    case "fidelity":
      return renderFidelity(table);
    case "heatmap":
      return renderHeatmap(table, mask);
    case "echo":
      return renderEcho(table);
    case "t2":
      return renderT2(table);
    default:
      throw new SchemaError(`unknown plot kind '${kind as string}'`);
  }
}

/** Number of masked (pure white) cells in a rendered document. */
export function countMaskedCells(svg: string): number {
  return svg.split(`fill="${MASK_FILL}"`).length - 1;
}
