/** Small deterministic SVG helpers; no runtime dependencies. */

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  const r = Math.round(v * 100) / 100;
  return Object.is(r, -0) ? "0" : String(r);
}

export function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Scale {
  (v: number): number;
  min: number;
  max: number;
}

export function linearScale(min: number, max: number, outMin: number, outMax: number): Scale {
  const span = max - min || 1;
  const fn = ((v: number) => outMin + ((v - min) / span) * (outMax - outMin)) as Scale;
  fn.min = min;
  fn.max = max;
  return fn;
}

export function ticks(min: number, max: number, count = 5): number[] {
  if (!(max > min)) return [min];
  const step = (max - min) / (count - 1);
  return Array.from({ length: count }, (_, i) => min + i * step);
}

/** Categorical palette; never emits pure white (reserved for masked cells). */
export const SERIES_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export function seriesColor(i: number): string {
  return SERIES_COLORS[i % SERIES_COLORS.length];
}

/** Two-stop blue-to-red map on [0, 1] for heatmap cells above the mask. */
export function heatColor(t: number): string {
  const clamp = Math.min(1, Math.max(0, t));
  const r = Math.round(40 + clamp * (215 - 40));
  const g = Math.round(60 + clamp * (45 - 60));
  const b = Math.round(190 - clamp * (190 - 55));
  return `rgb(${r},${g},${b})`;
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
    body +
    "\n</svg>\n"
  );
}

export function polyline(points: Array<[number, number]>, color: string, width = 1.5): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline fill="none" stroke="${color}" stroke-width="${width}" points="${pts}"/>`;
}

export function text(x: number, y: number, s: string, size = 11, anchor = "start"): string {
  return (
    `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" ` +
    `fill="#222222">${escapeText(s)}</text>`
  );
}

export function axes(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  xScale: Scale,
  yScale: Scale,
  xLabel: string,
  yLabel: string,
): string {
  const parts: string[] = [];
  parts.push(`<line x1="${fmt(x0)}" y1="${fmt(y1)}" x2="${fmt(x1)}" y2="${fmt(y1)}" stroke="#222222"/>`);
  parts.push(`<line x1="${fmt(x0)}" y1="${fmt(y0)}" x2="${fmt(x0)}" y2="${fmt(y1)}" stroke="#222222"/>`);
  for (const t of ticks(xScale.min, xScale.max)) {
    const px = xScale(t);
    parts.push(`<line x1="${fmt(px)}" y1="${fmt(y1)}" x2="${fmt(px)}" y2="${fmt(y1 + 4)}" stroke="#222222"/>`);
    parts.push(text(px, y1 + 16, trimNumber(t), 10, "middle"));
  }
  for (const t of ticks(yScale.min, yScale.max)) {
    const py = yScale(t);
    parts.push(`<line x1="${fmt(x0 - 4)}" y1="${fmt(py)}" x2="${fmt(x0)}" y2="${fmt(py)}" stroke="#222222"/>`);
    parts.push(text(x0 - 6, py + 3, trimNumber(t), 10, "end"));
  }
  parts.push(text((x0 + x1) / 2, y1 + 32, xLabel, 12, "middle"));
  parts.push(
    `<text x="${fmt(x0 - 34)}" y="${fmt((y0 + y1) / 2)}" font-size="12" text-anchor="middle" ` +
      `fill="#222222" transform="rotate(-90 ${fmt(x0 - 34)} ${fmt((y0 + y1) / 2)})">${escapeText(yLabel)}</text>`,
  );
  return parts.join("\n");
}

export function trimNumber(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a >= 10000 || a < 0.001)) return v.toExponential(1);
  return String(Math.round(v * 1000) / 1000);
}

export function legend(x: number, y: number, entries: Array<[string, string]>): string {
  const parts: string[] = [];
  entries.forEach(([label, color], i) => {
    const py = y + i * 16;
    parts.push(`<rect x="${fmt(x)}" y="${fmt(py - 8)}" width="12" height="8" fill="${color}"/>`);
    parts.push(text(x + 18, py, label, 11));
  });
  return parts.join("\n");
}
