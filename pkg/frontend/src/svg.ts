/** Headless SVG chart rendering with an invertible data embedding.
 *
 * Every series is drawn as a polyline whose raw data pairs are also stored
 * verbatim in a data-points attribute, so tests (and downstream tooling) can
 * extract exactly the point set that was rendered without re-parsing pixels.
 */

import { scaleLinear, scaleLog } from "d3-scale";

export interface Series {
  label: string;
  points: [number, number][];
  color?: string;
  dashed?: boolean;
  markers?: boolean;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale?: "linear" | "log";
  yScale?: "linear" | "log";
  width?: number;
  height?: number;
  series: Series[];
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 34, right: 18, bottom: 44, left: 62 };

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function extent(values: number[], log: boolean): [number, number] {
  const ok = values.filter((v) => Number.isFinite(v) && (!log || v > 0));
  if (ok.length === 0) {
    throw new Error("no finite data to plot");
  }
  let lo = Math.min(...ok);
  let hi = Math.max(...ok);
  if (lo === hi) {
    // degenerate span: widen symmetrically so flat series stay visible
    if (log) {
      lo /= 2;
      hi *= 2;
    } else {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  return [lo, hi];
}

function makeScale(kind: "linear" | "log", domain: [number, number], range: [number, number]) {
  const scale = kind === "log" ? scaleLog() : scaleLinear();
  return scale.domain(domain).range(range).nice();
}

export function renderChart(spec: ChartSpec): string {
  const width = spec.width ?? 480;
  const height = spec.height ?? 360;
  const xKind = spec.xScale ?? "linear";
  const yKind = spec.yScale ?? "linear";
  const xs = spec.series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = spec.series.flatMap((s) => s.points.map((p) => p[1]));
  const x = makeScale(xKind, extent(xs, xKind === "log"), [MARGIN.left, width - MARGIN.right]);
  const y = makeScale(yKind, extent(ys, yKind === "log"), [height - MARGIN.bottom, MARGIN.top]);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="18" text-anchor="middle" font-size="13">${esc(spec.title)}</text>`
  );

  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333"/>`
  );

  const xTicks = x.ticks(xKind === "log" ? 5 : 6);
  for (const t of xTicks) {
    const px = x(t);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#333"/>`);
    parts.push(
      `<text x="${px}" y="${y0 + 16}" text-anchor="middle">${esc(formatTick(t))}</text>`
    );
  }
  const yTicks = y.ticks(yKind === "log" ? 5 : 6);
  for (const t of yTicks) {
    const py = y(t);
    parts.push(`<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 6}" y="${py + 3}" text-anchor="end">${esc(formatTick(t))}</text>`
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${height - 8}" text-anchor="middle">${esc(spec.xLabel)}</text>`
  );
  parts.push(
    `<text x="14" y="${(y0 + y1) / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 14 ${(y0 + y1) / 2})">${esc(spec.yLabel)}</text>`
  );

  spec.series.forEach((series, i) => {
    const color = series.color ?? PALETTE[i % PALETTE.length];
    const drawable = series.points.filter(
      (p) =>
        Number.isFinite(p[0]) &&
        Number.isFinite(p[1]) &&
        (xKind !== "log" || p[0] > 0) &&
        (yKind !== "log" || p[1] > 0)
    );
    const pixels = drawable.map((p) => `${x(p[0]).toFixed(2)},${y(p[1]).toFixed(2)}`);
    const data = series.points.map((p) => `${p[0]},${p[1]}`).join(" ");
    const dash = series.dashed ? ` stroke-dasharray="6 4"` : "";
    parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="1.6"${dash} ` +
        `points="${pixels.join(" ")}" data-series="${esc(series.label)}" data-points="${esc(data)}"/>`
    );
    if (series.markers ?? true) {
      for (const p of drawable) {
        parts.push(
          `<circle cx="${x(p[0]).toFixed(2)}" cy="${y(p[1]).toFixed(2)}" r="2.4" fill="${color}"/>`
        );
      }
    }
    const ly = MARGIN.top + 14 * i + 10;
    parts.push(
      `<line x1="${x1 - 86}" y1="${ly}" x2="${x1 - 64}" y2="${ly}" stroke="${color}" stroke-width="1.6"${dash}/>`
    );
    parts.push(`<text x="${x1 - 60}" y="${ly + 3}">${esc(series.label)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n");
}

function formatTick(value: number): string {
  if (value !== 0 && (Math.abs(value) < 1e-3 || Math.abs(value) >= 1e4)) {
    return value.toExponential(0);
  }
  return `${Number(value.toPrecision(4))}`;
}

/** Recover every rendered series' exact data pairs from an SVG document. */
export function extractSeries(svg: string): { label: string; points: [number, number][] }[] {
  const out: { label: string; points: [number, number][] }[] = [];
  const re = /<polyline [^>]*data-series="([^"]*)" data-points="([^"]*)"/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(svg)) !== null) {
    const label = match[1];
    const points = match[2]
      .split(" ")
      .filter((s) => s.length > 0)
      .map((pair) => {
        const [a, b] = pair.split(",");
        return [Number(a), Number(b)] as [number, number];
      });
    out.push({ label, points });
  }
  return out;
}
