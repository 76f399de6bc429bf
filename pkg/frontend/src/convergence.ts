/** Log-log error-decay figure for the refinement-study CSV. */

import { CONVERGENCE_ERROR_COLUMNS, parseConvergence } from "./csv.js";
import { renderChart, Series } from "./svg.js";

export interface ConvergenceOptions {
  /** polynomial degree k; the reference slope drawn is k+1 */
  degree?: number;
  title?: string;
}

const LABELS: Record<string, string> = {
  e0_d: "strain L2",
  e1_p: "pressure H1",
  ediv_sigma: "stress H(div)",
  e0_u: "displacement L2",
  e0_gamma: "rotation L2",
};

/** Slope of a log-log series over its last two points. */
export function lastSlope(points: [number, number][]): number {
  const [a, b] = points.slice(-2);
  if (a[1] === b[1]) {
    return 0;
  }
  return Math.log(a[1] / b[1]) / Math.log(a[0] / b[0]);
}

export function plotConvergence(csvText: string, options: ConvergenceOptions = {}): string {
  const table = parseConvergence(csvText);
  const degree = options.degree ?? 0;
  const series: Series[] = CONVERGENCE_ERROR_COLUMNS.map((col) => ({
    label: LABELS[col],
    points: table.rows.map((r) => [r.h, r[col]] as [number, number]),
  }));

  // reference triangle with slope k+1 anchored under the last two meshes
  const order = degree + 1;
  const h0 = table.rows[table.rows.length - 2].h;
  const h1 = table.rows[table.rows.length - 1].h;
  const floor = Math.min(...series.map((s) => s.points[s.points.length - 1][1]));
  const anchor = floor / 2;
  const slope = lastSlope(series[0].points);
  series.push({
    label: `O(h^${order}) ref`,
    points: [
      [h0, anchor * Math.pow(h0 / h1, order)],
      [h0, anchor],
      [h1, anchor],
      [h0, anchor * Math.pow(h0 / h1, order)],
    ],
    color: "#666",
    dashed: true,
    markers: false,
  });

  return renderChart({
    title: options.title ?? `error decay (k=${degree}, measured slope ${slope.toFixed(1)})`,
    xLabel: "mesh size h",
    yLabel: "error",
    xScale: "log",
    yScale: "log",
    series,
  });
}
