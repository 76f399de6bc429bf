/** Consolidation-benchmark figures: probe transients and mid-line profiles.
 *
 * Raw CSVs stay unnormalized on disk; the caption normalization constants
 * are applied here only, and default to the reference figure values.
 */

import { z } from "zod";

import { parseMidline, parseTransients, Table } from "./csv.js";
import { renderChart } from "./svg.js";

export const NormalizationSchema = z.object({
  pStar: z.number().default(60),
  sigmaAxialStar: z.number().default(-100),
  sigmaRadialStar: z.number().default(8),
  uxStar: z.number().default(0.04),
  uyStar: z.number().default(-0.04),
  dStar: z.number().default(0.07),
  sigmaMidlineStar: z.number().default(4),
});

export type Normalization = z.infer<typeof NormalizationSchema>;

export interface LabeledCsv {
  label: string;
  csv: string;
}

function seriesFrom(
  inputs: { label: string; table: Table }[],
  xCol: string,
  yCol: string,
  scale: number
) {
  return inputs.map(({ label, table }) => ({
    label,
    points: table.rows.map((r) => [r[xCol], r[yCol] / scale] as [number, number]),
  }));
}

/** One SVG per probe quantity; multiple inputs overlay as labelled series. */
export function plotTransients(
  inputs: LabeledCsv[],
  norms: Partial<Normalization> = {}
): Record<string, string> {
  const n = NormalizationSchema.parse(norms);
  const tables = inputs.map(({ label, csv }) => ({ label, table: parseTransients(csv) }));
  const panels: [string, string, number, string][] = [
    ["pressure", "p_probe1", n.pStar, `p(0,H/2) / ${n.pStar}`],
    ["axial_stress", "syy_probe2", n.sigmaAxialStar, `syy(L/2,H) / ${n.sigmaAxialStar}`],
    ["radial_stress", "sxx_probe2", n.sigmaRadialStar, `sxx(L/2,H) / ${n.sigmaRadialStar}`],
    ["ux", "ux_probe2", n.uxStar, `ux(L/2,H) / ${n.uxStar}`],
    ["uy", "uy_probe2", n.uyStar, `uy(L/2,H) / ${n.uyStar}`],
  ];
  const out: Record<string, string> = {};
  for (const [name, col, scale, ylabel] of panels) {
    out[name] = renderChart({
      title: `${name.replace("_", " ")} transient`,
      xLabel: "t [s]",
      yLabel: ylabel,
      series: seriesFrom(tables, "t", col, scale),
    });
  }
  return out;
}

/** Mid-line profiles at selected times; inputs overlay (times and variants). */
export function plotMidline(
  inputs: LabeledCsv[],
  norms: Partial<Normalization> = {}
): Record<string, string> {
  const n = NormalizationSchema.parse(norms);
  const tables = inputs.map(({ label, csv }) => ({ label, table: parseMidline(csv) }));
  const panels: [string, string, number, string][] = [
    ["pressure", "p", n.pStar, `p / ${n.pStar}`],
    ["axial_strain", "dyy", n.dStar, `dyy / ${n.dStar}`],
    ["radial_strain", "dxx", n.dStar, `dxx / ${n.dStar}`],
    ["axial_stress", "syy", n.sigmaMidlineStar, `syy / ${n.sigmaMidlineStar}`],
    ["ux", "ux", 1, "ux [m]"],
  ];
  const out: Record<string, string> = {};
  for (const [name, col, scale, ylabel] of panels) {
    out[name] = renderChart({
      title: `mid-line ${name.replace("_", " ")}`,
      xLabel: "x [m]",
      yLabel: ylabel,
      series: seriesFrom(tables, "x", col, scale),
    });
  }
  return out;
}
