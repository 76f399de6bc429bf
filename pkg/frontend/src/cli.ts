#!/usr/bin/env node
/** Batch figure generation from solver CSV outputs. */

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { basename, join } from "node:path";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { plotConvergence } from "./convergence.js";
import { plotMidline, plotTransients } from "./mandel.js";

function load(paths: string[], strip: RegExp) {
  return paths.map((p) => ({
    label: basename(p).replace(strip, "").replace(/^[_-]+|[_-]+$/g, "") || basename(p),
    csv: readFileSync(p, "utf8"),
  }));
}

function writeAll(outDir: string, prefix: string, figures: Record<string, string>) {
  mkdirSync(outDir, { recursive: true });
  for (const [name, svg] of Object.entries(figures)) {
    const path = join(outDir, `${prefix}_${name}.svg`);
    writeFileSync(path, svg);
    console.log(`wrote ${path}`);
  }
}

await yargs(hideBin(process.argv))
  .command(
    "convergence <csv>",
    "log-log error decay with a reference slope triangle",
    (y) =>
      y
        .positional("csv", { type: "string", demandOption: true })
        .option("degree", { type: "number", default: 0 })
        .option("out", { type: "string", default: "figures" }),
    (argv) => {
      const svg = plotConvergence(readFileSync(argv.csv, "utf8"), {
        degree: argv.degree,
      });
      mkdirSync(argv.out, { recursive: true });
      const path = join(argv.out, `convergence_k${argv.degree}.svg`);
      writeFileSync(path, svg);
      console.log(`wrote ${path}`);
    }
  )
  .command(
    "transients <csv...>",
    "normalized probe histories; several CSVs overlay as labelled series",
    (y) =>
      y
        .positional("csv", { type: "string", array: true, demandOption: true })
        .option("out", { type: "string", default: "figures" }),
    (argv) => {
      const inputs = load(argv.csv as string[], /mandel_transients|\.csv/g);
      writeAll(argv.out, "transients", plotTransients(inputs));
    }
  )
  .command(
    "midline <csv...>",
    "normalized mid-line profiles at selected times",
    (y) =>
      y
        .positional("csv", { type: "string", array: true, demandOption: true })
        .option("out", { type: "string", default: "figures" }),
    (argv) => {
      const inputs = load(argv.csv as string[], /mandel_midline|\.csv/g);
      writeAll(argv.out, "midline", plotMidline(inputs));
    }
  )
  .demandCommand(1)
  .strict()
  .fail((msg, err) => {
    console.error(msg ?? err?.message);
    process.exit(2);
  })
  .parse();
