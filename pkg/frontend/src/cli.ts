#!/usr/bin/env node
// plotkit render --spec <json>
//
// The spec file lists the figures to produce:
//   { "figures": [ { "kind": "...", "input": "path", "output": "out.svg",
//                    "title": "..." }, ... ] }
// A bare figure object (no "figures" wrapper) is also accepted.

import { readFileSync, writeFileSync } from "node:fs";
import {
  MissingColumn, SERIES_HEADER, SWEEP_HEADER, SchemaMismatch, readCsv,
  readTranslatorManifest,
} from "./schema.js";
import {
  FIGURE_KINDS, FigureKind, eigminSweepFigure, lambdaEpsFigure,
  psiTimelineFigure, tracesFigure,
} from "./figures.js";

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  output: string;
  title?: string;
}

export function renderFigure(spec: FigureSpec): string {
  const title = spec.title ?? spec.kind;
  switch (spec.kind) {
    case "traces":
      return tracesFigure(readCsv(spec.input, SERIES_HEADER), title);
    case "psi_timeline":
      return psiTimelineFigure(readCsv(spec.input, SERIES_HEADER), title);
    case "lambda_eps":
      return lambdaEpsFigure(readTranslatorManifest(spec.input), title);
    case "eigmin_sweep":
      return eigminSweepFigure(readCsv(spec.input, SWEEP_HEADER), title);
    default:
      throw new SchemaMismatch(
        `unknown figure kind ${JSON.stringify(spec.kind)}; ` +
        `expected one of ${FIGURE_KINDS.join(", ")}`);
  }
}

export function runSpecFile(specPath: string): string[] {
  const raw = JSON.parse(readFileSync(specPath, "utf-8"));
  const figures: FigureSpec[] = Array.isArray(raw.figures)
    ? raw.figures
    : [raw as FigureSpec];
  const written: string[] = [];
  for (const fig of figures) {
    if (!fig.kind || !fig.input || !fig.output) {
      throw new SchemaMismatch(
        "figure spec needs kind, input and output fields");
    }
    writeFileSync(fig.output, renderFigure(fig));
    written.push(fig.output);
  }
  return written;
}

export function main(argv: string[]): number {
  if (argv[0] !== "render" || argv[1] !== "--spec" || !argv[2]) {
    process.stderr.write("usage: plotkit render --spec <json>\n");
    return 2;
  }
  try {
    for (const path of runSpecFile(argv[2])) {
      process.stdout.write(path + "\n");
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaMismatch || err instanceof MissingColumn) {
      process.stderr.write(`${err.name}: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
