import { describe, expect, it } from "vitest";
import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import {
  MissingColumn, SERIES_HEADER, SWEEP_HEADER, SchemaMismatch, column,
  parseCsv, readTranslatorManifest,
} from "../src/schema.js";
import {
  eigminSweepFigure, lambdaEpsFigure, psiTimelineFigure, tracesFigure,
} from "../src/figures.js";
import { main, renderFigure, runSpecFile } from "../src/cli.js";

const HERE = dirname(fileURLToPath(import.meta.url));

function row(vals: number[]): string {
  return vals.map((v) => v.toExponential(12)).join(",");
}

const SERIES_CSV = [
  SERIES_HEADER,
  row([0, 0.1, 0.05, 0.02, 1.5, -0.3, 0, 0.01]),
  row([0.5, 0.12, 0.04, 0.021, 1.4, -0.28, 0, 0.012]),
  row([1.0, 0.13, 0.035, 0.0205, 1.3, -0.27, 1, 0.011]),
].join("\n") + "\n";

const SWEEP_CSV = [
  SWEEP_HEADER,
  row([0.0, 0.0, 0.02, 0.1, 0.01]),
  row([0.05, 0.01, 0.01, 0.11, 0.012]),
  row([0.2, 0.08, -0.005, 0.13, 0.015]),
].join("\n") + "\n";

const MANIFEST = {
  schema_version: 1,
  epsilon_path: {
    eps: [0.1, 0.05, 0.025],
    lambda: [0.09, 0.07, 0.06],
    osc: [0.01, 0.005, 0.002],
    residual: [1e-10, 1e-10, 1e-10],
    extrapolated_lambda: 0.05,
    observed_order: 1.0,
  },
};

describe("schema readers", () => {
  it("parses a conforming series CSV", () => {
    const t = parseCsv(SERIES_CSV, SERIES_HEADER);
    expect(column(t, "time")).toEqual([0, 0.5, 1.0]);
    expect(column(t, "eigmin_B")[2]).toBeCloseTo(0.011, 12);
  });

  it("rejects a header mismatch", () => {
    expect(() => parseCsv("time,whatever\n1,2\n", SERIES_HEADER))
      .toThrow(SchemaMismatch);
  });

  it("rejects a ragged row", () => {
    expect(() => parseCsv(SERIES_HEADER + "\n1,2,3\n", SERIES_HEADER))
      .toThrow(SchemaMismatch);
  });

  it("reports a missing column by name", () => {
    const t = parseCsv(SERIES_CSV, SERIES_HEADER);
    expect(() => column(t, "no_such")).toThrow(MissingColumn);
  });

  it("rejects a manifest with the wrong schema version", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    const p = join(dir, "t.json");
    writeFileSync(p, JSON.stringify({ ...MANIFEST, schema_version: 99 }));
    expect(() => readTranslatorManifest(p)).toThrow(SchemaMismatch);
  });
});

describe("figure kinds", () => {
  it("renders the trace figure", () => {
    const svg = tracesFigure(parseCsv(SERIES_CSV, SERIES_HEADER), "traces");
    expect(svg).toContain("<svg");
    expect(svg).toContain("sup |Du|");
    expect(svg.length).toBeGreaterThan(500);
  });

  it("renders lambda(eps) with the extrapolant line", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    const p = join(dir, "t.json");
    writeFileSync(p, JSON.stringify(MANIFEST));
    const svg = lambdaEpsFigure(readTranslatorManifest(p), "eps");
    expect(svg).toContain("extrapolant 5.0000e-2");
    expect(svg).toContain("stroke-dasharray");
  });

  it("renders the maximizer timeline with boundary annotations", () => {
    const svg = psiTimelineFigure(parseCsv(SERIES_CSV, SERIES_HEADER), "psi");
    expect(svg).toContain("boundary");
    expect(svg).toContain("interior maximizer");
  });

  it("renders the sweep chart and annotates the sign change", () => {
    const svg = eigminSweepFigure(parseCsv(SWEEP_CSV, SWEEP_HEADER), "sweep");
    expect(svg).toContain("crossing at");
  });

  it("is byte-deterministic", () => {
    const a = tracesFigure(parseCsv(SERIES_CSV, SERIES_HEADER), "traces");
    const b = tracesFigure(parseCsv(SERIES_CSV, SERIES_HEADER), "traces");
    expect(a).toBe(b);
  });
});

describe("cli", () => {
  function writeInputs(dir: string) {
    writeFileSync(join(dir, "series.csv"), SERIES_CSV);
    writeFileSync(join(dir, "summary.csv"), SWEEP_CSV);
    writeFileSync(join(dir, "translator.json"), JSON.stringify(MANIFEST));
  }

  it("renders every figure in a spec file", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    writeInputs(dir);
    const spec = {
      figures: [
        { kind: "traces", input: join(dir, "series.csv"),
          output: join(dir, "traces.svg") },
        { kind: "lambda_eps", input: join(dir, "translator.json"),
          output: join(dir, "eps.svg") },
        { kind: "psi_timeline", input: join(dir, "series.csv"),
          output: join(dir, "psi.svg") },
        { kind: "eigmin_sweep", input: join(dir, "summary.csv"),
          output: join(dir, "sweep.svg") },
      ],
    };
    const sp = join(dir, "spec.json");
    writeFileSync(sp, JSON.stringify(spec));
    const written = runSpecFile(sp);
    expect(written).toHaveLength(4);
    for (const out of written) {
      expect(readFileSync(out, "utf-8")).toContain("</svg>");
    }
  });

  it("exits 1 on a schema mismatch and 2 on bad usage", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    writeFileSync(join(dir, "bad.csv"), "nope\n1\n");
    const sp = join(dir, "spec.json");
    writeFileSync(sp, JSON.stringify({
      kind: "traces", input: join(dir, "bad.csv"),
      output: join(dir, "out.svg"),
    }));
    expect(main(["render", "--spec", sp])).toBe(1);
    expect(main(["oops"])).toBe(2);
  });

  it("rejects an unknown figure kind", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    writeInputs(dir);
    expect(() => renderFigure({
      kind: "pie" as never, input: join(dir, "series.csv"),
      output: join(dir, "out.svg"),
    })).toThrow(SchemaMismatch);
  });
});

describe("solver outputs end to end", () => {
  // fixtures generated by the solver CLI from the long disk scenario
  // (see testdata/README); all four figure kinds must render from them
  const data = join(HERE, "..", "testdata", "run5");

  it("renders all four figure kinds from the long-run outputs", () => {
    expect(existsSync(join(data, "series.csv"))).toBe(true);
    const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
    const figs = [
      { kind: "traces", input: join(data, "series.csv"),
        output: join(dir, "traces.svg"), title: "long disk run" },
      { kind: "psi_timeline", input: join(data, "series.csv"),
        output: join(dir, "psi.svg") },
      { kind: "lambda_eps", input: join(data, "translator.json"),
        output: join(dir, "eps.svg") },
      { kind: "eigmin_sweep", input: join(data, "sweep", "summary.csv"),
        output: join(dir, "sweep.svg") },
    ];
    const sp = join(dir, "spec.json");
    writeFileSync(sp, JSON.stringify({ figures: figs }));
    const written = runSpecFile(sp);
    expect(written).toHaveLength(4);
    for (const out of written) {
      const svg = readFileSync(out, "utf-8");
      expect(svg).toContain("</svg>");
      expect(svg.length).toBeGreaterThan(500);
    }
    expect(readFileSync(join(dir, "eps.svg"), "utf-8"))
      .toContain("extrapolant");
  });
});
