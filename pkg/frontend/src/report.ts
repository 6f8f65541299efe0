/**
 * Reading and validating rdslab sweep report directories.
 *
 * A report directory contains report.json (schema_version 1), model_refs.json,
 * and one eps_<value>/ directory per noise level with measure CSVs.  Measure
 * CSVs start with a "# config: ..." header line, then "cell_index,center_coords,mass";
 * 2d center coordinates are "x;y".  These readers never recompute dynamics:
 * figures are pure functions of the artifact files.
 */

import { readFileSync, existsSync } from "fs";
import { join } from "path";

export const SUPPORTED_SCHEMA = 1;

export interface ClassSummary {
  class_index: number;
  size: number;
  beta: number;
  matched: string | null;
  flag: string;
  w1_to_reference: number | null;
  hausdorff_to_carrier: number | null;
  stationary_csv: string;
}

export interface EpsRecord {
  epsilon: number;
  resolution: number[];
  cell_width: number;
  l: number;
  classes: ClassSummary[];
  beta_sum: number;
  mu_csv: string;
  mc: { distance_to_assembled: number; tolerance: number; csv: string } | null;
  hull: { distance: number; per_function: number[] } | null;
  support_hd_to_carrier_set: number | null;
  checks: Record<string, boolean>;
}

export interface ReportDoc {
  schema_version: number;
  status: string;
  config: Record<string, unknown>;
  model: { name: string; params: Record<string, number>; space: string };
  epsilons: number[];
  records: EpsRecord[];
  thresholds: Record<string, { kind: string; verified_up_to?: number; first_failing?: number }>;
}

export interface AttractorRefDoc {
  id: string;
  description: string;
  kind: string;
  points: number[][];
  basin_arc: [number, number] | null;
  basin_volume: number | null;
}

export interface ModelRefsDoc {
  model: string;
  space: string;
  attractors: AttractorRefDoc[];
  sources?: number[][];
  saddles?: number[][];
  separatrix_level?: number;
  separatrix_polylines?: number[][][];
  degenerate_point?: number;
}

export interface MeasureCsv {
  cells: number[];
  centers: number[][]; // 1 or 2 coordinates per cell
  mass: number[];
}

export class ReportError extends Error {}

export class ReportHandle {
  readonly dir: string;
  readonly doc: ReportDoc;
  readonly refs: ModelRefsDoc;

  constructor(dir: string) {
    this.dir = dir;
    const reportPath = join(dir, "report.json");
    if (!existsSync(reportPath)) {
      throw new ReportError(`no report.json in ${dir}`);
    }
    let parsed: ReportDoc;
    try {
      parsed = JSON.parse(readFileSync(reportPath, "utf8")) as ReportDoc;
    } catch (err) {
      throw new ReportError(`report.json is not valid JSON: ${(err as Error).message}`);
    }
    if (parsed.schema_version !== SUPPORTED_SCHEMA) {
      throw new ReportError(
        `unsupported schema_version ${parsed.schema_version} (supported: ${SUPPORTED_SCHEMA})`);
    }
    if (parsed.status !== "complete") {
      throw new ReportError(`report is marked '${parsed.status}', refusing to plot a partial run`);
    }
    if (!Array.isArray(parsed.records) || parsed.records.length === 0) {
      throw new ReportError("report has no per-level records");
    }
    this.doc = parsed;
    const refsPath = join(dir, "model_refs.json");
    if (!existsSync(refsPath)) {
      throw new ReportError(`no model_refs.json in ${dir}`);
    }
    this.refs = JSON.parse(readFileSync(refsPath, "utf8")) as ModelRefsDoc;
  }

  readMeasure(relPath: string): MeasureCsv {
    const path = join(this.dir, relPath);
    if (!existsSync(path)) {
      throw new ReportError(`missing measure file ${relPath}`);
    }
    const cells: number[] = [];
    const centers: number[][] = [];
    const mass: number[] = [];
    for (const line of readFileSync(path, "utf8").split("\n")) {
      if (!line || line.startsWith("#") || line.startsWith("cell_index")) continue;
      const [idx, coords, m] = line.split(",");
      cells.push(parseInt(idx, 10));
      centers.push(coords.split(";").map(Number));
      mass.push(Number(m));
    }
    if (cells.length === 0) {
      throw new ReportError(`measure file ${relPath} has no rows`);
    }
    return { cells, centers, mass };
  }

  /** The record for a given level, or the smallest level when eps is undefined. */
  record(eps?: number): EpsRecord {
    const records = this.doc.records;
    if (eps === undefined) {
      return records[records.length - 1];
    }
    const rec = records.find((r) => Math.abs(r.epsilon - eps) < 1e-12);
    if (!rec) {
      throw new ReportError(
        `level ${eps} not in report (levels: ${records.map((r) => r.epsilon).join(", ")})`);
    }
    return rec;
  }
}

export function parseArgs(argv: string[], extra: string[] = []): Map<string, string> {
  const known = new Set(["--report", ...extra]);
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!known.has(key) || i + 1 >= argv.length) {
      throw new ReportError(
        `usage: --report <dir>${extra.map((e) => ` [${e} <value>]`).join("")}`);
    }
    out.set(key, argv[i + 1]);
  }
  if (!out.has("--report")) {
    throw new ReportError("missing required --report <dir>");
  }
  return out;
}

export function runPlotScript(main: () => string): void {
  try {
    const written = main();
    console.log(`wrote ${written}`);
  } catch (err) {
    if (err instanceof ReportError) {
      console.error(`error: ${err.message}`);
      process.exit(1);
    }
    throw err;
  }
}
