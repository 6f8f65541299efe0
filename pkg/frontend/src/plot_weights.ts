/**
 * Per-attractor weight curves over the swept noise levels, with horizontal
 * reference lines at the oracle basin volumes; levels where classes merged
 * are rendered as a hatched span.
 *
 * Usage: node plot_weights.js --report <dir>   (writes weights.svg beside report.json)
 */

import { writeFileSync } from "fs";
import { join } from "path";
import { parseArgs, ReportError, ReportHandle, runPlotScript } from "./report.js";
import { DEFAULT_FRAME, makeScale, PALETTE, SvgBuilder, trim } from "./svg.js";

export function plotWeights(dir: string): string {
  const report = new ReportHandle(dir);
  const records = report.doc.records;
  const epsilons = records.map((r) => r.epsilon);

  const refIds = report.refs.attractors.map((a) => a.id);
  if (refIds.length === 0) {
    throw new ReportError("model_refs.json lists no attractors to plot");
  }
  const series = new Map<string, { eps: number[]; beta: number[] }>();
  for (const id of refIds) series.set(id, { eps: [], beta: [] });
  const mergedLevels: number[] = [];
  for (const rec of records) {
    if (rec.classes.some((c) => c.flag === "merged")) mergedLevels.push(rec.epsilon);
    for (const cls of rec.classes) {
      if (cls.matched && series.has(cls.matched)) {
        series.get(cls.matched)!.eps.push(rec.epsilon);
        series.get(cls.matched)!.beta.push(cls.beta);
      }
    }
  }

  const allBeta = [...series.values()].flatMap((s) => s.beta);
  const refVolumes = report.refs.attractors
    .map((a) => a.basin_volume)
    .filter((v): v is number => v !== null);
  const svg = new SvgBuilder(DEFAULT_FRAME);
  const scale = makeScale(DEFAULT_FRAME, epsilons, [...allBeta, ...refVolumes, 1], true);
  svg.title(`weights per attractor vs noise level (${report.doc.model.name})`);
  svg.axes(scale, "noise level (log)", "weight", trim);
  for (const v of refVolumes) {
    svg.hline(scale, v, "#999999");
  }
  if (mergedLevels.length > 0) {
    svg.hatchedSpan(scale, Math.min(...mergedLevels), Math.max(...mergedLevels), "merged");
  }
  const legend: Array<[string, string]> = [];
  refIds.forEach((id, i) => {
    const s = series.get(id)!;
    const color = PALETTE[i % PALETTE.length];
    if (s.eps.length > 0) svg.polyline(scale, s.eps, s.beta, color);
    legend.push([id, color]);
  });
  svg.legend(legend);

  const out = join(dir, "weights.svg");
  writeFileSync(out, svg.toString());
  return out;
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isMain) {
  runPlotScript(() => plotWeights(parseArgs(process.argv.slice(2)).get("--report")!));
}
