/**
 * Decay curves of the distance diagnostics over the sweep: per matched
 * attractor, the transport distance of its stationary measure to the
 * reference measure and the Hausdorff distance of its support to the carrier,
 * on a log noise-level axis.  One panel per attractor.
 *
 * Usage: node plot_convergence.js --report <dir>   (writes convergence.svg)
 */

import { writeFileSync } from "fs";
import { join } from "path";
import { parseArgs, ReportError, ReportHandle, runPlotScript } from "./report.js";
import { Frame, makeScale, SvgBuilder, esc, trim } from "./svg.js";

export function plotConvergence(dir: string): string {
  const report = new ReportHandle(dir);
  const records = report.doc.records;

  interface Panel { id: string; eps: number[]; w1: number[]; hd: number[] }
  const panels: Panel[] = [];
  for (const ref of report.refs.attractors) {
    const panel: Panel = { id: ref.id, eps: [], w1: [], hd: [] };
    for (const rec of records) {
      const cls = rec.classes.find((c) => c.matched === ref.id);
      if (cls && cls.w1_to_reference !== null && cls.hausdorff_to_carrier !== null) {
        panel.eps.push(rec.epsilon);
        panel.w1.push(cls.w1_to_reference);
        panel.hd.push(cls.hausdorff_to_carrier);
      }
    }
    if (panel.eps.length > 0) panels.push(panel);
  }
  if (panels.length === 0) {
    throw new ReportError("no matched attractor has distance data to plot");
  }

  const panelH = 260;
  const width = 640;
  const svg = new SvgBuilder({ width, height: panelH * panels.length + 30, left: 0, right: 0, top: 0, bottom: 0 });
  svg.title(`stationary-measure convergence (${report.doc.model.name})`);
  panels.forEach((panel, k) => {
    const frame: Frame = { width, height: panelH, left: 70, right: 30, top: 30, bottom: 50 };
    const scale = makeScale(frame, panel.eps, [...panel.w1, ...panel.hd], true);
    const offset = 30 + k * panelH;
    svg.raw(`<g transform="translate(0 ${offset})">`);
    const sub = new SvgBuilder(frame);
    const parts: string[] = [];
    sub.axes(scale, "noise level (log)", "distance", trim);
    sub.polyline(scale, panel.eps, panel.w1, "#1f77b4");
    sub.polyline(scale, panel.eps, panel.hd, "#d62728", "5 3");
    sub.legend([["transport to reference", "#1f77b4"], ["Hausdorff to carrier", "#d62728"]]);
    // strip the outer <svg> wrapper of the sub-builder, keep its body
    const body = sub.toString().split("\n").slice(2, -2).join("\n");
    parts.push(body);
    parts.push(`<text x="${frame.left}" y="16" font-size="13">${esc(panel.id)}</text>`);
    svg.raw(parts.join("\n"));
    svg.raw("</g>");
  });

  const out = join(dir, "convergence.svg");
  writeFileSync(out, svg.toString());
  return out;
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isMain) {
  runPlotScript(() => plotConvergence(parseArgs(process.argv.slice(2)).get("--report")!));
}
