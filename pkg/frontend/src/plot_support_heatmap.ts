/**
 * Heatmap of the assembled global measure at one noise level.  Cylinder
 * measures are drawn as a cell grid with saddle/source markers and the
 * separatrix level curve from model_refs.json; 1d circle measures are drawn
 * as a color strip with the reference attractor points marked.
 *
 * Usage: node plot_support_heatmap.js --report <dir> [--eps <value>]
 *   (writes support_heatmap_eps_<value>.svg beside report.json; defaults to
 *    the smallest swept level)
 */

import { writeFileSync } from "fs";
import { join } from "path";
import { parseArgs, ReportHandle, runPlotScript } from "./report.js";
import { SvgBuilder, esc, heatColor, trim } from "./svg.js";

export function plotSupportHeatmap(dir: string, eps?: number): string {
  const report = new ReportHandle(dir);
  const rec = report.record(eps);
  const measure = report.readMeasure(rec.mu_csv);
  const twoD = measure.centers[0].length === 2;
  const maxMass = Math.max(...measure.mass);

  const width = 720;
  const plotW = 620;
  const x0 = 60;
  let svg: SvgBuilder;
  if (twoD) {
    const [n1, n2] = rec.resolution;
    const plotH = plotW; // cylinder drawn square: x in [0,1), y in [-1,1]
    svg = new SvgBuilder({ width, height: plotH + 110, left: 0, right: 0, top: 0, bottom: 0 });
    svg.title(`measure heatmap, level ${trim(rec.epsilon)} (${report.doc.model.name})`);
    const toPx = (x: number) => x0 + x * plotW;
    const toPy = (y: number) => 50 + (1 - (y + 1) / 2) * plotH;
    const cw = plotW / n1;
    const ch = plotH / n2;
    for (let i = 0; i < measure.cells.length; i++) {
      if (measure.mass[i] <= 0) continue;
      const [cx, cy] = measure.centers[i];
      const t = Math.log1p(measure.mass[i] / maxMass * 1e3) / Math.log1p(1e3);
      svg.raw(`<rect x="${(toPx(cx) - cw / 2).toFixed(2)}" y="${(toPy(cy) - ch / 2).toFixed(2)}" ` +
        `width="${cw.toFixed(2)}" height="${ch.toFixed(2)}" fill="${heatColor(t)}"/>`);
    }
    svg.raw(`<rect x="${x0}" y="50" width="${plotW}" height="${plotH}" fill="none" stroke="black"/>`);
    for (const poly of report.refs.separatrix_polylines ?? []) {
      const pts = poly.map(([x, y]) => `${toPx(x).toFixed(1)},${toPy(y).toFixed(1)}`).join(" ");
      svg.raw(`<polyline points="${pts}" fill="none" stroke="#666666" stroke-width="1" stroke-dasharray="3 3"/>`);
    }
    for (const [sx, sy] of report.refs.saddles ?? []) {
      svg.raw(`<path d="M ${toPx(sx) - 6} ${toPy(sy)} l 6 -6 l 6 6 l -6 6 Z" fill="none" stroke="#0044cc" stroke-width="2"/>`);
      svg.raw(`<text x="${toPx(sx) + 9}" y="${toPy(sy) - 8}" fill="#0044cc">saddle</text>`);
    }
    for (const [sx, sy] of report.refs.sources ?? []) {
      svg.raw(`<circle cx="${toPx(sx)}" cy="${toPy(sy)}" r="5" fill="none" stroke="#008800" stroke-width="2"/>`);
    }
    svg.raw(`<text x="${x0 + plotW / 2}" y="${plotH + 85}" text-anchor="middle">x (circle coordinate)</text>`);
    svg.raw(`<text x="20" y="${50 + plotH / 2}" text-anchor="middle" transform="rotate(-90 20 ${50 + plotH / 2})">y</text>`);
  } else {
    const stripH = 70;
    svg = new SvgBuilder({ width, height: 230, left: 0, right: 0, top: 0, bottom: 0 });
    svg.title(`measure strip, level ${trim(rec.epsilon)} (${report.doc.model.name})`);
    const n = rec.resolution[0];
    const cw = plotW / n;
    for (let i = 0; i < measure.cells.length; i++) {
      const cx = measure.centers[i][0];
      const t = Math.log1p(measure.mass[i] / maxMass * 1e3) / Math.log1p(1e3);
      svg.raw(`<rect x="${(x0 + (cx - 0.5 / n) * plotW).toFixed(2)}" y="60" width="${cw.toFixed(2)}" ` +
        `height="${stripH}" fill="${heatColor(t)}"/>`);
    }
    svg.raw(`<rect x="${x0}" y="60" width="${plotW}" height="${stripH}" fill="none" stroke="black"/>`);
    for (const ref of report.refs.attractors) {
      for (const p of ref.points) {
        const px = x0 + p[0] * plotW;
        svg.raw(`<line x1="${px}" y1="${60 + stripH}" x2="${px}" y2="${60 + stripH + 14}" stroke="#0044cc" stroke-width="2"/>`);
        svg.raw(`<text x="${px}" y="${60 + stripH + 28}" text-anchor="middle" fill="#0044cc">${esc(ref.id)}</text>`);
      }
    }
    for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
      svg.raw(`<text x="${x0 + tick * plotW}" y="52" text-anchor="middle">${tick}</text>`);
    }
  }

  const out = join(dir, `support_heatmap_eps_${trim(rec.epsilon)}.svg`);
  writeFileSync(out, svg.toString());
  return out;
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isMain) {
  runPlotScript(() => {
    const args = parseArgs(process.argv.slice(2), ["--eps"]);
    const eps = args.has("--eps") ? Number(args.get("--eps")) : undefined;
    return plotSupportHeatmap(args.get("--report")!, eps);
  });
}
