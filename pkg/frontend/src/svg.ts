/** Minimal SVG chart helpers: line charts with log-x axes, hatched spans, heat cells. */

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DEFAULT_FRAME: Frame = { width: 720, height: 440, left: 70, right: 30, top: 40, bottom: 55 };

export interface Scale {
  toX(v: number): number;
  toY(v: number): number;
  xTicks: number[];
  yTicks: number[];
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= n + 1) ?? 10 * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12 * span; v += chosen) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export function makeScale(frame: Frame, xs: number[], ys: number[], logX: boolean): Scale {
  const xlo = Math.min(...xs);
  const xhi = Math.max(...xs);
  let ylo = Math.min(...ys, 0);
  let yhi = Math.max(...ys);
  if (yhi === ylo) yhi = ylo + 1;
  yhi += 0.05 * (yhi - ylo);
  const fx = logX
    ? (v: number) => (Math.log(v) - Math.log(xlo)) / (Math.log(xhi) - Math.log(xlo) || 1)
    : (v: number) => (v - xlo) / (xhi - xlo || 1);
  return {
    toX: (v) => frame.left + fx(v) * (frame.width - frame.left - frame.right),
    toY: (v) => frame.height - frame.bottom
      - ((v - ylo) / (yhi - ylo)) * (frame.height - frame.top - frame.bottom),
    xTicks: logX ? xs.slice() : niceTicks(xlo, xhi),
    yTicks: niceTicks(ylo, yhi),
  };
}

export class SvgBuilder {
  private parts: string[] = [];
  constructor(readonly frame: Frame) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" ` +
      `viewBox="0 0 ${frame.width} ${frame.height}" font-family="sans-serif" font-size="12">`);
    this.parts.push(`<rect width="${frame.width}" height="${frame.height}" fill="white"/>`);
  }

  raw(s: string): void {
    this.parts.push(s);
  }

  title(text: string): void {
    this.parts.push(
      `<text x="${this.frame.width / 2}" y="20" text-anchor="middle" font-size="15">${esc(text)}</text>`);
  }

  axes(scale: Scale, xLabel: string, yLabel: string, fmtX = (v: number) => trim(v)): void {
    const f = this.frame;
    const x0 = f.left, x1 = f.width - f.right, y0 = f.height - f.bottom, y1 = f.top;
    this.parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
    this.parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
    for (const t of scale.xTicks) {
      const x = scale.toX(t);
      this.parts.push(`<line x1="${x}" y1="${y0}" x2="${x}" y2="${y0 + 5}" stroke="black"/>`);
      this.parts.push(`<text x="${x}" y="${y0 + 20}" text-anchor="middle">${fmtX(t)}</text>`);
    }
    for (const t of scale.yTicks) {
      const y = scale.toY(t);
      this.parts.push(`<line x1="${x0 - 5}" y1="${y}" x2="${x0}" y2="${y}" stroke="black"/>`);
      this.parts.push(`<text x="${x0 - 8}" y="${y + 4}" text-anchor="end">${trim(t)}</text>`);
      this.parts.push(`<line x1="${x0}" y1="${y}" x2="${x1}" y2="${y}" stroke="#eeeeee"/>`);
    }
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${f.height - 12}" text-anchor="middle">${esc(xLabel)}</text>`);
    this.parts.push(
      `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`);
  }

  polyline(scale: Scale, xs: number[], ys: number[], color: string, dash = ""): void {
    const pts = xs.map((x, i) => `${scale.toX(x).toFixed(2)},${scale.toY(ys[i]).toFixed(2)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="2"${dashAttr}/>`);
    for (let i = 0; i < xs.length; i++) {
      this.parts.push(
        `<circle cx="${scale.toX(xs[i]).toFixed(2)}" cy="${scale.toY(ys[i]).toFixed(2)}" r="3" fill="${color}"/>`);
    }
  }

  hline(scale: Scale, y: number, color: string): void {
    const f = this.frame;
    this.parts.push(
      `<line x1="${f.left}" y1="${scale.toY(y)}" x2="${f.width - f.right}" y2="${scale.toY(y)}" ` +
      `stroke="${color}" stroke-width="1.5" stroke-dasharray="6 4"/>`);
  }

  hatchedSpan(scale: Scale, xLo: number, xHi: number, label: string): void {
    const f = this.frame;
    const x0 = scale.toX(xLo);
    const x1 = scale.toX(xHi);
    this.ensureHatchPattern();
    this.parts.push(
      `<rect x="${Math.min(x0, x1)}" y="${f.top}" width="${Math.abs(x1 - x0)}" ` +
      `height="${f.height - f.top - f.bottom}" fill="url(#hatch)" opacity="0.55"/>`);
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${f.top + 14}" text-anchor="middle" fill="#884400">${esc(label)}</text>`);
  }

  private hatchDefined = false;
  private ensureHatchPattern(): void {
    if (this.hatchDefined) return;
    this.hatchDefined = true;
    this.parts.push(
      `<defs><pattern id="hatch" width="8" height="8" patternTransform="rotate(45)" ` +
      `patternUnits="userSpaceOnUse"><line x1="0" y1="0" x2="0" y2="8" stroke="#cc8844" ` +
      `stroke-width="2"/></pattern></defs>`);
  }

  legend(entries: Array<[string, string]>): void {
    const f = this.frame;
    let y = f.top + 8;
    for (const [label, color] of entries) {
      this.parts.push(
        `<line x1="${f.width - f.right - 150}" y1="${y}" x2="${f.width - f.right - 125}" y2="${y}" ` +
        `stroke="${color}" stroke-width="3"/>`);
      this.parts.push(`<text x="${f.width - f.right - 118}" y="${y + 4}">${esc(label)}</text>`);
      y += 18;
    }
  }

  toString(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function heatColor(t: number): string {
  // 0 -> near white, 1 -> dark red through orange
  const clamped = Math.max(0, Math.min(1, t));
  const r = Math.round(255 - 80 * clamped);
  const g = Math.round(247 - 200 * clamped);
  const b = Math.round(240 - 220 * clamped);
  return `rgb(${r},${g},${b})`;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"];

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function trim(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.001 && a < 10000) return Number(v.toPrecision(4)).toString();
  return v.toExponential(1);
}
