// Minimal deterministic SVG plotting: fixed canvas, fixed fonts, no
// timestamps or random ids, so identical inputs yield identical bytes.

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { top: 40, right: 24, bottom: 56, left: 72 };

export type ScaleKind = "linear" | "log";

export interface Scale {
  kind: ScaleKind;
  domain: [number, number];
  range: [number, number];
}

export function makeScale(kind: ScaleKind, domain: [number, number], range: [number, number]): Scale {
  if (kind === "log" && (domain[0] <= 0 || domain[1] <= 0)) {
    throw new Error(`log scale needs a positive domain, got [${domain}]`);
  }
  return { kind, domain, range };
}

export function apply(s: Scale, x: number): number {
  const [d0, d1] = s.domain;
  const [r0, r1] = s.range;
  const t =
    s.kind === "log"
      ? (Math.log(x) - Math.log(d0)) / (Math.log(d1) - Math.log(d0))
      : (x - d0) / (d1 - d0);
  return r0 + t * (r1 - r0);
}

export function ticks(s: Scale, count = 6): number[] {
  const [d0, d1] = s.domain;
  if (s.kind === "log") {
    const lo = Math.ceil(Math.log10(d0));
    const hi = Math.floor(Math.log10(d1));
    const out: number[] = [];
    const step = Math.max(1, Math.ceil((hi - lo + 1) / count));
    for (let e = lo; e <= hi; e += step) out.push(10 ** e);
    return out.length >= 2 ? out : [d0, d1];
  }
  const span = d1 - d0;
  if (span <= 0) return [d0];
  const raw = span / count;
  const mag = 10 ** Math.floor(Math.log10(raw));
  const norm = raw / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const out: number[] = [];
  for (let v = Math.ceil(d0 / step) * step; v <= d1 + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function fmt(x: number): string {
  if (x === 0) return "0";
  const ax = Math.abs(x);
  if (ax >= 1e4 || ax < 1e-3) return x.toExponential(0).replace("+", "");
  return String(Number(x.toPrecision(6)));
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class Svg {
  private parts: string[] = [];

  rect(x: number, y: number, w: number, h: number, style: string): void {
    this.parts.push(
      `<rect x="${r6(x)}" y="${r6(y)}" width="${r6(w)}" height="${r6(h)}" style="${style}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, style: string): void {
    this.parts.push(
      `<line x1="${r6(x1)}" y1="${r6(y1)}" x2="${r6(x2)}" y2="${r6(y2)}" style="${style}"/>`,
    );
  }

  polyline(pts: Array<[number, number]>, style: string): void {
    const d = pts.map(([x, y]) => `${r6(x)},${r6(y)}`).join(" ");
    this.parts.push(`<polyline points="${d}" style="fill:none;${style}"/>`);
  }

  text(x: number, y: number, content: string, style: string, anchor = "middle"): void {
    this.parts.push(
      `<text x="${r6(x)}" y="${r6(y)}" text-anchor="${anchor}" style="${style}">${esc(content)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="monospace">\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function r6(x: number): string {
  // fixed-precision coordinates keep the output byte-stable
  return x.toFixed(3);
}

export interface Frame {
  svg: Svg;
  xs: Scale;
  ys: Scale;
}

export function frame(
  xKind: ScaleKind,
  xDomain: [number, number],
  yKind: ScaleKind,
  yDomain: [number, number],
  title: string,
  xLabel: string,
  yLabel: string,
): Frame {
  const svg = new Svg();
  svg.rect(0, 0, WIDTH, HEIGHT, "fill:white");
  const xs = makeScale(xKind, xDomain, [MARGIN.left, WIDTH - MARGIN.right]);
  const ys = makeScale(yKind, yDomain, [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const axisStyle = "stroke:#222;stroke-width:1";
  const gridStyle = "stroke:#ddd;stroke-width:0.5";
  const labelStyle = "font-size:12px;fill:#222";
  for (const tx of ticks(xs)) {
    const px = apply(xs, tx);
    svg.line(px, MARGIN.top, px, HEIGHT - MARGIN.bottom, gridStyle);
    svg.text(px, HEIGHT - MARGIN.bottom + 18, fmt(tx), labelStyle);
  }
  for (const ty of ticks(ys)) {
    const py = apply(ys, ty);
    svg.line(MARGIN.left, py, WIDTH - MARGIN.right, py, gridStyle);
    svg.text(MARGIN.left - 8, py + 4, fmt(ty), labelStyle, "end");
  }
  svg.line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right, HEIGHT - MARGIN.bottom, axisStyle);
  svg.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, axisStyle);
  svg.text(WIDTH / 2, 24, title, "font-size:14px;fill:#111");
  svg.text(WIDTH / 2, HEIGHT - 16, xLabel, labelStyle);
  svg.text(16, HEIGHT / 2, yLabel, labelStyle + ";writing-mode:tb", "middle");
  return { svg, xs, ys };
}

export function seriesPath(
  f: Frame,
  x: number[],
  y: number[],
  style: string,
  yFloor?: number,
): void {
  const pts: Array<[number, number]> = [];
  for (let i = 0; i < x.length; i++) {
    let yi = y[i];
    if (f.ys.kind === "log") {
      if (!(yi > 0)) continue;
      if (yFloor !== undefined && yi < yFloor) yi = yFloor;
    }
    if (x[i] < f.xs.domain[0] || x[i] > f.xs.domain[1]) continue;
    pts.push([apply(f.xs, x[i]), apply(f.ys, yi)]);
  }
  f.svg.polyline(pts, style);
}
