// Figure rendering from cyclodamp artifacts.  Figures read only the
// published CSV/JSON contracts and never recompute physics; all styling
// is fixed so re-rendering identical inputs is byte-identical.

import { ArtifactError, checkSameScenario, readSummary, readTable, requireColumn, Summary, Table } from "./csv.js";
import { apply, frame, seriesPath, MARGIN, WIDTH, HEIGHT } from "./plot.js";

export type FigureKind = "damping" | "echo" | "moments" | "growth" | "norms";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  title?: string;
  overlays?: {
    predicted_echo_time?: number;
    fitted_rate?: number;
    reference_slope?: number;
    growth_eps?: number;
  };
}

export class FigureSpecError extends Error {}

const KINDS: FigureKind[] = ["damping", "echo", "moments", "growth", "norms"];

export function parseSpec(doc: unknown): FigureSpec {
  if (typeof doc !== "object" || doc === null) {
    throw new FigureSpecError("figure spec must be an object");
  }
  const d = doc as Record<string, unknown>;
  const allowed = new Set(["kind", "inputs", "output", "title", "overlays"]);
  for (const key of Object.keys(d)) {
    if (!allowed.has(key)) throw new FigureSpecError(`unknown figure-spec key '${key}'`);
  }
  if (!KINDS.includes(d.kind as FigureKind)) {
    throw new FigureSpecError(`kind must be one of ${KINDS.join("|")}, got '${String(d.kind)}'`);
  }
  if (!Array.isArray(d.inputs) || d.inputs.length === 0) {
    throw new FigureSpecError("inputs must be a non-empty list of paths");
  }
  if (typeof d.output !== "string" || !d.output.endsWith(".svg")) {
    throw new FigureSpecError("output must be an .svg path");
  }
  return d as unknown as FigureSpec;
}

function loadInputs(spec: FigureSpec): { tables: Table[]; summaries: Summary[] } {
  const tables: Table[] = [];
  const summaries: Summary[] = [];
  for (const p of spec.inputs) {
    if (p.endsWith(".json")) summaries.push(readSummary(p));
    else tables.push(readTable(p));
  }
  checkSameScenario([...tables, ...summaries]);
  if (tables.length === 0 && spec.kind !== "norms") {
    throw new ArtifactError(`${spec.kind} figure needs at least one CSV input`);
  }
  return { tables, summaries };
}

function positiveExtent(values: number[]): [number, number] {
  const pos = values.filter((v) => v > 0 && Number.isFinite(v));
  if (pos.length === 0) throw new ArtifactError("no positive values to plot on a log axis");
  return [Math.min(...pos), Math.max(...pos)];
}

export function renderFigure(spec: FigureSpec): string {
  switch (spec.kind) {
    case "damping":
      return renderDamping(spec);
    case "echo":
      return renderEcho(spec);
    case "moments":
      return renderMoments(spec);
    case "growth":
      return renderGrowth(spec);
    case "norms":
      return renderNorms(spec);
  }
}

function renderDamping(spec: FigureSpec): string {
  const { tables, summaries } = loadInputs(spec);
  const tab = tables[0];
  const t = requireColumn(tab, "t");
  const rho = requireColumn(tab, "abs_rho");
  let rate = spec.overlays?.fitted_rate;
  if (rate === undefined && summaries.length > 0) {
    const modes = summaries[0].payload["modes"] as Record<string, Record<string, unknown>> | undefined;
    if (modes) {
      const first = Object.values(modes)[0];
      if (first && typeof first["fit_rate"] === "number") rate = first["fit_rate"] as number;
    }
  }
  const [ylo, yhi] = positiveExtent(rho);
  const floor = Math.max(ylo, yhi * 1e-16);
  const f = frame(
    "linear",
    [t[0], t[t.length - 1]],
    "log",
    [floor, yhi * 2],
    spec.title ?? "density-mode damping",
    "t",
    "|rho_k|",
  );
  seriesPath(f, t, rho, "stroke:#0b5394;stroke-width:1.5", floor);
  if (rate !== undefined) {
    const ipk = rho.indexOf(Math.max(...rho));
    const overlay = t.map((ti) => rho[ipk] * Math.exp(-(rate as number) * (ti - t[ipk])));
    seriesPath(f, t, overlay, "stroke:#cc0000;stroke-width:1;stroke-dasharray:6 3", floor);
    f.svg.text(WIDTH - MARGIN.right - 8, MARGIN.top + 16, `fit rate ${rate.toPrecision(4)}`, "font-size:12px;fill:#cc0000", "end");
  }
  return f.svg.render();
}

function renderEcho(spec: FigureSpec): string {
  const { tables, summaries } = loadInputs(spec);
  const tab = tables[0];
  const t = requireColumn(tab, "t");
  const trace = requireColumn(tab, "abs_rho_echo_mode");
  let predicted = spec.overlays?.predicted_echo_time;
  if (predicted === undefined && summaries.length > 0) {
    const v = summaries[0].payload["predicted_time"];
    if (typeof v === "number") predicted = v;
  }
  const f = frame(
    "linear",
    [t[0], t[t.length - 1]],
    "linear",
    [0, Math.max(...trace) * 1.1 || 1],
    spec.title ?? "plasma echo",
    "t",
    "|rho_echo|",
  );
  seriesPath(f, t, trace, "stroke:#0b5394;stroke-width:1.5");
  if (predicted !== undefined) {
    const px = apply(f.xs, predicted);
    f.svg.line(px, MARGIN.top, px, HEIGHT - MARGIN.bottom, "stroke:#cc0000;stroke-width:1.5;stroke-dasharray:4 3");
    f.svg.text(px, MARGIN.top - 6, `predicted ${predicted}`, "font-size:12px;fill:#cc0000");
  }
  return f.svg.render();
}

function renderMoments(spec: FigureSpec): string {
  const { tables } = loadInputs(spec);
  const tab = tables[0];
  const t = requireColumn(tab, "t");
  const m = requireColumn(tab, "moment");
  const [xlo, xhi] = positiveExtent(t);
  const [ylo, yhi] = positiveExtent(m);
  const f = frame(
    "log",
    [xlo / 1.2, xhi * 1.2],
    "log",
    [ylo / 2, yhi * 2],
    spec.title ?? "forward kernel moment",
    "t",
    "moment",
  );
  seriesPath(f, t, m, "stroke:#0b5394;stroke-width:1.5");
  const slope = spec.overlays?.reference_slope;
  if (slope !== undefined) {
    const anchorY = m[0];
    const ref = t.map((ti) => anchorY * (ti / t[0]) ** slope);
    seriesPath(f, t, ref, "stroke:#cc0000;stroke-width:1;stroke-dasharray:6 3");
    f.svg.text(WIDTH - MARGIN.right - 8, MARGIN.top + 16, `reference slope ${slope}`, "font-size:12px;fill:#cc0000", "end");
  }
  return f.svg.render();
}

function renderGrowth(spec: FigureSpec): string {
  const { tables, summaries } = loadInputs(spec);
  const tab = tables[0];
  const t = requireColumn(tab, "t");
  const phi = requireColumn(tab, "phi");
  let eps = spec.overlays?.growth_eps;
  if (eps === undefined && summaries.length > 0) {
    const v = summaries[0].payload["eps"];
    if (typeof v === "number") eps = v;
  }
  const [ylo, yhi] = positiveExtent(phi);
  const f = frame(
    "linear",
    [t[0], t[t.length - 1]],
    "log",
    [ylo / 2, yhi * 4],
    spec.title ?? "growth-control trajectory",
    "t",
    "phi",
  );
  seriesPath(f, t, phi, "stroke:#0b5394;stroke-width:1.5");
  if (eps !== undefined) {
    const env = t.map((ti) => phi[0] * Math.exp((eps as number) * ti));
    seriesPath(f, t, env, "stroke:#cc0000;stroke-width:1;stroke-dasharray:6 3");
    f.svg.text(WIDTH - MARGIN.right - 8, MARGIN.top + 16, `exp(eps t), eps=${eps}`, "font-size:12px;fill:#cc0000", "end");
  }
  return f.svg.render();
}

function renderNorms(spec: FigureSpec): string {
  const { summaries } = loadInputs(spec);
  if (summaries.length === 0) throw new ArtifactError("norms figure needs the report JSON");
  const items = summaries[0].payload["items"] as Record<string, Record<string, unknown>>;
  if (!items) throw new ArtifactError("norms report missing 'items'");
  const names = Object.keys(items).sort();
  const ratios = names.map((n) => Number(items[n]["worst_ratio"]));
  const f = frame(
    "linear",
    [-0.5, names.length - 0.5],
    "linear",
    [0, Math.max(1.2, ...ratios) * 1.1],
    spec.title ?? "norm-suite worst ratios",
    "",
    "worst LHS/RHS",
  );
  const bw = (WIDTH - MARGIN.left - MARGIN.right) / names.length;
  names.forEach((name, i) => {
    const x0 = MARGIN.left + i * bw + bw * 0.15;
    const yTop = apply(f.ys, ratios[i]);
    const asserted = items[name]["asserted"] === true;
    f.svg.rect(
      x0,
      yTop,
      bw * 0.7,
      HEIGHT - MARGIN.bottom - yTop,
      asserted ? "fill:#0b5394" : "fill:#999999",
    );
    f.svg.text(x0 + bw * 0.35, HEIGHT - MARGIN.bottom + 30, name.slice(0, 14), "font-size:9px;fill:#222");
  });
  const unit = apply(f.ys, 1.0);
  f.svg.line(MARGIN.left, unit, WIDTH - MARGIN.right, unit, "stroke:#cc0000;stroke-width:1;stroke-dasharray:4 3");
  return f.svg.render();
}
