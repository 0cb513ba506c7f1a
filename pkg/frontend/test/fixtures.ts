// Shared fixture helpers: artifacts in the runner's published format.

import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "cyclodamp-fig-"));
}

export function metaLines(hash = "deadbeef00112233"): string {
  return [
    "# cyclodamp-version: 0.1.0",
    `# scenario-hash: ${hash}`,
    "# scenario-name: fixture",
    "# conventions: fourier=exp(-2pi i k.x); faraday=dB/dt=2pi i kxE; weights=l1",
  ].join("\n");
}

export function writeEchoTrace(dir: string, hash = "deadbeef00112233"): string {
  const rows: string[] = [];
  for (let i = 0; i <= 250; i++) {
    const t = i * 0.1;
    const peak = Math.exp(-0.5 * (t - 20.0) ** 2 * 4.0) * 2.5e-5;
    rows.push(`${t},${peak}`);
  }
  const path = join(dir, "echo_trace.csv");
  writeFileSync(path, `${metaLines(hash)}\nt,abs_rho_echo_mode\n${rows.join("\n")}\n`);
  return path;
}

export function writeDampingTrace(dir: string, hash = "deadbeef00112233"): string {
  const rows: string[] = [];
  for (let i = 0; i <= 200; i++) {
    const t = i * 0.02;
    rows.push(`${t},${0.01 * Math.exp(-3.0 * t) * (0.6 + 0.4 * Math.cos(12 * t))}`);
  }
  const path = join(dir, "damping.csv");
  writeFileSync(path, `${metaLines(hash)}\nt,abs_rho\n${rows.join("\n")}\n`);
  return path;
}

export function writeMomentsTable(dir: string, hash = "deadbeef00112233"): string {
  const rows: string[] = [];
  for (const t of [600, 1200, 2400, 4800]) {
    rows.push(`${t},${500.0 / t},${20000.0 / t}`);
  }
  const path = join(dir, "moments.csv");
  writeFileSync(path, `${metaLines(hash)}\nt,moment,bound_shape\n${rows.join("\n")}\n`);
  return path;
}

export function writeGrowthTable(dir: string, hash = "deadbeef00112233"): string {
  const rows: string[] = [];
  for (let i = 0; i <= 200; i++) {
    const t = i * 1.0;
    rows.push(`${t},${Math.exp(0.02 * t)}`);
  }
  const path = join(dir, "growth.csv");
  writeFileSync(path, `${metaLines(hash)}\nt,phi\n${rows.join("\n")}\n`);
  return path;
}

export function writeEchoSummary(dir: string, hash = "deadbeef00112233"): string {
  const doc = {
    meta: {
      "cyclodamp-version": "0.1.0",
      "scenario-hash": hash,
      "scenario-name": "fixture",
    },
    predicted_time: 20.0,
    peak_time: 20.0,
    dt_output: 0.05,
  };
  const path = join(dir, "echo_summary.json");
  writeFileSync(path, JSON.stringify(doc, null, 2));
  return path;
}

export function writeNormsReport(dir: string, hash = "deadbeef00112233"): string {
  const doc = {
    meta: {
      "cyclodamp-version": "0.1.0",
      "scenario-hash": hash,
      "scenario-name": "fixture",
    },
    all_asserted_pass: true,
    items: {
      x_only_reduction: { samples: 20, worst_ratio: 1.0, asserted: true, pass: true },
      y_below_z1: { samples: 20, worst_ratio: 0.45, asserted: true, pass: true },
      v_multiplier: { samples: 20, worst_ratio: 1.04, asserted: false, pass: null },
    },
  };
  const path = join(dir, "norms_report.json");
  writeFileSync(path, JSON.stringify(doc, null, 2));
  return path;
}
