// Readers for cyclodamp artifacts: CSV tables and JSON summaries, both
// carrying a provenance header (cyclodamp-version, scenario-hash, ...).

import { readFileSync } from "node:fs";

export interface Table {
  meta: Record<string, string>;
  columns: Map<string, number[]>;
  path: string;
}

export interface Summary {
  meta: Record<string, string>;
  payload: Record<string, unknown>;
  path: string;
}

export class ArtifactError extends Error {}

export function readTable(path: string): Table {
  const text = readFileSync(path, "utf-8");
  const meta: Record<string, string> = {};
  let header: string[] | null = null;
  const rows: string[][] = [];
  for (const line of text.split(/\r?\n/)) {
    if (line.startsWith("#")) {
      const idx = line.indexOf(":");
      if (idx > 0) meta[line.slice(1, idx).trim()] = line.slice(idx + 1).trim();
    } else if (line.trim() === "") {
      continue;
    } else if (header === null) {
      header = line.split(",");
    } else {
      rows.push(line.split(","));
    }
  }
  if (!meta["scenario-hash"]) {
    throw new ArtifactError(`${path}: missing runner metadata header`);
  }
  if (header === null) {
    throw new ArtifactError(`${path}: no column header row`);
  }
  const columns = new Map<string, number[]>();
  header.forEach((name, j) => {
    columns.set(
      name,
      rows.map((r) => Number(r[j])),
    );
  });
  return { meta, columns, path };
}

export function readSummary(path: string): Summary {
  const doc = JSON.parse(readFileSync(path, "utf-8")) as Record<string, unknown>;
  const meta = (doc["meta"] ?? {}) as Record<string, string>;
  if (!meta["scenario-hash"]) {
    throw new ArtifactError(`${path}: missing runner metadata header`);
  }
  const payload: Record<string, unknown> = { ...doc };
  delete payload["meta"];
  return { meta, payload, path };
}

export function requireColumn(table: Table, name: string): number[] {
  const col = table.columns.get(name);
  if (!col) {
    const have = [...table.columns.keys()].join(", ");
    throw new ArtifactError(`${table.path}: missing column '${name}' (have: ${have})`);
  }
  return col;
}

export function checkSameScenario(parts: Array<Table | Summary>): void {
  const hashes = new Set(parts.map((p) => p.meta["scenario-hash"]));
  if (hashes.size > 1) {
    throw new ArtifactError(
      `scenario-hash mismatch across overlaid inputs: ${[...hashes].join(" vs ")}`,
    );
  }
}
