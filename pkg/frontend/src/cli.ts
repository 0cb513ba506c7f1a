#!/usr/bin/env node
// figures <spec-file>: render one figure spec (or a list of them) to SVG.

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { dirname } from "node:path";
import { ArtifactError } from "./csv.js";
import { FigureSpecError, parseSpec, renderFigure } from "./figures.js";

function main(argv: string[]): number {
  if (argv.length !== 1) {
    console.error("usage: figures <spec-file.json>");
    return 2;
  }
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(argv[0], "utf-8"));
  } catch (err) {
    console.error(`config error: ${(err as Error).message}`);
    return 2;
  }
  const specs = Array.isArray(doc) ? doc : [doc];
  try {
    for (const raw of specs) {
      const spec = parseSpec(raw);
      const svg = renderFigure(spec);
      mkdirSync(dirname(spec.output), { recursive: true });
      writeFileSync(spec.output, svg, "utf-8");
      console.log(`wrote ${spec.output}`);
    }
  } catch (err) {
    if (err instanceof FigureSpecError) {
      console.error(`config error: ${err.message}`);
      return 2;
    }
    if (err instanceof ArtifactError) {
      console.error(`artifact error: ${err.message}`);
      return 2;
    }
    console.error(`failure: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}

process.exit(main(process.argv.slice(2)));
