/**
 * Figure renderer for harness CSVs.
 *
 * Usage:
 *   plot <inputs...> --kind curves_linear|curves_logx|sweep_heatmap \
 *        --out figure.svg [--band 2] [--title "..."]
 *
 * Exit codes: 0 on success (every input parsed, output written);
 * 1 on malformed input or render failure (diagnostic on stderr);
 * 2 on usage errors.
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { CsvError } from "./csv.js";
import { KINDS, Kind, renderSpec } from "./render.js";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        kind: { type: "string" },
        out: { type: "string" },
        band: { type: "string", default: "2" },
        title: { type: "string" },
      },
    });
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  const { values, positionals } = parsed;
  const kind = values.kind as string | undefined;
  if (!kind || !(KINDS as readonly string[]).includes(kind)) {
    console.error(`usage error: --kind must be one of ${KINDS.join(", ")}`);
    return 2;
  }
  if (!values.out) {
    console.error("usage error: --out <file.svg> is required");
    return 2;
  }
  if (positionals.length === 0) {
    console.error("usage error: at least one input CSV path is required");
    return 2;
  }
  const band = Number(values.band);
  if (!Number.isFinite(band) || band <= 0) {
    console.error(`usage error: --band must be a positive number, got "${values.band}"`);
    return 2;
  }
  try {
    const svg = renderSpec({
      inputs: positionals,
      kind: kind as Kind,
      out: values.out,
      band,
      title: values.title,
    });
    writeFileSync(values.out, svg + "\n", "utf-8");
    console.error(`wrote ${values.out}`);
    return 0;
  } catch (err) {
    if (err instanceof CsvError) {
      console.error(err.message);
    } else {
      console.error(`render failed: ${(err as Error).message}`);
    }
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
