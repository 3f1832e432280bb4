/** Kind dispatch: read inputs, validate schemas, emit one SVG string. */

import { readFileSync } from "node:fs";

import { aggregateTraces, Series, toSeries } from "./aggregate.js";
import {
  AggregateRow,
  CsvError,
  parseAggregateCsv,
  parseSweepCsv,
  parseTraceCsv,
  sniffKind,
} from "./csv.js";
import { renderCurves, renderHeatmap } from "./svg.js";

export const KINDS = ["curves_linear", "curves_logx", "sweep_heatmap"] as const;
export type Kind = (typeof KINDS)[number];

export interface PlotSpec {
  inputs: string[];
  kind: Kind;
  out: string;
  band: number;
  title?: string;
}

function loadSeries(inputs: string[]): Series[] {
  const traceRows = [];
  const aggregated: AggregateRow[] = [];
  for (const file of inputs) {
    const text = readFileSync(file, "utf-8");
    const kind = sniffKind(text);
    if (kind === "trace") {
      traceRows.push(...parseTraceCsv(file, text));
    } else if (kind === "aggregate") {
      aggregated.push(...parseAggregateCsv(file, text));
    } else {
      throw new CsvError(file, 1, "schema error: neither a trace nor an aggregate CSV");
    }
  }
  if (traceRows.length > 0) {
    aggregated.push(...aggregateTraces(traceRows));
  }
  return toSeries(aggregated);
}

export function renderSpec(spec: PlotSpec): string {
  if (spec.inputs.length === 0) {
    throw new Error("at least one input CSV is required");
  }
  if (spec.band <= 0) {
    throw new Error("band multiplier must be positive");
  }
  if (spec.kind === "sweep_heatmap") {
    if (spec.inputs.length !== 1) {
      throw new Error("sweep_heatmap takes exactly one matrix CSV");
    }
    const text = readFileSync(spec.inputs[0], "utf-8");
    return renderHeatmap(parseSweepCsv(spec.inputs[0], text), { title: spec.title });
  }
  const series = loadSeries(spec.inputs);
  return renderCurves(series, {
    logX: spec.kind === "curves_logx",
    band: spec.band,
    title: spec.title,
  });
}
