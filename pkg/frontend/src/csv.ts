/**
 * Strict parsers for the harness CSV schemas.
 *
 * Three file kinds are understood: per-run traces, aggregate curves and
 * sweep matrices. Every malformed input fails with a file:line diagnostic
 * rather than producing a partial plot.
 */

import Papa from "papaparse";

export const TRACE_HEADER = [
  "algo",
  "instance",
  "seed",
  "t",
  "cum_regret",
  "gamma",
  "s_t",
  "exploit_rounds",
  "concentration_ok",
] as const;

export const AGGREGATE_HEADER = [
  "algo",
  "instance",
  "t",
  "mean_regret",
  "stderr",
  "reps",
] as const;

export class CsvError extends Error {
  constructor(
    readonly file: string,
    readonly line: number | null,
    detail: string,
  ) {
    super(line === null ? `${file}: ${detail}` : `${file}:${line}: ${detail}`);
    this.name = "CsvError";
  }
}

export interface TraceRow {
  algo: string;
  instance: string;
  seed: number;
  t: number;
  cumRegret: number;
  gamma: number;
  sT: number;
  exploitRounds: number;
  concentrationOk: boolean;
}

export interface AggregateRow {
  algo: string;
  instance: string;
  t: number;
  mean: number;
  stderr: number;
  reps: number;
}

export interface SweepMatrix {
  betas: number[];
  etas: string[];
  /** values[i][j] is the final mean regret at (betas[i], etas[j]). */
  values: number[][];
}

function tokenize(file: string, text: string): string[][] {
  if (text.length === 0) {
    throw new CsvError(file, null, "empty file");
  }
  // The schema terminates every row with LF; a file that stops mid-line
  // was cut off (possibly inside a number, which no field check can see).
  if (!text.endsWith("\n")) {
    const line = text.split("\n").length;
    throw new CsvError(file, line, "file ends mid-line (truncated?)");
  }
  const parsed = Papa.parse<string[]>(text.trim(), {
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    const line = first.row === undefined ? null : first.row + 1;
    throw new CsvError(file, line, first.message);
  }
  if (parsed.data.length === 0) {
    throw new CsvError(file, null, "empty file");
  }
  return parsed.data;
}

function requireHeader(
  file: string,
  got: string[],
  want: readonly string[],
): void {
  if (got.length !== want.length || want.some((w, i) => got[i] !== w)) {
    throw new CsvError(
      file,
      1,
      `schema error: expected columns "${want.join(",")}", got "${got.join(",")}"`,
    );
  }
}

function num(file: string, line: number, field: string, raw: string): number {
  const v = Number(raw);
  if (raw.trim() === "" || !Number.isFinite(v)) {
    throw new CsvError(file, line, `field "${field}" is not a finite number: "${raw}"`);
  }
  return v;
}

/** Sniff which schema a CSV carries from its header line. */
export function sniffKind(text: string): "trace" | "aggregate" | "sweep" | "unknown" {
  const header = text.split("\n", 1)[0].trim();
  if (header === TRACE_HEADER.join(",")) return "trace";
  if (header === AGGREGATE_HEADER.join(",")) return "aggregate";
  if (header.startsWith("beta,")) return "sweep";
  return "unknown";
}

export function parseTraceCsv(file: string, text: string): TraceRow[] {
  const rows = tokenize(file, text);
  requireHeader(file, rows[0], TRACE_HEADER);
  return rows.slice(1).map((parts, i) => {
    const line = i + 2;
    if (parts.length !== TRACE_HEADER.length) {
      throw new CsvError(
        file,
        line,
        `truncated row: expected ${TRACE_HEADER.length} fields, got ${parts.length}`,
      );
    }
    return {
      algo: parts[0],
      instance: parts[1],
      seed: num(file, line, "seed", parts[2]),
      t: num(file, line, "t", parts[3]),
      cumRegret: num(file, line, "cum_regret", parts[4]),
      gamma: num(file, line, "gamma", parts[5]),
      sT: num(file, line, "s_t", parts[6]),
      exploitRounds: num(file, line, "exploit_rounds", parts[7]),
      concentrationOk: parts[8] === "1",
    };
  });
}

export function parseAggregateCsv(file: string, text: string): AggregateRow[] {
  const rows = tokenize(file, text);
  requireHeader(file, rows[0], AGGREGATE_HEADER);
  return rows.slice(1).map((parts, i) => {
    const line = i + 2;
    if (parts.length !== AGGREGATE_HEADER.length) {
      throw new CsvError(
        file,
        line,
        `truncated row: expected ${AGGREGATE_HEADER.length} fields, got ${parts.length}`,
      );
    }
    return {
      algo: parts[0],
      instance: parts[1],
      t: num(file, line, "t", parts[2]),
      mean: num(file, line, "mean_regret", parts[3]),
      stderr: num(file, line, "stderr", parts[4]),
      reps: num(file, line, "reps", parts[5]),
    };
  });
}

export function parseSweepCsv(file: string, text: string): SweepMatrix {
  const rows = tokenize(file, text);
  const header = rows[0];
  if (header[0] !== "beta" || header.length < 2) {
    throw new CsvError(file, 1, `schema error: expected "beta,<eta...>", got "${header.join(",")}"`);
  }
  const etas = header.slice(1);
  const betas: number[] = [];
  const values: number[][] = [];
  rows.slice(1).forEach((parts, i) => {
    const line = i + 2;
    if (parts.length !== header.length) {
      throw new CsvError(
        file,
        line,
        `truncated row: expected ${header.length} fields, got ${parts.length}`,
      );
    }
    betas.push(num(file, line, "beta", parts[0]));
    values.push(parts.slice(1).map((raw, j) => num(file, line, `eta ${etas[j]}`, raw)));
  });
  if (betas.length === 0) {
    throw new CsvError(file, null, "sweep matrix has no rows");
  }
  return { betas, etas, values };
}
