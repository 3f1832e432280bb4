/** Collapse per-run traces into mean curves with standard errors. */

import { AggregateRow, TraceRow } from "./csv.js";

export function aggregateTraces(rows: TraceRow[]): AggregateRow[] {
  const groups = new Map<string, Map<number, number[]>>();
  const labels = new Map<string, string>();
  for (const r of rows) {
    const key = r.algo;
    labels.set(key, r.instance);
    let byT = groups.get(key);
    if (!byT) {
      byT = new Map();
      groups.set(key, byT);
    }
    let vals = byT.get(r.t);
    if (!vals) {
      vals = [];
      byT.set(r.t, vals);
    }
    vals.push(r.cumRegret);
  }
  const out: AggregateRow[] = [];
  for (const [algo, byT] of [...groups.entries()].sort()) {
    const counts = new Set([...byT.values()].map((v) => v.length));
    if (counts.size > 1) {
      throw new Error(`misaligned checkpoint grids for algorithm "${algo}"`);
    }
    for (const t of [...byT.keys()].sort((a, b) => a - b)) {
      const vals = byT.get(t)!;
      const n = vals.length;
      const mean = vals.reduce((a, b) => a + b, 0) / n;
      let stderr = 0;
      if (n > 1) {
        const ss = vals.reduce((a, b) => a + (b - mean) * (b - mean), 0);
        stderr = Math.sqrt(ss / (n - 1)) / Math.sqrt(n);
      }
      out.push({ algo, instance: labels.get(algo)!, t, mean, stderr, reps: n });
    }
  }
  return out;
}

export interface Series {
  label: string;
  points: { t: number; mean: number; stderr: number }[];
}

export function toSeries(rows: AggregateRow[]): Series[] {
  const byAlgo = new Map<string, Series>();
  for (const r of rows) {
    let s = byAlgo.get(r.algo);
    if (!s) {
      s = { label: r.algo, points: [] };
      byAlgo.set(r.algo, s);
    }
    s.points.push({ t: r.t, mean: r.mean, stderr: r.stderr });
  }
  const series = [...byAlgo.values()];
  for (const s of series) {
    s.points.sort((a, b) => a.t - b.t);
  }
  return series.sort((a, b) => a.label.localeCompare(b.label));
}
