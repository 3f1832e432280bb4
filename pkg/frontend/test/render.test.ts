import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { renderSpec } from "../src/render.js";
import { renderCurves, renderHeatmap } from "../src/svg.js";
import { parseSweepCsv } from "../src/csv.js";

function curvePoints(svg: string, label: string): [number, number][] {
  const re = new RegExp(
    `<polyline class="curve" data-label="${label}" data-points="([^"]*)"`,
  );
  const m = svg.match(re);
  expect(m).not.toBeNull();
  return m![1].split(";").map((pair) => {
    const [t, v] = pair.split(":");
    return [Number(t), Number(v)];
  });
}

describe("curve rendering", () => {
  const flat = [
    {
      label: "const",
      points: [1, 2, 4, 8].map((t) => ({ t, mean: 3.5, stderr: 0 })),
    },
  ];

  it("renders a constant trace as a flat line with a zero-width band", () => {
    const svg = renderCurves(flat, { logX: false, band: 2 });
    const pts = curvePoints(svg, "const");
    expect(new Set(pts.map(([, v]) => v)).size).toBe(1);
    const band = svg.match(/<polygon class="band"[^>]*points="([^"]*)"/);
    expect(band).not.toBeNull();
    const ys = band![1]
      .split(" ")
      .map((p) => Number(p.split(",")[1]));
    expect(Math.max(...ys) - Math.min(...ys)).toBeLessThan(1e-9);
  });

  it("draws one labeled curve per algorithm", () => {
    const two = [
      { label: "a", points: [{ t: 1, mean: 1, stderr: 0 }, { t: 2, mean: 2, stderr: 0 }] },
      { label: "b", points: [{ t: 1, mean: 2, stderr: 0 }, { t: 2, mean: 3, stderr: 0 }] },
    ];
    const svg = renderCurves(two, { logX: false, band: 2 });
    expect(svg.match(/class="curve"/g)).toHaveLength(2);
    expect(svg).toContain('>a</text>');
    expect(svg).toContain('>b</text>');
  });

  it("uses a logarithmic time axis when asked", () => {
    const series = [
      {
        label: "s",
        points: [10, 100, 1000].map((t) => ({ t, mean: t, stderr: 0 })),
      },
    ];
    const svg = renderCurves(series, { logX: true, band: 2 });
    const m = svg.match(/<polyline class="curve"[^>]*points="([^"]*)"/);
    const xs = m![1].split(" ").map((p) => Number(p.split(",")[0]));
    // equal spacing in log10(t)
    expect(xs[1] - xs[0]).toBeCloseTo(xs[2] - xs[1], 6);
  });

  it("is deterministic", () => {
    const a = renderCurves(flat, { logX: false, band: 2 });
    const b = renderCurves(flat, { logX: false, band: 2 });
    expect(a).toBe(b);
  });
});

describe("heatmap rendering", () => {
  it("draws one cell per matrix entry with its value embedded", () => {
    const m = parseSweepCsv("s.csv", "beta,auto,0.5,2\n0.25,10,12,9\n1,7,8,11\n");
    const svg = renderHeatmap(m, {});
    expect(svg.match(/class="cell"/g)).toHaveLength(6);
    expect(svg).toContain('data-beta="0.25" data-eta="auto" data-value="10"');
  });
});

describe("renderSpec end to end", () => {
  it("aggregates per-run traces and plots both panels", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    for (const seed of [0, 1]) {
      const lines = ["algo,instance,seed,t,cum_regret,gamma,s_t,exploit_rounds,concentration_ok"];
      for (const t of [1, 2, 4]) {
        lines.push(`ids,eoo,${seed},${t},${t + seed},0,${t},0,1`);
      }
      writeFileSync(join(dir, `run${seed}.csv`), lines.join("\n") + "\n");
    }
    for (const kind of ["curves_linear", "curves_logx"] as const) {
      const svg = renderSpec({
        inputs: [join(dir, "run0.csv"), join(dir, "run1.csv")],
        kind,
        out: "unused.svg",
        band: 2,
      });
      const pts = curvePoints(svg, "ids");
      expect(pts.map(([t]) => t)).toEqual([1, 2, 4]);
      expect(pts.map(([, v]) => v)).toEqual([1.5, 2.5, 4.5]);
    }
  });
});
