/**
 * Hand-built SVG figures: regret curves with confidence bands on a linear
 * or logarithmic time axis, and a value heatmap for the sweep matrix.
 *
 * Rendering is a pure function of the parsed data, so a rerun over the
 * same CSVs plots identical coordinates.
 */

import { Series } from "./aggregate.js";
import { SweepMatrix } from "./csv.js";

const WIDTH = 860;
const HEIGHT = 520;
const MARGIN = { top: 48, right: 24, bottom: 56, left: 76 };

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

const fmt = (v: number): string => {
  if (!Number.isFinite(v)) return String(v);
  const a = Math.abs(v);
  if ((a >= 1e5 || (a > 0 && a < 1e-3)) && v !== 0) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
};

const esc = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

interface Scale {
  (v: number): number;
  ticks: number[];
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  if (hi <= lo) hi = lo + 1;
  const f = ((v: number) => outLo + ((v - lo) / (hi - lo)) * (outHi - outLo)) as Scale;
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / 4)));
  const mult = span / step > 20 ? 5 : span / step > 8 ? 2 : 1;
  const inc = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / inc) * inc; v <= hi + 1e-9 * span; v += inc) {
    ticks.push(Number(v.toPrecision(12)));
  }
  f.ticks = ticks;
  return f;
}

function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const safeLo = Math.max(lo, 1e-12);
  const a = Math.log10(safeLo);
  const b = Math.log10(Math.max(hi, safeLo * 10));
  const f = ((v: number) =>
    outLo + ((Math.log10(Math.max(v, 1e-12)) - a) / (b - a)) * (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let e = Math.ceil(a); e <= Math.floor(b); e += 1) {
    ticks.push(Math.pow(10, e));
  }
  f.ticks = ticks;
  return f;
}

function axisLabels(
  xs: Scale,
  ys: Scale,
  xLabel: string,
  yLabel: string,
  logX: boolean,
): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`);
  for (const t of xs.ticks) {
    const x = xs(t);
    parts.push(`<line x1="${x}" y1="${y0}" x2="${x}" y2="${y0 + 5}" stroke="#333"/>`);
    const label = logX ? `1e${Math.round(Math.log10(t))}` : fmt(t);
    parts.push(
      `<text x="${x}" y="${y0 + 20}" font-size="12" text-anchor="middle" fill="#333">${label}</text>`,
    );
  }
  for (const t of ys.ticks) {
    const y = ys(t);
    parts.push(`<line x1="${x0 - 5}" y1="${y}" x2="${x0}" y2="${y}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 9}" y="${y + 4}" font-size="12" text-anchor="end" fill="#333">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 14}" font-size="13" text-anchor="middle" fill="#333">${esc(xLabel)}</text>`,
  );
  parts.push(
    `<text x="20" y="${(y0 + y1) / 2}" font-size="13" text-anchor="middle" fill="#333" transform="rotate(-90 20 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
  );
  return parts.join("\n");
}

export function renderCurves(
  series: Series[],
  opts: { logX: boolean; band: number; title?: string },
): string {
  if (series.length === 0 || series.every((s) => s.points.length === 0)) {
    throw new Error("nothing to plot: no series with points");
  }
  const allT = series.flatMap((s) => s.points.map((p) => p.t));
  const allHi = series.flatMap((s) => s.points.map((p) => p.mean + opts.band * p.stderr));
  const allLo = series.flatMap((s) => s.points.map((p) => p.mean - opts.band * p.stderr));
  const xs = (opts.logX ? logScale : linearScale)(
    Math.min(...allT),
    Math.max(...allT),
    MARGIN.left,
    WIDTH - MARGIN.right,
  );
  const yMin = Math.min(0, ...allLo);
  const yMax = Math.max(...allHi) * 1.05 || 1;
  const ys = linearScale(yMin, yMax, HEIGHT - MARGIN.bottom, MARGIN.top);

  const body: string[] = [];
  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    if (s.points.length > 1) {
      const upper = s.points.map((p) => `${xs(p.t)},${ys(p.mean + opts.band * p.stderr)}`);
      const lower = [...s.points]
        .reverse()
        .map((p) => `${xs(p.t)},${ys(p.mean - opts.band * p.stderr)}`);
      body.push(
        `<polygon class="band" data-label="${esc(s.label)}" points="${upper.join(" ")} ${lower.join(" ")}" fill="${color}" opacity="0.18" stroke="none"/>`,
      );
    }
    const line = s.points.map((p) => `${xs(p.t)},${ys(p.mean)}`).join(" ");
    body.push(
      `<polyline class="curve" data-label="${esc(s.label)}" data-points="${s.points
        .map((p) => `${p.t}:${p.mean}`)
        .join(";")}" points="${line}" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
    const lx = WIDTH - MARGIN.right - 190;
    const ly = MARGIN.top + 8 + idx * 18;
    body.push(`<rect x="${lx}" y="${ly - 9}" width="12" height="12" fill="${color}"/>`);
    body.push(
      `<text x="${lx + 18}" y="${ly + 2}" font-size="12" fill="#333">${esc(s.label)}</text>`,
    );
  });

  const title = opts.title ?? (opts.logX ? "cumulative regret (log time)" : "cumulative regret");
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="26" font-size="16" text-anchor="middle" fill="#111">${esc(title)}</text>`,
    axisLabels(xs, ys, opts.logX ? "round t (log scale)" : "round t", "cumulative regret", opts.logX),
    ...body,
    "</svg>",
  ].join("\n");
}

/** Compact perceptual color ramp (dark blue to yellow). */
function ramp(u: number): string {
  const stops: [number, number, number][] = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
  ];
  const x = Math.min(Math.max(u, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(x), stops.length - 2);
  const f = x - i;
  const c = stops[i].map((a, j) => Math.round(a + f * (stops[i + 1][j] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

export function renderHeatmap(matrix: SweepMatrix, opts: { title?: string }): string {
  const { betas, etas, values } = matrix;
  const flat = values.flat();
  const lo = Math.min(...flat);
  const hi = Math.max(...flat);
  const span = hi > lo ? hi - lo : 1;
  const plotW = WIDTH - MARGIN.left - MARGIN.right - 70;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const cw = plotW / etas.length;
  const ch = plotH / betas.length;
  const body: string[] = [];
  betas.forEach((b, i) => {
    etas.forEach((e, j) => {
      const v = values[i][j];
      const x = MARGIN.left + j * cw;
      const y = MARGIN.top + i * ch;
      body.push(
        `<rect class="cell" data-beta="${b}" data-eta="${esc(e)}" data-value="${v}" x="${x}" y="${y}" width="${cw}" height="${ch}" fill="${ramp((v - lo) / span)}" stroke="white"/>`,
      );
      body.push(
        `<text x="${x + cw / 2}" y="${y + ch / 2 + 4}" font-size="11" text-anchor="middle" fill="#111">${fmt(v)}</text>`,
      );
    });
    body.push(
      `<text x="${MARGIN.left - 8}" y="${MARGIN.top + i * ch + ch / 2 + 4}" font-size="12" text-anchor="end" fill="#333">${fmt(b)}</text>`,
    );
  });
  etas.forEach((e, j) => {
    body.push(
      `<text x="${MARGIN.left + j * cw + cw / 2}" y="${MARGIN.top + plotH + 18}" font-size="12" text-anchor="middle" fill="#333">${esc(e)}</text>`,
    );
  });
  const barX = MARGIN.left + plotW + 22;
  for (let i = 0; i < 50; i += 1) {
    const y = MARGIN.top + plotH - ((i + 1) / 50) * plotH;
    body.push(
      `<rect x="${barX}" y="${y}" width="16" height="${plotH / 50 + 0.5}" fill="${ramp(i / 49)}"/>`,
    );
  }
  body.push(
    `<text x="${barX + 22}" y="${MARGIN.top + plotH}" font-size="11" fill="#333">${fmt(lo)}</text>`,
  );
  body.push(`<text x="${barX + 22}" y="${MARGIN.top + 10}" font-size="11" fill="#333">${fmt(hi)}</text>`);
  const title = opts.title ?? "final regret by confidence level and soft-min rate";
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="26" font-size="16" text-anchor="middle" fill="#111">${esc(title)}</text>`,
    `<text x="${MARGIN.left - 44}" y="${MARGIN.top - 12}" font-size="12" fill="#333">beta</text>`,
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 14}" font-size="13" text-anchor="middle" fill="#333">eta</text>`,
    ...body,
    "</svg>",
  ].join("\n");
}
