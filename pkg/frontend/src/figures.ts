/** The five figure kinds, each reading one documented report format.
 *
 * Renderers never mutate their inputs: they read files, build an SVG string,
 * and return it.
 */

import { readFileSync, existsSync } from "node:fs";
import * as path from "node:path";

import { parseCsv, selectColumns, numericColumn, Table } from "./csv.js";
import { SvgCanvas, linearScale, logScale, PALETTE, fmt } from "./svg.js";

export const FIGURE_KINDS = [
  "eigen_convergence",
  "eigvec_overlay",
  "clt_histogram",
  "qq_plot",
  "moment_decay",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  report: string;
  kind: FigureKind;
  out: string;
  warn?: (msg: string) => void;
}

const SUPPORTED_SCHEMA = 1;

const W = 640;
const H = 420;
const FRAME = { x0: 64, x1: W - 20, y0: H - 48, y1: 34 };

function readTable(file: string): Table {
  return parseCsv(readFileSync(file, "utf-8"));
}

function groupBy<T>(keys: number[], values: T[]): Map<number, T[]> {
  const out = new Map<number, T[]>();
  keys.forEach((k, i) => {
    const bucket = out.get(k) ?? [];
    bucket.push(values[i]);
    out.set(k, bucket);
  });
  return out;
}

function extent(values: number[], padFraction = 0.05): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * padFraction;
  return [lo - pad, hi + pad];
}

function normalPdf(x: number, sigma2: number): number {
  return Math.exp((-x * x) / (2 * sigma2)) / Math.sqrt(2 * Math.PI * sigma2);
}

/** Acklam-style rational approximation of the standard normal quantile. */
export function normalQuantile(p: number): number {
  if (!(p > 0 && p < 1)) throw new Error(`quantile argument out of range: ${p}`);
  const a = [-39.6968302866538, 220.946098424521, -275.928510446969, 138.357751867269,
    -30.6647980661472, 2.50662827745924];
  const b = [-54.4760987982241, 161.585836858041, -155.698979859887, 66.8013118877197,
    -13.2806815528857];
  const c = [-0.00778489400243029, -0.322396458041136, -2.40075827716184, -2.54973253934373,
    4.37466414146497, 2.93816398269878];
  const d = [0.00778469570904146, 0.32246712907004, 2.445134137143, 3.75440866190742];
  const pl = 0.02425;
  let q: number;
  let r: number;
  if (p < pl) {
    q = Math.sqrt(-2 * Math.log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
      ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p <= 1 - pl) {
    q = p - 0.5;
    r = q * q;
    return ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q) /
      (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  q = Math.sqrt(-2 * Math.log(1 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
    ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
}

interface CltReport {
  schema_version?: number;
  theoretical_cov: number[][];
  ks: Array<number | null>;
  R: number;
}

function readCltReport(reportPath: string, warn: (m: string) => void): { report: CltReport; samples: Map<number, number[]> } {
  const report = JSON.parse(readFileSync(reportPath, "utf-8")) as CltReport;
  const version = report.schema_version ?? 0;
  if (version !== SUPPORTED_SCHEMA) {
    throw new Error(`unsupported report schema version ${version} (expected ${SUPPORTED_SCHEMA})`);
  }
  const base = reportPath.replace(/\.json$/, "");
  const samplesPath = `${base}_samples.csv`;
  if (!existsSync(samplesPath)) {
    throw new Error(`samples table not found next to report: ${samplesPath}`);
  }
  const table = readTable(samplesPath);
  const cols = selectColumns(table, ["rep", "j", "Lambda"], warn);
  const js = numericColumn(table, cols, "j");
  const lambdas = numericColumn(table, cols, "Lambda");
  const samples = groupBy(js, lambdas);
  if (samples.size === 0 || lambdas.length === 0) {
    throw new Error("report contains no samples");
  }
  return { report, samples };
}

function renderEigenConvergence(spec: FigureSpec, warn: (m: string) => void): string {
  const table = readTable(spec.report);
  const cols = selectColumns(table, ["n", "j", "ratio", "target"], warn);
  const ns = numericColumn(table, cols, "n");
  const js = numericColumn(table, cols, "j");
  const ratios = numericColumn(table, cols, "ratio");
  const targets = numericColumn(table, cols, "target");
  if (ns.length === 0) throw new Error("empty eigenvalue report");

  const canvas = new SvgCanvas(W, H);
  const xs = logScale(extent(ns, 0.02) as [number, number], [FRAME.x0, FRAME.x1]);
  const ys = linearScale(extent([...ratios, ...targets]), [FRAME.y0, FRAME.y1]);
  canvas.axes(xs, ys, FRAME, { x: "matrix dimension n", y: "normalized eigenvalue ratio" });

  const perJ = new Map<number, Array<[number, number, number]>>();
  js.forEach((j, i) => {
    const bucket = perJ.get(j) ?? [];
    bucket.push([ns[i], ratios[i], targets[i]]);
    perJ.set(j, bucket);
  });
  let c = 0;
  for (const [j, rows] of [...perJ.entries()].sort((p, q) => p[0] - q[0])) {
    rows.sort((p, q) => p[0] - q[0]);
    const color = PALETTE[c % PALETTE.length];
    canvas.polyline(rows.map(([n, r]) => [xs(n), ys(r)]), color, 1.8);
    rows.forEach(([n, r]) => canvas.circle(xs(n), ys(r), 3, color));
    const target = rows[rows.length - 1][2];
    if (Number.isFinite(target)) {
      canvas.line(FRAME.x0, ys(target), FRAME.x1, ys(target), color, 1, "5,4");
    }
    canvas.text(FRAME.x1 - 6, FRAME.y1 + 14 + 14 * c, `j = ${j}`, { anchor: "end", fill: color });
    c++;
  }
  return canvas.render("Toeplitz eigenvalue ratios vs kernel limit");
}

function renderEigvecOverlay(spec: FigureSpec, warn: (m: string) => void): string {
  const table = readTable(spec.report);
  const cols = selectColumns(table, ["n", "j", "k", "sqrt_n_u", "f_at_k_over_n"], warn);
  const ns = numericColumn(table, cols, "n");
  const js = numericColumn(table, cols, "j");
  const ks = numericColumn(table, cols, "k");
  const us = numericColumn(table, cols, "sqrt_n_u");
  const fs = numericColumn(table, cols, "f_at_k_over_n");
  if (ns.length === 0) throw new Error("empty eigenvector table");

  const j0 = Math.min(...js);
  const keep = js.map((j) => j === j0);
  const x = ks.filter((_, i) => keep[i]).map((k, idx) => k / ns.filter((_, i) => keep[i])[idx]);
  const u = us.filter((_, i) => keep[i]);
  const f = fs.filter((_, i) => keep[i]);

  const canvas = new SvgCanvas(W, H);
  const xs = linearScale([0, 1], [FRAME.x0, FRAME.x1]);
  const ys = linearScale(extent([...u, ...f]), [FRAME.y0, FRAME.y1]);
  canvas.axes(xs, ys, FRAME, { x: "k / n", y: "amplitude" });
  canvas.polyline(x.map((v, i) => [xs(v), ys(f[i])] as [number, number]), PALETTE[1], 2.2);
  canvas.polyline(x.map((v, i) => [xs(v), ys(u[i])] as [number, number]), PALETTE[0], 1.2);
  canvas.text(FRAME.x1 - 6, FRAME.y1 + 14, "kernel eigenfunction", { anchor: "end", fill: PALETTE[1] });
  canvas.text(FRAME.x1 - 6, FRAME.y1 + 28, "sqrt(n) x eigenvector", { anchor: "end", fill: PALETTE[0] });
  return canvas.render(`Eigenvector overlay (j = ${j0}, n = ${fmt(Math.max(...ns))})`);
}

function renderCltHistogram(spec: FigureSpec, warn: (m: string) => void): string {
  const { report, samples } = readCltReport(spec.report, warn);
  const j = Math.min(...samples.keys());
  const data = samples.get(j)!;
  const sigma2 = report.theoretical_cov[j - 1][j - 1];
  const ks = report.ks[j - 1];

  const [lo, hi] = extent(data, 0.02);
  const bins = Math.max(12, Math.round(Math.sqrt(data.length)));
  const width = (hi - lo) / bins;
  const counts = new Array<number>(bins).fill(0);
  for (const v of data) {
    const b = Math.min(bins - 1, Math.max(0, Math.floor((v - lo) / width)));
    counts[b]++;
  }
  const density = counts.map((cnt) => cnt / (data.length * width));

  const canvas = new SvgCanvas(W, H);
  const xs = linearScale([lo, hi], [FRAME.x0, FRAME.x1]);
  const maxY = Math.max(...density, sigma2 > 0 ? normalPdf(0, sigma2) : 0) * 1.1;
  const ys = linearScale([0, maxY], [FRAME.y0, FRAME.y1]);
  canvas.axes(xs, ys, FRAME, { x: "normalized spike statistic", y: "density" });
  density.forEach((d, b) => {
    const x0 = xs(lo + b * width);
    const x1 = xs(lo + (b + 1) * width);
    canvas.rect(x0, ys(d), x1 - x0 - 0.5, FRAME.y0 - ys(d), PALETTE[0], 0.55);
  });
  if (sigma2 > 0) {
    const curve: Array<[number, number]> = [];
    for (let i = 0; i <= 160; i++) {
      const x = lo + ((hi - lo) * i) / 160;
      curve.push([xs(x), ys(normalPdf(x, sigma2))]);
    }
    canvas.polyline(curve, PALETTE[1], 2.2);
    canvas.text(FRAME.x1 - 6, FRAME.y1 + 14, `normal overlay, variance ${fmt(sigma2)}`, {
      anchor: "end",
      fill: PALETTE[1],
    });
  }
  canvas.text(FRAME.x1 - 6, FRAME.y1 + 28, ks === null ? "KS: n/a" : `KS distance: ${fmt(ks)}`, {
    anchor: "end",
  });
  return canvas.render(`Spike fluctuation histogram (j = ${j}, R = ${report.R})`);
}

function renderQqPlot(spec: FigureSpec, warn: (m: string) => void): string {
  const { report, samples } = readCltReport(spec.report, warn);
  const canvas = new SvgCanvas(W, H);
  const all: number[] = [];
  for (const v of samples.values()) all.push(...v);
  const [lo, hi] = extent(all);
  const xs = linearScale([lo, hi], [FRAME.x0, FRAME.x1]);
  const ys = linearScale([lo, hi], [FRAME.y0, FRAME.y1]);
  canvas.axes(xs, ys, FRAME, { x: "theoretical quantile", y: "sample quantile" });
  canvas.line(xs(lo), ys(lo), xs(hi), ys(hi), "#777", 1, "4,4");
  let c = 0;
  for (const [j, values] of [...samples.entries()].sort((p, q) => p[0] - q[0])) {
    const sigma2 = report.theoretical_cov[j - 1][j - 1];
    if (!(sigma2 > 0)) {
      warn(`skipping coordinate ${j}: degenerate theoretical variance`);
      continue;
    }
    const sorted = [...values].sort((a, b) => a - b);
    const sd = Math.sqrt(sigma2);
    const color = PALETTE[c % PALETTE.length];
    const step = Math.max(1, Math.floor(sorted.length / 400));
    for (let i = 0; i < sorted.length; i += step) {
      const p = (i + 0.5) / sorted.length;
      canvas.circle(xs(sd * normalQuantile(p)), ys(sorted[i]), 2, color);
    }
    canvas.text(FRAME.x1 - 6, FRAME.y1 + 14 + 14 * c, `j = ${j}`, { anchor: "end", fill: color });
    c++;
  }
  return canvas.render(`Normal quantile comparison (R = ${report.R})`);
}

function renderMomentDecay(spec: FigureSpec, warn: (m: string) => void): string {
  const table = readTable(spec.report);
  const cols = selectColumns(
    table,
    ["n", "sqrt_n_trace_moment_1", "sqrt_n_trace_moment_2"],
    warn,
  );
  const ns = numericColumn(table, cols, "n");
  const s1 = numericColumn(table, cols, "sqrt_n_trace_moment_1");
  const s2 = numericColumn(table, cols, "sqrt_n_trace_moment_2");
  if (ns.length === 0) throw new Error("empty moment table");

  const canvas = new SvgCanvas(W, H);
  const xs = logScale(extent(ns, 0.02) as [number, number], [FRAME.x0, FRAME.x1]);
  const ys = linearScale(extent([0, ...s1, ...s2], 0.03), [FRAME.y0, FRAME.y1]);
  canvas.axes(xs, ys, FRAME, { x: "matrix dimension n", y: "normalized trace moment" });
  const series: Array<[number[], string, string]> = [
    [s1, PALETTE[0], "sqrt(n) tr/n"],
    [s2, PALETTE[1], "sqrt(n) tr^2/n"],
  ];
  series.forEach(([vals, color, label], c) => {
    canvas.polyline(ns.map((n, i) => [xs(n), ys(vals[i])] as [number, number]), color, 1.8);
    ns.forEach((n, i) => canvas.circle(xs(n), ys(vals[i]), 3, color));
    canvas.text(FRAME.x1 - 6, FRAME.y1 + 14 + 14 * c, label, { anchor: "end", fill: color });
  });
  return canvas.render("Normalized spectral moment decay");
}

const RENDERERS: Record<FigureKind, (spec: FigureSpec, warn: (m: string) => void) => string> = {
  eigen_convergence: renderEigenConvergence,
  eigvec_overlay: renderEigvecOverlay,
  clt_histogram: renderCltHistogram,
  qq_plot: renderQqPlot,
  moment_decay: renderMomentDecay,
};

/** Render one figure to an SVG string (file output is the caller's job). */
export function renderFigure(spec: FigureSpec): string {
  if (!existsSync(spec.report)) {
    throw new Error(`report not found: ${spec.report}`);
  }
  const warn = spec.warn ?? ((m: string) => console.warn(m));
  const renderer = RENDERERS[spec.kind];
  if (!renderer) throw new Error(`unknown figure kind '${spec.kind}'`);
  return renderer(spec, warn);
}

/** Infer which figures a report file supports, for directory batch mode. */
export function recognize(file: string): FigureKind[] {
  const name = path.basename(file);
  if (name.endsWith("_vectors.csv")) return ["eigvec_overlay"];
  if (name.endsWith("_samples.csv") || name.endsWith(".manifest.json")) return [];
  if (name.endsWith(".json")) {
    try {
      const obj = JSON.parse(readFileSync(file, "utf-8"));
      if (obj && typeof obj === "object" && "ks" in obj && "theoretical_cov" in obj) {
        return ["clt_histogram", "qq_plot"];
      }
    } catch {
      return [];
    }
    return [];
  }
  if (name.endsWith(".csv")) {
    try {
      const header = parseCsv(readFileSync(file, "utf-8")).header;
      if (header.includes("ratio") && header.includes("target")) return ["eigen_convergence"];
      if (header.includes("sqrt_n_trace_moment_1")) return ["moment_decay"];
    } catch {
      return [];
    }
  }
  return [];
}
