/**
 * The four figure kinds rendered from tsgait CSV artifacts:
 *
 *   learning_curve  — per-seed reward columns: mean line + min/max band
 *   speed_tracking  — commanded vs achieved speed with error bars
 *   grf_profile     — stance-phase force profile with reference overlay
 *   foot_scatter    — sampled foot locations, one panel per scenario CSV
 *
 * Figures are collected as data-space primitives and emitted as SVG
 * (canonical, byte-deterministic) and optionally PNG.
 */

import {
  columnsWithPrefix,
  numericColumn,
  readTable,
  requireColumns,
  SchemaError,
  stringColumn,
  Table,
} from "./csv.js";
import { bounds, DEFAULT_VIEW, PALETTE, Plot, Scale, Viewport } from "./svg.js";
import { encodePng, hexToRgb, Raster } from "./png.js";

type Prim =
  | { kind: "line"; xs: number[]; ys: number[]; color: string; width: number;
      dash: string }
  | { kind: "band"; xs: number[]; lo: number[]; hi: number[]; color: string }
  | { kind: "dots"; xs: number[]; ys: number[]; color: string; r: number;
      opacity: number }
  | { kind: "err"; xs: number[]; ys: number[]; e: number[]; color: string };

export class Figure {
  prims: Prim[] = [];
  legendEntries: Array<[string, string]> = [];

  constructor(
    public scale: Scale,
    public title: string,
    public xLabel: string,
    public yLabel: string,
    public view: Viewport = DEFAULT_VIEW,
  ) {}

  line(xs: number[], ys: number[], color: string, width = 1.5, dash = "") {
    this.prims.push({ kind: "line", xs, ys, color, width, dash });
  }

  band(xs: number[], lo: number[], hi: number[], color: string) {
    this.prims.push({ kind: "band", xs, lo, hi, color });
  }

  dots(xs: number[], ys: number[], color: string, r = 1.2, opacity = 1.0) {
    this.prims.push({ kind: "dots", xs, ys, color, r, opacity });
  }

  errorBars(xs: number[], ys: number[], e: number[], color: string) {
    this.prims.push({ kind: "err", xs, ys, e, color });
  }

  legend(label: string, color: string) {
    this.legendEntries.push([label, color]);
  }

  toSvg(): string {
    const plot = new Plot(this.scale, this.view, this.title);
    for (const p of this.prims) {
      if (p.kind === "band") plot.band(p.xs, p.lo, p.hi, p.color);
    }
    for (const p of this.prims) {
      if (p.kind === "line") plot.polyline(p.xs, p.ys, p.color, p.width, p.dash);
      else if (p.kind === "dots") plot.dots(p.xs, p.ys, p.color, p.r, p.opacity);
      else if (p.kind === "err") plot.errorBars(p.xs, p.ys, p.e, p.color);
    }
    plot.axes(this.xLabel, this.yLabel);
    if (this.legendEntries.length) plot.legend(this.legendEntries);
    return plot.render();
  }

  toPng(): Buffer {
    const plot = new Plot(this.scale, this.view, "");
    const raster = new Raster(this.view.width, this.view.height);
    const { margin, width, height } = this.view;
    raster.line(margin, margin, width - margin, margin, [34, 34, 34]);
    raster.line(margin, height - margin, width - margin, height - margin,
                [34, 34, 34]);
    raster.line(margin, margin, margin, height - margin, [34, 34, 34]);
    raster.line(width - margin, margin, width - margin, height - margin,
                [34, 34, 34]);
    for (const p of this.prims) {
      if (p.kind === "band") {
        const rgb = hexToRgb(p.color).map(
          (v) => Math.round(v + (255 - v) * 0.75),
        ) as [number, number, number];
        for (let i = 0; i < p.xs.length; i++) {
          raster.line(plot.px(p.xs[i]), plot.py(p.lo[i]),
                      plot.px(p.xs[i]), plot.py(p.hi[i]), rgb);
        }
      }
    }
    for (const p of this.prims) {
      if (p.kind === "line") {
        const rgb = hexToRgb(p.color);
        for (let i = 1; i < p.xs.length; i++) {
          raster.line(plot.px(p.xs[i - 1]), plot.py(p.ys[i - 1]),
                      plot.px(p.xs[i]), plot.py(p.ys[i]), rgb);
        }
      } else if (p.kind === "dots") {
        const rgb = hexToRgb(p.color);
        for (let i = 0; i < p.xs.length; i++) {
          raster.disc(plot.px(p.xs[i]), plot.py(p.ys[i]),
                      Math.max(1, Math.round(p.r)), rgb);
        }
      } else if (p.kind === "err") {
        const rgb = hexToRgb(p.color);
        for (let i = 0; i < p.xs.length; i++) {
          raster.line(plot.px(p.xs[i]), plot.py(p.ys[i] - p.e[i]),
                      plot.px(p.xs[i]), plot.py(p.ys[i] + p.e[i]), rgb);
        }
      }
    }
    return encodePng(raster);
  }
}

// ---------------------------------------------------------------------------
// learning_curve
// ---------------------------------------------------------------------------

export interface SeedCurve {
  iterations: number[];
  perSeed: number[][];
  mean: number[];
  lo: number[];
  hi: number[];
}

export function seedCurve(table: Table): SeedCurve {
  requireColumns(table, ["iteration"]);
  const seeds = columnsWithPrefix(table, "reward_seed_");
  if (seeds.length === 0) {
    throw new SchemaError(`${table.path}: no reward_seed_* columns`);
  }
  const iterations = numericColumn(table, "iteration");
  const perSeed = seeds.map((c) => numericColumn(table, c));
  const n = iterations.length;
  const mean: number[] = [];
  const lo: number[] = [];
  const hi: number[] = [];
  for (let i = 0; i < n; i++) {
    const vals = perSeed.map((col) => col[i]).filter(Number.isFinite);
    mean.push(vals.reduce((a, b) => a + b, 0) / vals.length);
    lo.push(Math.min(...vals));
    hi.push(Math.max(...vals));
  }
  return { iterations, perSeed, mean, lo, hi };
}

export function learningCurveFigure(paths: string[], labels: string[]): Figure {
  const curves = paths.map((p) => seedCurve(readTable(p)));
  const allY = curves.flatMap((c) => c.lo.concat(c.hi));
  const allX = curves.flatMap((c) => c.iterations);
  const [y0, y1] = bounds(allY);
  const [x0, x1] = bounds(allX, 0.0);
  const fig = new Figure({ x0, x1, y0, y1 }, "Learning curves",
                         "iteration", "mean episode reward");
  curves.forEach((c, k) => {
    const color = PALETTE[k % PALETTE.length];
    fig.band(c.iterations, c.lo, c.hi, color);
    fig.line(c.iterations, c.mean, color, 2.0);
    fig.legend(labels[k] ?? `curve ${k}`, color);
  });
  return fig;
}

// ---------------------------------------------------------------------------
// speed_tracking
// ---------------------------------------------------------------------------

export function speedTrackingFigure(paths: string[],
                                    labels: string[]): Figure {
  const tables = paths.map((p) => readTable(p));
  for (const t of tables) {
    requireColumns(t, ["speed_cmd", "achieved_mean", "achieved_std"]);
  }
  const cmds = tables.flatMap((t) => numericColumn(t, "speed_cmd"));
  const means = tables.flatMap((t) => numericColumn(t, "achieved_mean"));
  const [x0, x1] = bounds(cmds);
  const [y0, y1] = bounds(means.concat(cmds));
  const fig = new Figure({ x0, x1, y0, y1 }, "Speed tracking",
                         "commanded forward speed (m/s)",
                         "achieved forward speed (m/s)");
  fig.line([x0, x1], [x0, x1], "#999999", 1.0, "4,3");
  fig.legend("ideal", "#999999");
  tables.forEach((t, k) => {
    const color = PALETTE[k % PALETTE.length];
    const cmd = numericColumn(t, "speed_cmd");
    const mean = numericColumn(t, "achieved_mean");
    const std = numericColumn(t, "achieved_std");
    fig.errorBars(cmd, mean, std, color);
    fig.line(cmd, mean, color, 1.5);
    fig.dots(cmd, mean, color, 2.5);
    fig.legend(labels[k] ?? `policy ${k}`, color);
  });
  return fig;
}

// ---------------------------------------------------------------------------
// grf_profile
// ---------------------------------------------------------------------------

/** Reference vertical/forward force over its stance window from a refdump. */
export function referenceProfile(table: Table):
    { s: number[]; vertical: number[]; forward: number[] } {
  requireColumns(table, ["phase", "fref_l_z", "fref_l_x", "phi_l"]);
  const phi = numericColumn(table, "phi_l");
  const fz = numericColumn(table, "fref_l_z");
  const fx = numericColumn(table, "fref_l_x");
  const rows: Array<[number, number, number]> = [];
  for (let i = 0; i < phi.length; i++) {
    if (phi[i] > 0) rows.push([i, fz[i], fx[i]]);
  }
  if (rows.length < 2) {
    throw new SchemaError(`${table.path}: no active stance window found`);
  }
  const s = rows.map((_, i) => i / (rows.length - 1));
  return {
    s,
    vertical: rows.map((r) => r[1]),
    forward: rows.map((r) => r[2]),
  };
}

export function grfProfileFigure(grfPath: string, refdumpPath: string): Figure {
  const grf = readTable(grfPath);
  requireColumns(grf, ["bin_center", "vertical_mean", "forward_mean"]);
  const centers = numericColumn(grf, "bin_center");
  const vertical = numericColumn(grf, "vertical_mean");
  const forward = numericColumn(grf, "forward_mean");
  const ref = referenceProfile(readTable(refdumpPath));
  const ys = vertical.concat(forward, ref.vertical, ref.forward);
  const [y0, y1] = bounds(ys);
  const fig = new Figure({ x0: 0, x1: 1, y0, y1 },
                         "Ground reaction forces over stance",
                         "stance phase", "force (N)");
  fig.line(ref.s, ref.vertical, PALETTE[4], 1.2, "5,3");
  fig.legend("reference vertical", PALETTE[4]);
  fig.line(ref.s, ref.forward, PALETTE[3], 1.2, "5,3");
  fig.legend("reference forward", PALETTE[3]);
  fig.line(centers, vertical, PALETTE[0], 2.0);
  fig.dots(centers, vertical, PALETTE[0], 2.0);
  fig.legend("measured vertical", PALETTE[0]);
  fig.line(centers, forward, PALETTE[1], 2.0);
  fig.dots(centers, forward, PALETTE[1], 2.0);
  fig.legend("measured forward", PALETTE[1]);
  return fig;
}

// ---------------------------------------------------------------------------
// foot_scatter
// ---------------------------------------------------------------------------

export function footScatterFigure(path: string, title: string): Figure {
  const table = readTable(path);
  requireColumns(table, ["x", "y", "z", "foot"]);
  const xs = numericColumn(table, "x");
  const zs = numericColumn(table, "z");
  const feet = stringColumn(table, "foot");
  const [x0, x1] = bounds(xs);
  const [z0, z1] = bounds(zs);
  const fig = new Figure({ x0, x1, y0: z0, y1: z1 }, title,
                         "forward foot position (m)",
                         "vertical foot position (m)");
  const left = { xs: [] as number[], ys: [] as number[] };
  const right = { xs: [] as number[], ys: [] as number[] };
  for (let i = 0; i < xs.length; i++) {
    const side = feet[i] === "left" ? left : right;
    side.xs.push(xs[i]);
    side.ys.push(zs[i]);
  }
  fig.dots(left.xs, left.ys, PALETTE[0], 1.0, 0.35);
  fig.legend("left foot", PALETTE[0]);
  fig.dots(right.xs, right.ys, PALETTE[1], 1.0, 0.35);
  fig.legend("right foot", PALETTE[1]);
  return fig;
}
