/**
 * The three figure kinds rendered from an artifact directory:
 *
 *  - grid-contour:   filled contours of the 2-D log-density grid with the
 *                    initial training points (dots) and selected points
 *                    (crosses) overlaid,
 *  - kde-projection: bivariate-KDE contours of a 2-D projection of a
 *                    posterior sample CSV,
 *  - trend:          E_approx / E_true / R versus observation count, with
 *                    optional random-baseline insets.
 *
 * Everything is a pure reader of the documented CSVs; no densities are
 * recomputed and no seeds are touched.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { contours } from "d3-contour";

import { column, readCsv, thetaColumns } from "./csv.js";
import { Scale, Svg, fmt, viridis } from "./svg.js";
import { kde2d } from "./kde.js";

const W = 640;
const H = 520;
const MARGIN = { left: 60, right: 20, top: 20, bottom: 45 };

function frame(svg: Svg, sx: Scale, sy: Scale, xLabel: string, yLabel: string): void {
  const { left, right, top, bottom } = MARGIN;
  svg.rect(left, top, svg.width - left - right, svg.height - top - bottom, 'fill="none" stroke="black" stroke-width="1"');
  for (const t of sx.ticks(6)) {
    const px = sx.apply(t);
    svg.line(px, svg.height - bottom, px, svg.height - bottom + 5, 'stroke="black"');
    svg.text(px, svg.height - bottom + 18, String(t), 'text-anchor="middle" font-size="11"');
  }
  for (const t of sy.ticks(6)) {
    const py = sy.apply(t);
    svg.line(MARGIN.left - 5, py, MARGIN.left, py, 'stroke="black"');
    svg.text(MARGIN.left - 8, py + 4, String(t), 'text-anchor="end" font-size="11"');
  }
  svg.text((MARGIN.left + svg.width - right) / 2, svg.height - 8, xLabel, 'text-anchor="middle" font-size="13"');
  svg.text(14, (top + svg.height - bottom) / 2, yLabel, `text-anchor="middle" font-size="13" transform="rotate(-90 14 ${fmt((top + svg.height - bottom) / 2)})"`);
}

function contourPath(
  rings: number[][][][],
  toPx: (p: number[]) => [number, number],
): string {
  const segments: string[] = [];
  for (const polygon of rings) {
    for (const ring of polygon) {
      const pts = ring.map(toPx);
      segments.push(
        `M${pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join("L")}Z`,
      );
    }
  }
  return segments.join("");
}

function drawFilledContours(
  svg: Svg,
  values: ArrayLike<number>,
  nx: number,
  ny: number,
  toPx: (p: number[]) => [number, number],
  nLevels: number,
): void {
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(hi > lo)) {
    return;
  }
  const thresholds = Array.from({ length: nLevels }, (_, k) => lo + ((k + 0.5) / nLevels) * (hi - lo));
  const generator = contours().size([nx, ny]).thresholds(thresholds);
  const bands = generator(Array.from(values));
  bands.forEach((band, k) => {
    const d = contourPath(band.coordinates as unknown as number[][][][], toPx);
    if (d.length > 0) {
      svg.path(d, `fill="${viridis((k + 1) / nLevels)}" stroke="none" fill-rule="evenodd"`);
    }
  });
}

export function plotGridContour(dir: string, outPath: string): string {
  const grid = readCsv(path.join(dir, "grid.csv"));
  const t0 = column(grid, "theta_0");
  const t1 = column(grid, "theta_1");
  const logPost = column(grid, "log_true_posterior");

  const xs = Array.from(new Set(t0)).sort((a, b) => a - b);
  const ys = Array.from(new Set(t1)).sort((a, b) => a - b);
  const nx = xs.length;
  const ny = ys.length;
  if (nx * ny !== logPost.length) {
    throw new Error(`grid.csv is not a full ${nx}x${ny} grid`);
  }
  // rows are written x-major (theta_0 varies slowest); transpose into [y][x]
  const maxLog = Math.max(...logPost);
  const values = new Float64Array(nx * ny);
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < ny; j++) {
      values[j * nx + i] = Math.exp(logPost[i * ny + j] - maxLog);
    }
  }

  const svg = new Svg(W, H);
  const sx = new Scale(xs[0], xs[nx - 1], MARGIN.left, W - MARGIN.right);
  const sy = new Scale(ys[0], ys[ny - 1], H - MARGIN.bottom, MARGIN.top);
  svg.metadata({ kind: "grid-contour", dir: path.basename(dir), levels: 10 });

  const toPx = (p: number[]): [number, number] => {
    const gx = xs[0] + (p[0] / (nx - 1)) * (xs[nx - 1] - xs[0]);
    const gy = ys[0] + (p[1] / (ny - 1)) * (ys[ny - 1] - ys[0]);
    return [sx.apply(gx), sy.apply(gy)];
  };
  drawFilledContours(svg, values, nx, ny, toPx, 10);

  const initial = thetaColumns(readCsv(path.join(dir, "initial_training.csv")));
  for (const p of initial) {
    svg.circle(sx.apply(p[0]), sy.apply(p[1]), 3, 'class="init-point" fill="black"');
  }
  const selected = thetaColumns(readCsv(path.join(dir, "training_history.csv")));
  for (const p of selected) {
    const x = sx.apply(p[0]);
    const y = sy.apply(p[1]);
    svg.path(
      `M${fmt(x - 3)},${fmt(y - 3)}L${fmt(x + 3)},${fmt(y + 3)}M${fmt(x - 3)},${fmt(y + 3)}L${fmt(x + 3)},${fmt(y - 3)}`,
      'class="selected-point" stroke="black" stroke-width="1.2" fill="none"',
    );
  }
  frame(svg, sx, sy, "theta_0", "theta_1");
  return finish(svg, outPath);
}

export function plotKdeProjection(
  dir: string,
  outPath: string,
  pair: [number, number],
  samplesFile = "surrogate_samples.csv",
): string {
  const table = readCsv(path.join(dir, samplesFile));
  const points = thetaColumns(table);
  if (points.length < 100) {
    throw new Error(`need at least 100 samples for a KDE, got ${points.length}`);
  }
  const dim = points[0].length;
  for (const c of pair) {
    if (c < 0 || c >= dim) {
      throw new Error(`projection coordinate ${c} out of range for dimension ${dim}`);
    }
  }
  const xs = points.map((p) => p[pair[0]]);
  const ys = points.map((p) => p[pair[1]]);
  const kde = kde2d(xs, ys, 80);

  const svg = new Svg(W, H);
  const sx = new Scale(kde.x0, kde.x1, MARGIN.left, W - MARGIN.right);
  const sy = new Scale(kde.y0, kde.y1, H - MARGIN.bottom, MARGIN.top);
  svg.metadata({
    kind: "kde-projection",
    pair,
    samples: points.length,
    bandwidth: kde.bandwidth,
    bandwidth_rule: "scott: sd * n^(-1/6)",
  });
  const toPx = (p: number[]): [number, number] => {
    const gx = kde.x0 + (p[0] / (kde.nx - 1)) * (kde.x1 - kde.x0);
    const gy = kde.y0 + (p[1] / (kde.ny - 1)) * (kde.y1 - kde.y0);
    return [sx.apply(gx), sy.apply(gy)];
  };
  drawFilledContours(svg, kde.values, kde.nx, kde.ny, toPx, 10);
  frame(svg, sx, sy, `theta_${pair[0]}`, `theta_${pair[1]}`);
  return finish(svg, outPath);
}

interface TrendSeries {
  iteration: number[];
  e_approx: number[];
  e_true: number[];
  r_measure: number[];
}

function readTrends(dir: string): TrendSeries {
  const table = readCsv(path.join(dir, "diagnostics.csv"));
  return {
    iteration: column(table, "iteration"),
    e_approx: column(table, "e_approx"),
    e_true: column(table, "e_true"),
    r_measure: column(table, "r_measure"),
  };
}

function drawSeriesPanel(
  svg: Svg,
  x0: number,
  y0: number,
  w: number,
  h: number,
  iters: number[],
  values: number[],
  label: string,
  color: string,
  inset?: { iters: number[]; values: number[] },
): void {
  const sx = new Scale(Math.min(...iters), Math.max(...iters), x0 + 45, x0 + w - 10);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const padY = 0.05 * (hi - lo || 1);
  const sy = new Scale(lo - padY, hi + padY, y0 + h - 30, y0 + 12);
  svg.rect(x0 + 45, y0 + 12, w - 55, h - 42, 'fill="none" stroke="black" stroke-width="0.8"');
  svg.polyline(
    iters.map((it, i) => [sx.apply(it), sy.apply(values[i])] as [number, number]),
    `stroke="${color}" stroke-width="1.5"`,
  );
  for (const [it, v] of iters.map((it, i) => [it, values[i]])) {
    svg.circle(sx.apply(it), sy.apply(v), 2, `fill="${color}"`);
  }
  for (const t of sx.ticks(5)) {
    svg.text(sx.apply(t), y0 + h - 16, String(t), 'text-anchor="middle" font-size="9"');
  }
  for (const t of sy.ticks(4)) {
    svg.text(x0 + 41, sy.apply(t) + 3, Number(t.toPrecision(3)).toString(), 'text-anchor="end" font-size="9"');
  }
  svg.text(x0 + 45 + (w - 55) / 2, y0 + h - 2, "N_obs", 'text-anchor="middle" font-size="10"');
  svg.text(x0 + 10, y0 + 10, label, 'font-size="12" font-weight="bold"');

  if (inset && inset.iters.length > 0) {
    const ix0 = x0 + w - Math.round(0.45 * w);
    const iy0 = y0 + 16;
    const iw = Math.round(0.4 * w);
    const ih = Math.round(0.4 * h);
    const isx = new Scale(Math.min(...inset.iters), Math.max(...inset.iters), ix0, ix0 + iw);
    const ilo = Math.min(...inset.values);
    const ihi = Math.max(...inset.values);
    const ipad = 0.05 * (ihi - ilo || 1);
    const isy = new Scale(ilo - ipad, ihi + ipad, iy0 + ih, iy0);
    svg.group('class="inset"', (g) => {
      g.rect(ix0, iy0, iw, ih, 'fill="white" stroke="red" stroke-width="0.8"');
      g.polyline(
        inset.iters.map((it, i) => [isx.apply(it), isy.apply(inset.values[i])] as [number, number]),
        'stroke="red" stroke-width="1.2"',
      );
    });
  }
}

export function plotTrends(dir: string, outPath: string, randomDir?: string): string {
  const active = readTrends(dir);
  const baseline = randomDir ? readTrends(randomDir) : undefined;

  const svg = new Svg(W, 720);
  svg.metadata({ kind: "trend", dir: path.basename(dir), random_inset: Boolean(baseline) });
  const panelH = 230;
  drawSeriesPanel(svg, 0, 0, W, panelH, active.iteration, active.e_approx, "E_approx", "steelblue",
    baseline && { iters: baseline.iteration, values: baseline.e_approx });
  drawSeriesPanel(svg, 0, panelH + 10, W, panelH, active.iteration, active.e_true, "E_true", "steelblue",
    baseline && { iters: baseline.iteration, values: baseline.e_true });
  drawSeriesPanel(svg, 0, 2 * (panelH + 10), W, panelH, active.iteration, active.r_measure, "R", "steelblue",
    baseline && { iters: baseline.iteration, values: baseline.r_measure });
  return finish(svg, outPath);
}

function finish(svg: Svg, outPath: string): string {
  const content = svg.render();
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  fs.writeFileSync(outPath, content);
  return outPath;
}
