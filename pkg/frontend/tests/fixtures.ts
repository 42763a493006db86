/** Synthesized artifact directories matching the documented CSV schemas. */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export function makeDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "activegp-plot-"));
}

function writeCsv(dir: string, name: string, schema: string, header: string[], rows: (string | number)[][]): void {
  const lines = [
    `# activegp csv schema 1: ${schema}`,
    header.join(","),
    ...rows.map((r) => r.join(",")),
  ];
  fs.writeFileSync(path.join(dir, name), lines.join("\n") + "\n");
}

/** Pseudo-random but deterministic stream (mulberry32). */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gauss(r: () => number): number {
  // Box-Muller
  const u = Math.max(r(), 1e-12);
  const v = r();
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
}

export interface FixtureOptions {
  gridSize?: number;
  nInitial?: number;
  nSelected?: number;
  nSamples?: number;
  dim?: number;
}

/** A miniature but schema-complete artifact directory. */
export function makeArtifacts(opts: FixtureOptions = {}): string {
  const gridSize = opts.gridSize ?? 30;
  const nInitial = opts.nInitial ?? 16;
  const nSelected = opts.nSelected ?? 40;
  const nSamples = opts.nSamples ?? 400;
  const dim = opts.dim ?? 2;
  const dir = makeDir();
  const r = rng(42);

  // 2-D Gaussian-ish log density on a grid, theta_0-major row order
  const gridRows: (string | number)[][] = [];
  for (let i = 0; i < gridSize; i++) {
    const t0 = -3 + (6 * i) / (gridSize - 1);
    for (let j = 0; j < gridSize; j++) {
      const t1 = -3 + (6 * j) / (gridSize - 1);
      const logTrue = -0.5 * (t0 * t0 + 2 * t1 * t1) - 0.3 * t0 * t1;
      const logSurr = logTrue + 0.05 * Math.sin(3 * t0);
      gridRows.push([t0, t1, logTrue, logSurr]);
    }
  }
  writeCsv(dir, "grid.csv", "grid", ["theta_0", "theta_1", "log_true_posterior", "log_surrogate_posterior"], gridRows);

  const thetaHeader = Array.from({ length: dim }, (_, k) => `theta_${k}`);
  writeCsv(
    dir,
    "initial_training.csv",
    "initial_training",
    [...thetaHeader, "loglik"],
    Array.from({ length: nInitial }, () => [
      ...Array.from({ length: dim }, () => 2 * gauss(r)),
      -Math.abs(gauss(r)),
    ]),
  );

  writeCsv(
    dir,
    "training_history.csv",
    "training_history",
    ["iteration", ...thetaHeader, "loglik", "acquisition", "halt_reason"],
    Array.from({ length: nSelected }, (_, k) => [
      k + 1,
      ...Array.from({ length: dim }, () => 2 * gauss(r)),
      -Math.abs(gauss(r)),
      -10 - k / 10,
      "",
    ]),
  );

  for (const name of ["surrogate_samples.csv", "true_samples.csv"]) {
    writeCsv(
      dir,
      name,
      name.replace(".csv", ""),
      [...thetaHeader, "log_target", "accepted"],
      Array.from({ length: nSamples }, () => [
        ...Array.from({ length: dim }, () => gauss(r)),
        -Math.abs(gauss(r)),
        r() < 0.5 ? 1 : 0,
      ]),
    );
  }

  const diagRows: (string | number)[][] = [];
  for (let k = 0; k <= 6; k++) {
    diagRows.push([k * 25, 5 / (1 + k), 2 / (1 + k), 4 / (1 + k), 1.5 / (1 + k), 1 + 10 / (1 + k), 1.0, 600, 0, 0, 0]);
  }
  writeCsv(
    dir,
    "diagnostics.csv",
    "diagnostics",
    [
      "iteration",
      "e_approx",
      "e_true",
      "e_approx_star",
      "e_true_star",
      "r_measure",
      "mean_weight",
      "n_samples_each",
      "n_excluded_approx",
      "n_excluded_true",
      "n_excluded_weights",
    ],
    diagRows,
  );

  return dir;
}
