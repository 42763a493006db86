/**
 * Bivariate Gaussian kernel density estimation on a regular grid.
 *
 * Bandwidth follows Scott's rule per coordinate: h_i = sd_i * n^(-1/6)
 * (the 2-D Scott exponent), which is recorded by callers in the image
 * metadata for reproducibility.
 */

export interface KdeResult {
  values: Float64Array; // row-major [ny][nx]
  nx: number;
  ny: number;
  x0: number;
  x1: number;
  y0: number;
  y1: number;
  bandwidth: [number, number];
}

function std(xs: number[]): number {
  const m = xs.reduce((a, b) => a + b, 0) / xs.length;
  const v = xs.reduce((a, b) => a + (b - m) * (b - m), 0) / (xs.length - 1);
  return Math.sqrt(v);
}

export function scottBandwidth(xs: number[], ys: number[]): [number, number] {
  const n = xs.length;
  const factor = Math.pow(n, -1 / 6);
  return [std(xs) * factor, std(ys) * factor];
}

export function kde2d(
  xs: number[],
  ys: number[],
  gridSize = 80,
  padFactor = 3.0,
): KdeResult {
  if (xs.length !== ys.length) {
    throw new Error("x and y sample lengths differ");
  }
  const n = xs.length;
  const [hx, hy] = scottBandwidth(xs, ys);
  const x0 = Math.min(...xs) - padFactor * hx;
  const x1 = Math.max(...xs) + padFactor * hx;
  const y0 = Math.min(...ys) - padFactor * hy;
  const y1 = Math.max(...ys) + padFactor * hy;

  const values = new Float64Array(gridSize * gridSize);
  const dx = (x1 - x0) / (gridSize - 1);
  const dy = (y1 - y0) / (gridSize - 1);
  const cx = 1 / (2 * hx * hx);
  const cy = 1 / (2 * hy * hy);
  const norm = 1 / (2 * Math.PI * hx * hy * n);

  for (let k = 0; k < n; k++) {
    // kernels have negligible support beyond ~5 bandwidths; restrict the loop
    const i0 = Math.max(0, Math.floor((xs[k] - 5 * hx - x0) / dx));
    const i1 = Math.min(gridSize - 1, Math.ceil((xs[k] + 5 * hx - x0) / dx));
    const j0 = Math.max(0, Math.floor((ys[k] - 5 * hy - y0) / dy));
    const j1 = Math.min(gridSize - 1, Math.ceil((ys[k] + 5 * hy - y0) / dy));
    for (let j = j0; j <= j1; j++) {
      const gy = y0 + j * dy;
      const ey = (gy - ys[k]) * (gy - ys[k]) * cy;
      for (let i = i0; i <= i1; i++) {
        const gx = x0 + i * dx;
        const ex = (gx - xs[k]) * (gx - xs[k]) * cx;
        values[j * gridSize + i] += norm * Math.exp(-(ex + ey));
      }
    }
  }
  return { values, nx: gridSize, ny: gridSize, x0, x1, y0, y1, bandwidth: [hx, hy] };
}
