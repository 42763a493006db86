/**
 * Minimal SVG document builder: string assembly only, no DOM, so output is
 * deterministic byte-for-byte for identical inputs.
 */

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  return Number(x.toFixed(3)).toString();
}

export class Svg {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  push(element: string): void {
    this.parts.push(element);
  }

  rect(x: number, y: number, w: number, h: number, attrs = ""): void {
    this.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ${attrs}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, attrs = ""): void {
    this.push(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" ${attrs}/>`);
  }

  path(d: string, attrs = ""): void {
    this.push(`<path d="${d}" ${attrs}/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, attrs = ""): void {
    this.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${attrs}/>`,
    );
  }

  polyline(points: Array<[number, number]>, attrs = ""): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.push(`<polyline points="${pts}" fill="none" ${attrs}/>`);
  }

  text(x: number, y: number, content: string, attrs = ""): void {
    this.push(`<text x="${fmt(x)}" y="${fmt(y)}" ${attrs}>${escapeXml(content)}</text>`);
  }

  metadata(payload: object): void {
    this.push(`<metadata>${escapeXml(JSON.stringify(payload))}</metadata>`);
  }

  group(attrs: string, body: (svg: Svg) => void): void {
    this.push(`<g ${attrs}>`);
    body(this);
    this.push("</g>");
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Linear data->pixel scale. */
export class Scale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  apply(x: number): number {
    if (this.d1 === this.d0) return (this.r0 + this.r1) / 2;
    return this.r0 + ((x - this.d0) / (this.d1 - this.d0)) * (this.r1 - this.r0);
  }

  ticks(n = 5): number[] {
    const span = this.d1 - this.d0;
    if (span === 0) return [this.d0];
    const step = Math.pow(10, Math.floor(Math.log10(Math.abs(span) / n)));
    const err = (Math.abs(span) / n) / step;
    const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
    const s = step * mult * Math.sign(span);
    const start = Math.ceil(this.d0 / s) * s;
    const out: number[] = [];
    for (let v = start; (v - this.d1) * Math.sign(span) <= 1e-12 * Math.abs(span); v += s) {
      out.push(Number(v.toPrecision(12)));
    }
    return out;
  }
}

/** Compact viridis-like colormap (7 anchor stops, linear interpolation). */
const STOPS: Array<[number, number, number]> = [
  [68, 1, 84],
  [70, 50, 127],
  [54, 92, 141],
  [39, 127, 142],
  [31, 161, 135],
  [74, 194, 109],
  [253, 231, 37],
];

export function viridis(t: number): string {
  const x = Math.min(1, Math.max(0, t)) * (STOPS.length - 1);
  const i = Math.min(STOPS.length - 2, Math.floor(x));
  const f = x - i;
  const c = STOPS[i].map((v, k) => Math.round(v + f * (STOPS[i + 1][k] - v)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}
