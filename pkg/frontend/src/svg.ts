/** Self-contained SVG plotting primitives (no DOM, no dependencies). */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const PALETTE = ["#1f6fb2", "#d1495b", "#3e8e5a", "#8d6cab", "#c98a2b", "#4f5d75"];

export interface Scale {
  (v: number): number;
  ticks(count?: number): number[];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 0.5;
    d1 += 0.5;
  }
  const f = ((v: number) => range[0] + ((v - d0) / (d1 - d0)) * (range[1] - range[0])) as Scale;
  f.ticks = (count = 5) => niceTicks(d0, d1, count);
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  if (d0 <= 0 || d1 <= 0) throw new Error("log scale needs positive domain");
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const f = ((v: number) =>
    range[0] + ((Math.log10(v) - l0) / (l1 - l0 || 1)) * (range[1] - range[0])) as Scale;
  f.ticks = () => {
    const out: number[] = [];
    for (let p = Math.ceil(l0 - 1e-9); p <= Math.floor(l1 + 1e-9); p++) out.push(10 ** p);
    if (out.length < 2) return niceTicks(d0, d1, 4);
    return out;
  };
  return f;
}

export function niceTicks(lo: number, hi: number, count: number): number[] {
  const span = hi - lo;
  if (!(span > 0)) return [lo];
  const step0 = span / Math.max(count, 1);
  const mag = 10 ** Math.floor(Math.log10(step0));
  const norm = step0 / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) out.push(roundTo(v, step));
  return out;
}

function roundTo(v: number, step: number): number {
  const digits = Math.max(0, -Math.floor(Math.log10(step)) + 1);
  return Number(v.toFixed(digits + 2));
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1).replace("e+", "e");
  return String(Number(v.toPrecision(6)));
}

const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class SvgCanvas {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  rect(x: number, y: number, w: number, h: number, fill: string, opacity = 1): void {
    this.parts.push(
      `<rect x="${r2(x)}" y="${r2(y)}" width="${r2(w)}" height="${r2(h)}" fill="${fill}"` +
        (opacity < 1 ? ` fill-opacity="${opacity}"` : "") +
        "/>",
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ""): void {
    this.parts.push(
      `<line x1="${r2(x1)}" y1="${r2(y1)}" x2="${r2(x2)}" y2="${r2(y2)}" stroke="${stroke}" stroke-width="${width}"` +
        (dash ? ` stroke-dasharray="${dash}"` : "") +
        "/>",
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): void {
    const pts = points.map(([x, y]) => `${r2(x)},${r2(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"` +
        (dash ? ` stroke-dasharray="${dash}"` : "") +
        "/>",
    );
  }

  circle(x: number, y: number, radius: number, fill: string): void {
    this.parts.push(`<circle cx="${r2(x)}" cy="${r2(y)}" r="${radius}" fill="${fill}"/>`);
  }

  text(
    x: number,
    y: number,
    content: string,
    opts: { size?: number; anchor?: string; fill?: string; rotate?: number } = {},
  ): void {
    const { size = 11, anchor = "start", fill = "#222", rotate } = opts;
    const transform = rotate ? ` transform="rotate(${rotate} ${r2(x)} ${r2(y)})"` : "";
    this.parts.push(
      `<text x="${r2(x)}" y="${r2(y)}" font-size="${size}" text-anchor="${anchor}" ` +
        `fill="${fill}" font-family="Helvetica, Arial, sans-serif"${transform}>${esc(content)}</text>`,
    );
  }

  axes(
    xs: Scale,
    ys: Scale,
    frame: { x0: number; x1: number; y0: number; y1: number },
    labels: { x: string; y: string },
  ): void {
    const { x0, x1, y0, y1 } = frame;
    this.line(x0, y0, x1, y0, "#222");
    this.line(x0, y0, x0, y1, "#222");
    for (const t of xs.ticks()) {
      const px = xs(t);
      if (px < x0 - 0.5 || px > x1 + 0.5) continue;
      this.line(px, y0, px, y0 + 4, "#222");
      this.text(px, y0 + 16, fmt(t), { anchor: "middle" });
    }
    for (const t of ys.ticks()) {
      const py = ys(t);
      if (py > y0 + 0.5 || py < y1 - 0.5) continue;
      this.line(x0 - 4, py, x0, py, "#222");
      this.text(x0 - 7, py + 3.5, fmt(t), { anchor: "end" });
      this.line(x0, py, x1, py, "#eee");
    }
    this.text((x0 + x1) / 2, y0 + 32, labels.x, { anchor: "middle", size: 12 });
    this.text(x0 - 46, (y0 + y1) / 2, labels.y, { anchor: "middle", size: 12, rotate: -90 });
  }

  render(title: string): string {
    const head =
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>` +
      `<text x="${this.width / 2}" y="20" font-size="14" text-anchor="middle" ` +
      `font-family="Helvetica, Arial, sans-serif" fill="#111">${esc(title)}</text>`;
    return `${head}${this.parts.join("")}</svg>`;
  }
}

function r2(v: number): number {
  return Math.round(v * 100) / 100;
}
