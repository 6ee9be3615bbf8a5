/**
 * Deterministic SVG scene building: fixed float formatting, no randomness,
 * so identical inputs produce byte-identical documents.
 */

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export interface Scale {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export const DEFAULT_VIEW: Viewport = { width: 480, height: 320, margin: 46 };

export const PALETTE = ["#1f6fb2", "#d1643a", "#3d9970", "#8661b2", "#666666"];

function f(v: number): string {
  return v.toFixed(3).replace(/^-0\.000$/, "0.000");
}

export class Plot {
  private parts: string[] = [];
  private view: Viewport;
  private scale: Scale;

  constructor(scale: Scale, view: Viewport = DEFAULT_VIEW, title = "") {
    this.view = view;
    this.scale = scale;
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${view.width}" ` +
        `height="${view.height}" viewBox="0 0 ${view.width} ${view.height}">`,
      `<rect width="${view.width}" height="${view.height}" fill="#ffffff"/>`,
    );
    if (title) {
      this.parts.push(
        `<text x="${view.width / 2}" y="18" text-anchor="middle" ` +
          `font-family="sans-serif" font-size="13">${escapeXml(title)}</text>`,
      );
    }
  }

  px(x: number): number {
    const { width, margin } = this.view;
    const t = (x - this.scale.x0) / (this.scale.x1 - this.scale.x0 || 1);
    return margin + t * (width - 2 * margin);
  }

  py(y: number): number {
    const { height, margin } = this.view;
    const t = (y - this.scale.y0) / (this.scale.y1 - this.scale.y0 || 1);
    return height - margin - t * (height - 2 * margin);
  }

  axes(xLabel: string, yLabel: string, ticks = 5): void {
    const { width, height, margin } = this.view;
    this.parts.push(
      `<rect x="${margin}" y="${margin}" width="${width - 2 * margin}" ` +
        `height="${height - 2 * margin}" fill="none" stroke="#222222"/>`,
    );
    for (let i = 0; i <= ticks; i++) {
      const xv = this.scale.x0 + ((this.scale.x1 - this.scale.x0) * i) / ticks;
      const yv = this.scale.y0 + ((this.scale.y1 - this.scale.y0) * i) / ticks;
      this.parts.push(
        `<text x="${f(this.px(xv))}" y="${height - margin + 16}" ` +
          `text-anchor="middle" font-family="sans-serif" font-size="10">` +
          `${trimTick(xv)}</text>`,
        `<text x="${margin - 6}" y="${f(this.py(yv) + 3)}" ` +
          `text-anchor="end" font-family="sans-serif" font-size="10">` +
          `${trimTick(yv)}</text>`,
      );
    }
    this.parts.push(
      `<text x="${width / 2}" y="${height - 8}" text-anchor="middle" ` +
        `font-family="sans-serif" font-size="11">${escapeXml(xLabel)}</text>`,
      `<text x="14" y="${height / 2}" text-anchor="middle" ` +
        `font-family="sans-serif" font-size="11" ` +
        `transform="rotate(-90 14 ${height / 2})">${escapeXml(yLabel)}</text>`,
    );
  }

  polyline(xs: number[], ys: number[], color: string, width = 1.5,
           dash = ""): void {
    const pts = xs
      .map((x, i) => `${f(this.px(x))},${f(this.py(ys[i]))}`)
      .join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" ` +
        `stroke-width="${width}"${dashAttr}/>`,
    );
  }

  band(xs: number[], lo: number[], hi: number[], color: string,
       opacity = 0.25): void {
    const upper = xs.map((x, i) => `${f(this.px(x))},${f(this.py(hi[i]))}`);
    const lower = xs
      .map((x, i) => `${f(this.px(x))},${f(this.py(lo[i]))}`)
      .reverse();
    this.parts.push(
      `<polygon points="${upper.join(" ")} ${lower.join(" ")}" ` +
        `fill="${color}" fill-opacity="${opacity}" stroke="none"/>`,
    );
  }

  dots(xs: number[], ys: number[], color: string, r = 1.2,
       opacity = 1.0): void {
    const parts: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      parts.push(
        `<circle cx="${f(this.px(xs[i]))}" cy="${f(this.py(ys[i]))}" ` +
          `r="${r}" fill="${color}" fill-opacity="${opacity}"/>`,
      );
    }
    this.parts.push(parts.join(""));
  }

  errorBars(xs: number[], ys: number[], err: number[], color: string): void {
    for (let i = 0; i < xs.length; i++) {
      const x = f(this.px(xs[i]));
      this.parts.push(
        `<line x1="${x}" y1="${f(this.py(ys[i] - err[i]))}" x2="${x}" ` +
          `y2="${f(this.py(ys[i] + err[i]))}" stroke="${color}" ` +
          `stroke-width="1"/>`,
      );
    }
  }

  legend(entries: Array<[string, string]>): void {
    const { width, margin } = this.view;
    entries.forEach(([label, color], i) => {
      const y = margin + 14 + 14 * i;
      this.parts.push(
        `<rect x="${width - margin - 110}" y="${y - 8}" width="12" ` +
          `height="8" fill="${color}"/>`,
        `<text x="${width - margin - 94}" y="${y}" ` +
          `font-family="sans-serif" font-size="10">${escapeXml(label)}</text>`,
      );
    });
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function trimTick(v: number): string {
  const s = v.toFixed(2);
  return s.replace(/\.?0+$/, "").replace(/^-0$/, "0");
}

export function bounds(values: number[], pad = 0.05): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!Number.isFinite(lo)) {
    lo = 0;
    hi = 1;
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const span = hi - lo;
  return [lo - pad * span, hi + pad * span];
}
