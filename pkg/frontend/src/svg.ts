// Hand-rolled SVG scene builder. No fonts are embedded and no
// randomness or timestamps enter the output, so a given input always
// produces identical bytes.

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 64, right: 20, top: 36, bottom: 44 };

export interface Scale {
  lo: number;
  hi: number;
  map(v: number): number;
}

function fmt(v: number): string {
  // fixed tick formatting: exponential for very small/large, plain otherwise
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return parseFloat(v.toPrecision(5)).toString();
}

function coord(v: number): string {
  return v.toFixed(2);
}

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  if (!(hi > lo)) {
    // degenerate extent: pad symmetrically so flat data still renders
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.1 : 1;
    lo -= pad;
    hi += pad;
  }
  const span = hi - lo;
  return {
    lo, hi,
    map: (v: number) => outLo + ((v - lo) / span) * (outHi - outLo),
  };
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === Infinity) { lo = 0; hi = 1; }
  return [lo, hi];
}

function ticks(lo: number, hi: number, n = 6): number[] {
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const out: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + s * 1e-9; v += s) {
    out.push(Math.abs(v) < s * 1e-9 ? 0 : v);
  }
  return out;
}

export class Figure {
  private parts: string[] = [];
  readonly x: Scale;
  readonly y: Scale;

  constructor(title: string, xLabel: string, yLabel: string,
              xExtent: [number, number], yExtent: [number, number]) {
    this.x = linearScale(xExtent[0], xExtent[1], MARGIN.left, WIDTH - MARGIN.right);
    this.y = linearScale(yExtent[0], yExtent[1], HEIGHT - MARGIN.bottom, MARGIN.top);
    this.parts.push(
      `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="15" ` +
      `font-family="sans-serif">${escapeXml(title)}</text>`);
    this.axes(xLabel, yLabel);
  }

  private axes(xLabel: string, yLabel: string): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
    for (const t of ticks(this.x.lo, this.x.hi)) {
      const px = coord(this.x.map(t));
      this.parts.push(
        `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`,
        `<text x="${px}" y="${y0 + 18}" text-anchor="middle" font-size="11" ` +
        `font-family="sans-serif">${fmt(t)}</text>`);
    }
    for (const t of ticks(this.y.lo, this.y.hi)) {
      const py = coord(this.y.map(t));
      this.parts.push(
        `<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`,
        `<text x="${x0 - 8}" y="${py}" text-anchor="end" dominant-baseline="middle" ` +
        `font-size="11" font-family="sans-serif">${fmt(t)}</text>`);
    }
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 8}" text-anchor="middle" ` +
      `font-size="13" font-family="sans-serif">${escapeXml(xLabel)}</text>`,
      `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" ` +
      `font-family="sans-serif" transform="rotate(-90 16 ${(y0 + y1) / 2})">` +
      `${escapeXml(yLabel)}</text>`);
  }

  polyline(xs: number[], ys: number[], stroke: string, dash = ""): void {
    const pts = xs.map((x, i) =>
      `${coord(this.x.map(x))},${coord(this.y.map(ys[i]))}`).join(" ");
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.5"${d}/>`);
  }

  markers(xs: number[], ys: number[], fill: string, r = 3): void {
    for (let i = 0; i < xs.length; i++) {
      this.parts.push(
        `<circle cx="${coord(this.x.map(xs[i]))}" cy="${coord(this.y.map(ys[i]))}" ` +
        `r="${r}" fill="${fill}"/>`);
    }
  }

  hline(y: number, stroke: string, label = ""): void {
    const py = coord(this.y.map(y));
    this.parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${WIDTH - MARGIN.right}" ` +
      `y2="${py}" stroke="${stroke}" stroke-dasharray="6 3"/>`);
    if (label) {
      this.parts.push(
        `<text x="${WIDTH - MARGIN.right - 4}" y="${coord(this.y.map(y) - 5)}" ` +
        `text-anchor="end" font-size="11" font-family="sans-serif" ` +
        `fill="${stroke}">${escapeXml(label)}</text>`);
    }
  }

  annotate(x: number, y: number, text: string, fill: string): void {
    this.parts.push(
      `<circle cx="${coord(this.x.map(x))}" cy="${coord(this.y.map(y))}" r="4" ` +
      `fill="none" stroke="${fill}" stroke-width="1.5"/>`,
      `<text x="${coord(this.x.map(x) + 7)}" y="${coord(this.y.map(y) - 7)}" ` +
      `font-size="11" font-family="sans-serif" fill="${fill}">` +
      `${escapeXml(text)}</text>`);
  }

  legend(entries: Array<[string, string]>): void {
    let y = MARGIN.top + 10;
    for (const [label, color] of entries) {
      this.parts.push(
        `<line x1="${MARGIN.left + 10}" y1="${y}" x2="${MARGIN.left + 34}" ` +
        `y2="${y}" stroke="${color}" stroke-width="2"/>`,
        `<text x="${MARGIN.left + 40}" y="${y + 4}" font-size="12" ` +
        `font-family="sans-serif">${escapeXml(label)}</text>`);
      y += 18;
    }
  }

  render(): string {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
      this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
