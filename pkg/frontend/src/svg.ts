/** Deterministic SVG line-chart builder.
 *
 * No timestamps, no generated ids, fixed styling: identical inputs give
 * byte-identical output.
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xLog: boolean;
  yLog: boolean;
  series: Series[];
}

const W = 720;
const H = 480;
const M = { left: 78, right: 24, top: 34, bottom: 58 };
const PALETTE = ["#1f6fb2", "#d1495b", "#3a9d5d", "#8a5cb8", "#c98a18", "#3aa0a6"];
const FONT = "font-family=\"Menlo, Consolas, monospace\"";

function fmt(v: number): string {
  // fixed-precision pixel coordinates keep the payload byte-stable
  return v.toFixed(2);
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("+", "");
  const s = v.toPrecision(4);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

interface Scale {
  (v: number): number;
  ticks: number[];
}

function makeScale(values: number[], log: boolean, lo: number, hi: number): Scale {
  let vmin = Math.min(...values);
  let vmax = Math.max(...values);
  if (log) {
    const pos = values.filter((v) => v > 0);
    vmin = Math.min(...pos);
    vmax = Math.max(...pos);
    let lmin = Math.floor(Math.log10(vmin));
    let lmax = Math.ceil(Math.log10(vmax));
    if (lmax === lmin) lmax += 1;
    const f = (v: number) => lo + ((Math.log10(v) - lmin) / (lmax - lmin)) * (hi - lo);
    const ticks: number[] = [];
    for (let e = lmin; e <= lmax; e++) ticks.push(Math.pow(10, e));
    return Object.assign(f, { ticks });
  }
  if (vmax === vmin) {
    vmax = vmin + 1;
    vmin = vmin - 1;
  }
  const span = vmax - vmin;
  const step = niceStep(span / 5);
  const tmin = Math.ceil(vmin / step) * step;
  const ticks: number[] = [];
  for (let t = tmin; t <= vmax + 1e-12 * span; t += step) ticks.push(roundTick(t, step));
  const f = (v: number) => lo + ((v - vmin) / span) * (hi - lo);
  return Object.assign(f, { ticks });
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const r = raw / mag;
  if (r <= 1) return mag;
  if (r <= 2) return 2 * mag;
  if (r <= 5) return 5 * mag;
  return 10 * mag;
}

function roundTick(t: number, step: number): number {
  const d = Math.max(0, -Math.floor(Math.log10(step)) + 1);
  return Number(t.toFixed(d + 2));
}

export function renderChart(spec: ChartSpec): string {
  const allX = spec.series.flatMap((s) => s.x);
  const allY = spec.series.flatMap((s) => s.y);
  const sx = makeScale(allX, spec.xLog, M.left, W - M.right);
  const sy = makeScale(allY, spec.yLog, H - M.bottom, M.top);

  const out: string[] = [];
  out.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`);
  out.push(`<rect width="${W}" height="${H}" fill="#ffffff"/>`);
  out.push(`<text x="${W / 2}" y="20" text-anchor="middle" font-size="14" ${FONT}>${escapeXml(spec.title)}</text>`);

  // axes
  out.push(
    `<line x1="${M.left}" y1="${H - M.bottom}" x2="${W - M.right}" y2="${H - M.bottom}" stroke="#222222" stroke-width="1"/>`,
  );
  out.push(`<line x1="${M.left}" y1="${M.top}" x2="${M.left}" y2="${H - M.bottom}" stroke="#222222" stroke-width="1"/>`);

  for (const t of sx.ticks) {
    const px = sx(t);
    if (px < M.left - 0.5 || px > W - M.right + 0.5) continue;
    out.push(`<line x1="${fmt(px)}" y1="${H - M.bottom}" x2="${fmt(px)}" y2="${H - M.bottom + 5}" stroke="#222222"/>`);
    out.push(
      `<text x="${fmt(px)}" y="${H - M.bottom + 20}" text-anchor="middle" font-size="11" ${FONT}>${fmtTick(t)}</text>`,
    );
  }
  for (const t of sy.ticks) {
    const py = sy(t);
    if (py < M.top - 0.5 || py > H - M.bottom + 0.5) continue;
    out.push(`<line x1="${M.left - 5}" y1="${fmt(py)}" x2="${M.left}" y2="${fmt(py)}" stroke="#222222"/>`);
    out.push(
      `<text x="${M.left - 9}" y="${fmt(py + 4)}" text-anchor="end" font-size="11" ${FONT}>${fmtTick(t)}</text>`,
    );
    out.push(
      `<line x1="${M.left}" y1="${fmt(py)}" x2="${W - M.right}" y2="${fmt(py)}" stroke="#dddddd" stroke-width="0.5"/>`,
    );
  }
  out.push(
    `<text x="${(M.left + W - M.right) / 2}" y="${H - 14}" text-anchor="middle" font-size="12" ${FONT}>${escapeXml(spec.xLabel)}</text>`,
  );
  out.push(
    `<text x="18" y="${(M.top + H - M.bottom) / 2}" text-anchor="middle" font-size="12" ${FONT} transform="rotate(-90 18 ${(M.top + H - M.bottom) / 2})">${escapeXml(spec.yLabel)}</text>`,
  );

  spec.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts: string[] = [];
    for (let j = 0; j < s.x.length; j++) {
      const xv = s.x[j];
      const yv = s.y[j];
      if (spec.xLog && xv <= 0) continue;
      if (spec.yLog && yv <= 0) continue;
      pts.push(`${fmt(sx(xv))},${fmt(sy(yv))}`);
    }
    out.push(`<polyline fill="none" stroke="${color}" stroke-width="1.6" points="${pts.join(" ")}"/>`);
    const ly = M.top + 8 + i * 18;
    out.push(`<line x1="${W - M.right - 150}" y1="${ly}" x2="${W - M.right - 120}" y2="${ly}" stroke="${color}" stroke-width="1.6"/>`);
    out.push(
      `<text x="${W - M.right - 114}" y="${ly + 4}" font-size="11" ${FONT}>${escapeXml(s.label)}</text>`,
    );
  });

  out.push("</svg>");
  return out.join("\n") + "\n";
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
