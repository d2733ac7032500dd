/** Figure kinds over the harness's CSV schemas.
 *
 * Figures never recompute statistics; they draw exactly what the CSV
 * contains.  Each render also produces a sidecar text body recording the
 * sha256 of every input file, so an image can be traced to its data.
 */
import { createHash } from "node:crypto";
import { basename } from "node:path";

import { column, parseCsv, Table } from "./csv.js";
import { MissingInput, SchemaMismatch } from "./errors.js";
import { ChartSpec, renderChart, Series } from "./svg.js";

export type FigureKind = "convergence" | "profile" | "overlay";

export interface FigureSpec {
  kind: FigureKind;
  inputs: { name: string; text: string }[];
  xLabel?: string;
  yLabel?: string;
  xLog?: boolean;
  yLog?: boolean;
  title?: string;
}

export interface Rendered {
  svg: string;
  sidecar: string;
}

const CONVERGENCE_HEADER = ["n", "delta", "median_sup_err", "p90_sup_err", "monotone_ok_fraction"];
const PROFILE_HEADER = ["y_mid", "density"];

function requireHeader(table: Table, expected: string[], source: string): void {
  if (table.header.length !== expected.length || expected.some((h, i) => table.header[i] !== h)) {
    throw new SchemaMismatch(
      `${source}: expected columns [${expected.join(",")}], got [${table.header.join(",")}]`,
    );
  }
}

function convergenceSeries(spec: FigureSpec): Series[] {
  if (spec.inputs.length !== 1) {
    throw new MissingInput("convergence figures take exactly one table CSV");
  }
  const t = parseCsv(spec.inputs[0].text, spec.inputs[0].name);
  requireHeader(t, CONVERGENCE_HEADER, spec.inputs[0].name);
  const x = column(t, "delta").map(Math.abs);
  return [
    { label: "median_sup_err", x, y: column(t, "median_sup_err") },
    { label: "p90_sup_err", x, y: column(t, "p90_sup_err") },
  ];
}

function profileSeries(spec: FigureSpec): Series[] {
  if (spec.inputs.length < 1) {
    throw new MissingInput("profile figures need at least one density CSV");
  }
  return spec.inputs.map((input) => {
    const t = parseCsv(input.text, input.name);
    requireHeader(t, PROFILE_HEADER, input.name);
    return { label: basename(input.name, ".csv"), x: column(t, "y_mid"), y: column(t, "density") };
  });
}

function overlaySeries(spec: FigureSpec): Series[] {
  if (spec.inputs.length !== 1) {
    throw new MissingInput("overlay figures take exactly one singular-terms CSV");
  }
  const t = parseCsv(spec.inputs[0].text, spec.inputs[0].name);
  const h = t.header;
  const epsCols = h.filter((name) => name.startsWith("L_eps_"));
  const ok =
    h[0] === "t" &&
    h[1] === "R" &&
    h[h.length - 1] === "L_hat" &&
    epsCols.length >= 1 &&
    epsCols.length === h.length - 3;
  if (!ok) {
    throw new SchemaMismatch(
      `${spec.inputs[0].name}: expected [t,R,L_eps_*...,L_hat], got [${h.join(",")}]`,
    );
  }
  // smallest epsilon = numerically smallest suffix
  const smallest = epsCols.reduce((a, b) =>
    Number(a.slice("L_eps_".length)) <= Number(b.slice("L_eps_".length)) ? a : b,
  );
  const x = column(t, "t");
  return [
    { label: "R", x, y: column(t, "R") },
    { label: smallest, x, y: column(t, smallest) },
    { label: "L_hat", x, y: column(t, "L_hat") },
  ];
}

const DEFAULTS: Record<FigureKind, { xLabel: string; yLabel: string; xLog: boolean; yLog: boolean; title: string }> = {
  convergence: {
    xLabel: "|delta|",
    yLabel: "sup error",
    xLog: true,
    yLog: true,
    title: "Skorokhod approximation decay",
  },
  profile: {
    xLabel: "y",
    yLabel: "occupation density",
    xLog: false,
    yLog: false,
    title: "Occupation density profiles",
  },
  overlay: {
    xLabel: "t",
    yLabel: "singular term",
    xLog: false,
    yLog: false,
    title: "Singular-term routes",
  },
};

export function render(spec: FigureSpec): Rendered {
  let series: Series[];
  switch (spec.kind) {
    case "convergence":
      series = convergenceSeries(spec);
      break;
    case "profile":
      series = profileSeries(spec);
      break;
    case "overlay":
      series = overlaySeries(spec);
      break;
    default:
      throw new MissingInput(`unknown figure kind '${spec.kind as string}'`);
  }
  const d = DEFAULTS[spec.kind];
  const chart: ChartSpec = {
    title: spec.title ?? d.title,
    xLabel: spec.xLabel ?? d.xLabel,
    yLabel: spec.yLabel ?? d.yLabel,
    xLog: spec.xLog ?? d.xLog,
    yLog: spec.yLog ?? d.yLog,
    series,
  };
  const svg = renderChart(chart);
  const sidecar =
    spec.inputs
      .map((input) => `${sha256(input.text)}  ${basename(input.name)}`)
      .join("\n") + "\n";
  return { svg, sidecar };
}

function sha256(text: string): string {
  return createHash("sha256").update(text).digest("hex");
}
