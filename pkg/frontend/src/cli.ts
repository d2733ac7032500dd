#!/usr/bin/env node
/** render --kind K --in file.csv [--in more.csv] --out fig.svg
 *
 * Output is a standalone SVG plus a '<out>.src.txt' sidecar with the
 * sha256 of every input CSV.
 */
import { existsSync, readFileSync, writeFileSync } from "node:fs";

import { MissingInput } from "./errors.js";
import { FigureKind, render } from "./render.js";

interface Args {
  kind: FigureKind;
  inputs: string[];
  out: string;
  xLabel?: string;
  yLabel?: string;
  xLog?: boolean;
  yLog?: boolean;
  title?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Partial<Args> & { inputs: string[] } = { inputs: [] };
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new MissingInput(`flag ${a} needs a value`);
      return argv[i];
    };
    switch (a) {
      case "--kind":
        args.kind = next() as FigureKind;
        break;
      case "--in":
        args.inputs.push(next());
        break;
      case "--out":
        args.out = next();
        break;
      case "--x-label":
        args.xLabel = next();
        break;
      case "--y-label":
        args.yLabel = next();
        break;
      case "--title":
        args.title = next();
        break;
      case "--x-log":
        args.xLog = true;
        break;
      case "--y-log":
        args.yLog = true;
        break;
      case "--no-x-log":
        args.xLog = false;
        break;
      case "--no-y-log":
        args.yLog = false;
        break;
      default:
        throw new MissingInput(`unknown flag ${a}`);
    }
  }
  if (!args.kind || !args.out || args.inputs.length === 0) {
    throw new MissingInput("required: --kind {convergence|profile|overlay} --in file.csv --out fig.svg");
  }
  return args as Args;
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    for (const path of args.inputs) {
      if (!existsSync(path)) throw new MissingInput(`input ${path} does not exist`);
    }
    const { svg, sidecar } = render({
      kind: args.kind,
      inputs: args.inputs.map((path) => ({ name: path, text: readFileSync(path, "utf8") })),
      xLabel: args.xLabel,
      yLabel: args.yLabel,
      xLog: args.xLog,
      yLog: args.yLog,
      title: args.title,
    });
    writeFileSync(args.out, svg);
    writeFileSync(args.out + ".src.txt", sidecar);
    process.stdout.write(`wrote ${args.out}\n`);
    return 0;
  } catch (err) {
    const e = err as Error;
    process.stderr.write(`${e.name}: ${e.message}\n`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
