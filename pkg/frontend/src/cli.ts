/**
 * plotkit CLI:
 *   plot --kind {decay,fidelity,heatmap,echo,t2} --in <csv> --out <svg> [--mask 0.95]
 *
 * Exit codes: 0 success, 2 schema mismatch (with a column diagnostic on
 * stderr), 1 any other failure.
 */

import { readFileSync, writeFileSync } from "fs";

import { SchemaError, parseCsv } from "./csv.js";
import { PlotKind, render } from "./render.js";

const KINDS: PlotKind[] = ["decay", "fidelity", "heatmap", "echo", "t2"];

interface Args {
  kind: PlotKind;
  input: string;
  output: string;
  mask: number;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== "plot") {
    throw new Error(`unknown command '${argv[0] ?? ""}'; expected 'plot'`);
  }
  const opts = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`malformed option near '${key}'`);
    }
    opts.set(key.slice(2), value);
  }
  const kind = opts.get("kind") as PlotKind | undefined;
  if (!kind || !KINDS.includes(kind)) {
    throw new Error(`--kind must be one of ${KINDS.join(", ")}`);
  }
  const input = opts.get("in");
  const output = opts.get("out");
  if (!input || !output) throw new Error("--in and --out are required");
  const mask = opts.has("mask") ? Number(opts.get("mask")) : 0.95;
  if (Number.isNaN(mask)) throw new Error("--mask must be a number");
  return { kind, input, output, mask };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const table = parseCsv(readFileSync(args.input, "utf8"));
    const svg = render(args.kind, table, args.mask);
    writeFileSync(args.output, svg);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

const isDirectRun = process.argv[1]?.endsWith("cli.js") ?? false;
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
