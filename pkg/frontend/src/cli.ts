/** render-figures: turn laboratory reports into SVG figures.
 *
 *   render-figures --report clt.json --kind clt_histogram --out fig.svg
 *   render-figures --report reports_dir --out figures_dir
 *
 * Directory mode batch-renders every recognized report.  Inputs are never
 * modified; a missing or malformed report exits nonzero with a message and
 * writes nothing.
 */

import { writeFileSync, statSync, readdirSync, mkdirSync, existsSync } from "node:fs";
import * as path from "node:path";

import { FIGURE_KINDS, FigureKind, recognize, renderFigure } from "./figures.js";

interface CliArgs {
  report?: string;
  kind?: string;
  out?: string;
}

function parseArgs(argv: string[]): CliArgs {
  const out: CliArgs = {};
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const take = () => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`missing value for ${flag}`);
      return v;
    };
    switch (flag) {
      case "--report":
        out.report = take();
        break;
      case "--kind":
        out.kind = take();
        break;
      case "--out":
        out.out = take();
        break;
      case "--help":
      case "-h":
        console.error(
          `usage: render-figures --report FILE --kind {${FIGURE_KINDS.join("|")}} --out FIG.svg\n` +
            "       render-figures --report DIR --out DIR",
        );
        process.exit(0);
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  return out;
}

function renderOne(report: string, kind: FigureKind, out: string): void {
  const svg = renderFigure({ report, kind, out });
  writeFileSync(out, svg, "utf-8");
  console.error(`wrote ${out}`);
}

export function main(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  if (!args.report || !args.out) {
    console.error("error: --report and --out are required");
    return 2;
  }
  try {
    const stats = existsSync(args.report) ? statSync(args.report) : null;
    if (stats === null) {
      console.error(`error: report not found: ${args.report}`);
      return 2;
    }
    if (stats.isDirectory()) {
      mkdirSync(args.out, { recursive: true });
      let rendered = 0;
      for (const entry of readdirSync(args.report).sort()) {
        const file = path.join(args.report, entry);
        for (const kind of recognize(file)) {
          const base = entry.replace(/\.(csv|json)$/, "");
          renderOne(file, kind, path.join(args.out, `${base}_${kind}.svg`));
          rendered++;
        }
      }
      if (rendered === 0) {
        console.error("error: no recognized reports in directory");
        return 1;
      }
      return 0;
    }
    if (!args.kind || !(FIGURE_KINDS as readonly string[]).includes(args.kind)) {
      console.error(`error: --kind must be one of ${FIGURE_KINDS.join(", ")}`);
      return 2;
    }
    renderOne(args.report, args.kind as FigureKind, args.out);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  path.resolve(process.argv[1]) === path.resolve(new URL(import.meta.url).pathname);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
