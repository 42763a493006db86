#!/usr/bin/env node
/**
 * Figure renderer for activegp artifact directories.
 *
 *   activegp-plot <kind> --dir <artifacts> --out <path> [options]
 *
 * kinds:
 *   grid-contour    2-D log-density grid with training-point overlays
 *   kde-projection  KDE contours of a sample projection (--pair i j,
 *                   --samples surrogate|true)
 *   trend           E_approx / E_true / R curves (--random-dir for insets)
 */

import { plotGridContour, plotKdeProjection, plotTrends } from "./plots.js";

interface Args {
  kind: string;
  dir?: string;
  out?: string;
  pair: [number, number];
  samples: string;
  randomDir?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { kind: argv[0] ?? "", pair: [0, 1], samples: "surrogate" };
  for (let i = 1; i < argv.length; i++) {
    switch (argv[i]) {
      case "--dir":
        args.dir = argv[++i];
        break;
      case "--out":
        args.out = argv[++i];
        break;
      case "--pair": {
        const a = Number(argv[++i]);
        const b = Number(argv[++i]);
        if (!Number.isInteger(a) || !Number.isInteger(b)) {
          throw new Error("--pair expects two integer coordinate indices");
        }
        args.pair = [a, b];
        break;
      }
      case "--samples":
        args.samples = argv[++i];
        break;
      case "--random-dir":
        args.randomDir = argv[++i];
        break;
      default:
        throw new Error(`unknown option ${argv[i]}`);
    }
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  if (!args.kind || !args.dir || !args.out) {
    console.error(
      "usage: activegp-plot <grid-contour|kde-projection|trend> --dir <artifacts> --out <image.svg> [--pair i j] [--samples surrogate|true] [--random-dir <artifacts>]",
    );
    return 2;
  }
  try {
    let written: string;
    switch (args.kind) {
      case "grid-contour":
        written = plotGridContour(args.dir, args.out);
        break;
      case "kde-projection": {
        const file = args.samples === "true" ? "true_samples.csv" : "surrogate_samples.csv";
        written = plotKdeProjection(args.dir, args.out, args.pair, file);
        break;
      }
      case "trend":
        written = plotTrends(args.dir, args.out, args.randomDir);
        break;
      default:
        console.error(`unknown plot kind ${args.kind}`);
        return 2;
    }
    console.log(written);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "")) {
  process.exit(main(process.argv.slice(2)));
}
