#!/usr/bin/env node
/**
 * tsgait-plots — render figures from tsgait experiment CSV artifacts.
 *
 * Usage:
 *   tsgait-plots render --spec figure.json
 *   tsgait-plots learning-curve --inputs a.csv,b.csv --labels task,joint \
 *       --output fig.svg [--png]
 *   tsgait-plots speed-tracking --inputs speed_tracking.csv --output fig.svg
 *   tsgait-plots grf-profile --grf grf_profile.csv --refdump refs.csv \
 *       --output fig.svg
 *   tsgait-plots foot-scatter --inputs samples.csv --title "episode/task" \
 *       --output fig.svg
 *
 * The spec file is JSON:
 *   { "kind": "learning_curve" | "speed_tracking" | "grf_profile"
 *            | "foot_scatter",
 *     "inputs": [...csv paths...], "labels": [...],
 *     "output": "figure.svg", "png": true, "title": "..." }
 */

import { readFileSync, writeFileSync } from "node:fs";
import { exit } from "node:process";

import { SchemaError } from "./csv.js";
import {
  Figure,
  footScatterFigure,
  grfProfileFigure,
  learningCurveFigure,
  speedTrackingFigure,
} from "./figures.js";

export interface FigureSpec {
  kind: string;
  inputs: string[];
  output: string;
  labels?: string[];
  title?: string;
  png?: boolean;
}

export function buildFigure(spec: FigureSpec): Figure {
  switch (spec.kind) {
    case "learning_curve":
      return learningCurveFigure(spec.inputs, spec.labels ?? []);
    case "speed_tracking":
      return speedTrackingFigure(spec.inputs, spec.labels ?? []);
    case "grf_profile":
      if (spec.inputs.length !== 2) {
        throw new SchemaError(
          "grf_profile needs exactly two inputs: grf CSV, refdump CSV");
      }
      return grfProfileFigure(spec.inputs[0], spec.inputs[1]);
    case "foot_scatter":
      return footScatterFigure(spec.inputs[0],
                               spec.title ?? "foot locations");
    default:
      throw new SchemaError(`unknown figure kind '${spec.kind}'`);
  }
}

export function renderSpec(spec: FigureSpec): string[] {
  const figure = buildFigure(spec);
  const written: string[] = [];
  const svg = figure.toSvg();
  writeFileSync(spec.output, svg);
  written.push(spec.output);
  if (spec.png) {
    const pngPath = spec.output.replace(/\.svg$/, "") + ".png";
    writeFileSync(pngPath, figure.toPng());
    written.push(pngPath);
  }
  return written;
}

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    if (argv[i].startsWith("--")) {
      const key = argv[i].slice(2);
      if (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
        out.set(key, argv[++i]);
      } else {
        out.set(key, "true");
      }
    }
  }
  return out;
}

function specFromArgs(command: string, args: Map<string, string>): FigureSpec {
  const output = args.get("output");
  if (!output) throw new SchemaError("--output is required");
  const inputs = (args.get("inputs") ?? "").split(",").filter((s) => s);
  const labels = (args.get("labels") ?? "").split(",").filter((s) => s);
  const png = args.has("png");
  switch (command) {
    case "learning-curve":
      return { kind: "learning_curve", inputs, labels, output, png };
    case "speed-tracking":
      return { kind: "speed_tracking", inputs, labels, output, png };
    case "grf-profile": {
      const grf = args.get("grf");
      const refdump = args.get("refdump");
      if (!grf || !refdump) {
        throw new SchemaError("grf-profile needs --grf and --refdump");
      }
      return { kind: "grf_profile", inputs: [grf, refdump], output, png };
    }
    case "foot-scatter":
      return { kind: "foot_scatter", inputs, output, png,
               title: args.get("title") };
    default:
      throw new SchemaError(`unknown command '${command}'`);
  }
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (!command) {
    console.error("usage: tsgait-plots <render|learning-curve|" +
                  "speed-tracking|grf-profile|foot-scatter> ...");
    return 1;
  }
  try {
    let spec: FigureSpec;
    if (command === "render") {
      const args = parseArgs(rest);
      const path = args.get("spec");
      if (!path) throw new SchemaError("render needs --spec <file.json>");
      spec = JSON.parse(readFileSync(path, "utf-8")) as FigureSpec;
    } else {
      spec = specFromArgs(command, parseArgs(rest));
    }
    const written = renderSpec(spec);
    for (const path of written) console.log(`wrote ${path}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("main.js")) {
  exit(main(process.argv.slice(2)));
}
