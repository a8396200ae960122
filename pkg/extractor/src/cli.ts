#!/usr/bin/env node
/**
 * vtprune-extract: materialize token dumps from images.
 *
 *   extract     --images <file|dir> --out-dir <dir> [--layer 2]
 *               [--prompt "..."] [--patch 8] [--seed 1234]
 *               [--bias-strength 3]
 *   gen-images  --out-dir <dir> [--count 100] [--size 64] [--seed 0]
 */

import { mkdirSync, statSync, writeFileSync } from "node:fs";
import { basename, extname, join } from "node:path";

import { CALIBRATION_PROMPT, defaultSpec, extractDirectory, extractDump } from "./extract.js";
import { writeDump } from "./format.js";
import { generateCorpus } from "./gen.js";
import { DEFAULT_CONFIG } from "./runtime.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${key}`);
    }
    out.set(key.slice(2), argv[i + 1]);
  }
  return out;
}

function num(args: Map<string, string>, key: string, fallback: number): number {
  const v = args.get(key);
  if (v === undefined) return fallback;
  const n = Number(v);
  if (!Number.isFinite(n)) throw new Error(`--${key} must be a number`);
  return n;
}

function cmdExtract(args: Map<string, string>): number {
  const images = args.get("images");
  const outDir = args.get("out-dir");
  if (!images || !outDir) {
    console.error("extract requires --images and --out-dir");
    return 1;
  }
  const spec = defaultSpec({
    layerK: num(args, "layer", 2),
    prompt: args.get("prompt") ?? CALIBRATION_PROMPT,
    runtime: {
      ...DEFAULT_CONFIG,
      patchSize: num(args, "patch", DEFAULT_CONFIG.patchSize),
      seed: num(args, "seed", DEFAULT_CONFIG.seed),
      posBiasStrength: num(args, "bias-strength",
                           DEFAULT_CONFIG.posBiasStrength),
    },
  });
  if (statSync(images).isDirectory()) {
    const manifest = extractDirectory(spec, images, outDir);
    const ok = manifest.filter((e) => e.status === "ok").length;
    const skipped = manifest.length - ok;
    console.log(`extracted ${ok} dumps to ${outDir} (${skipped} skipped)`);
    return ok > 0 ? 0 : 2;
  }
  mkdirSync(outDir, { recursive: true });
  const dump = extractDump(spec, images);
  const stem = basename(images, extname(images));
  const dumpPath = join(outDir, `${stem}.d2td`);
  writeDump(dumpPath, dump);
  writeFileSync(join(outDir, `${stem}.meta.json`), JSON.stringify({
    model: spec.runtime.modelId,
    layer_k: spec.layerK,
    prompt: spec.prompt,
    head_aggregation: spec.headAggregation,
    grid: [dump.h, dump.w],
  }, null, 2) + "\n");
  console.log(`wrote ${dumpPath} (${dump.h}x${dump.w}, dim ${dump.dim})`);
  return 0;
}

function cmdGenImages(args: Map<string, string>): number {
  const outDir = args.get("out-dir");
  if (!outDir) {
    console.error("gen-images requires --out-dir");
    return 1;
  }
  const paths = generateCorpus(outDir, num(args, "count", 100),
                               num(args, "size", 64), num(args, "seed", 0));
  console.log(`wrote ${paths.length} images to ${outDir}`);
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "extract":
        return cmdExtract(parseArgs(rest));
      case "gen-images":
        return cmdGenImages(parseArgs(rest));
      default:
        console.error(
          "usage: vtprune-extract <extract|gen-images> [options]");
        return 1;
    }
  } catch (err) {
    console.error(`vtprune-extract: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

const isDirectRun = process.argv[1] !== undefined &&
  import.meta.url.endsWith(basename(process.argv[1]));
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
