/**
 * Turns images into token dumps through the runtime.
 *
 * Conventions recorded in each dump's sidecar: attention row taken from the
 * final prompt token only, post-softmax, arithmetic mean over heads; hidden
 * states cast to 32-bit on write.
 */

import { mkdirSync, readdirSync, writeFileSync } from "node:fs";
import { basename, extname, join } from "node:path";

import { readImage } from "./image.js";
import { writeDump, type TokenDump } from "./format.js";
import { DEFAULT_CONFIG, ToyRuntime, type RuntimeConfig } from "./runtime.js";

export const CALIBRATION_PROMPT = "Please describe the provided image.";

export interface ExtractionSpec {
  runtime: RuntimeConfig;
  /** Dump is taken at the output of layer K-1. */
  layerK: number;
  prompt: string;
  headAggregation: "mean";
}

export function defaultSpec(overrides: Partial<ExtractionSpec> = {}): ExtractionSpec {
  return {
    runtime: DEFAULT_CONFIG,
    layerK: 2,
    prompt: CALIBRATION_PROMPT,
    headAggregation: "mean",
    ...overrides,
  };
}

export interface ManifestEntry {
  image: string;
  dump: string | null;
  status: "ok" | "skipped";
  reason?: string;
}

export function extractDump(spec: ExtractionSpec, imagePath: string): TokenDump {
  if (spec.headAggregation !== "mean") {
    throw new Error(`unsupported head aggregation ${spec.headAggregation}`);
  }
  const runtime = new ToyRuntime(spec.runtime);
  const img = readImage(imagePath);
  const cap = runtime.forward(img, spec.prompt, spec.layerK);
  return {
    h: cap.gridH,
    w: cap.gridW,
    dim: spec.runtime.dim,
    features: Float32Array.from(cap.hidden),
    attention: Float32Array.from(cap.attention),
  };
}

function sidecar(spec: ExtractionSpec, imagePath: string, dump: TokenDump): string {
  return JSON.stringify(
    {
      model: spec.runtime.modelId,
      layer_k: spec.layerK,
      dump_after_layer: spec.layerK - 1,
      prompt: spec.prompt,
      head_aggregation: spec.headAggregation,
      image: basename(imagePath),
      grid: [dump.h, dump.w],
      dim: dump.dim,
    },
    null,
    2,
  ) + "\n";
}

const IMAGE_EXTENSIONS = new Set([".pgm", ".ppm"]);

export function extractDirectory(
  spec: ExtractionSpec, imageDir: string, outDir: string,
): ManifestEntry[] {
  mkdirSync(outDir, { recursive: true });
  const images = readdirSync(imageDir)
    .filter((f) => IMAGE_EXTENSIONS.has(extname(f).toLowerCase()))
    .sort();
  const manifest: ManifestEntry[] = [];
  for (const name of images) {
    const imagePath = join(imageDir, name);
    const stem = basename(name, extname(name));
    try {
      const dump = extractDump(spec, imagePath);
      const dumpPath = join(outDir, `${stem}.d2td`);
      writeDump(dumpPath, dump);
      writeFileSync(join(outDir, `${stem}.meta.json`),
                    sidecar(spec, imagePath, dump));
      manifest.push({ image: name, dump: `${stem}.d2td`, status: "ok" });
    } catch (err) {
      manifest.push({
        image: name,
        dump: null,
        status: "skipped",
        reason: err instanceof Error ? err.message : String(err),
      });
    }
  }
  const lines = manifest.map((e) =>
    `${e.image}\t${e.dump ?? "-"}\t${e.status}${e.reason ? `\t${e.reason}` : ""}`);
  writeFileSync(join(outDir, "manifest.tsv"), lines.join("\n") + "\n");
  return manifest;
}
