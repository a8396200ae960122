/**
 * Synthetic test-image generator: soft blobs on gradient backgrounds.
 *
 * Stands in for a photo corpus when driving calibration runs in
 * environments without one.
 */

import { mkdirSync } from "node:fs";
import { join } from "node:path";

import { writePgm, type GrayImage } from "./image.js";
import { Rng } from "./rng.js";

export function generateImage(seed: number, size: number): GrayImage {
  const rng = new Rng(seed);
  const pixels = new Float64Array(size * size);
  const gx = rng.next() - 0.5;
  const gy = rng.next() - 0.5;
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      pixels[y * size + x] =
        0.5 + gx * (x / size - 0.5) + gy * (y / size - 0.5);
    }
  }
  const blobs = 2 + Math.floor(rng.next() * 4);
  for (let b = 0; b < blobs; b++) {
    const cx = rng.next() * size;
    const cy = rng.next() * size;
    const radius = size * (0.08 + 0.15 * rng.next());
    const amp = (rng.next() - 0.3) * 0.9;
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        const d2 = (x - cx) ** 2 + (y - cy) ** 2;
        pixels[y * size + x] += amp * Math.exp(-d2 / (2 * radius * radius));
      }
    }
  }
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = Math.min(1, Math.max(0, pixels[i]));
  }
  return { width: size, height: size, pixels };
}

export function generateCorpus(outDir: string, count: number, size: number,
                               seed: number): string[] {
  mkdirSync(outDir, { recursive: true });
  const paths: string[] = [];
  for (let i = 0; i < count; i++) {
    const path = join(outDir, `img${String(i).padStart(4, "0")}.pgm`);
    writePgm(path, generateImage(seed + i, size));
    paths.push(path);
  }
  return paths;
}
