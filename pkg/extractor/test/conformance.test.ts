/**
 * Conformance against the pruning engine: every emitted dump must pass the
 * engine's own readers, and a >=100-image calibration run must yield a
 * visibly non-uniform bias prior.
 */

import { spawnSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, readdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { defaultSpec, extractDirectory } from "../src/extract.js";
import { readPrior } from "../src/format.js";
import { generateCorpus } from "../src/gen.js";
import { writePgm } from "../src/image.js";
import { generateImage } from "../src/gen.js";

const PY = process.env.VTPRUNE_PYTHON ?? "python3";

function runEngine(args: string[]) {
  return spawnSync(PY, ["-m", "vtprune", ...args], { encoding: "utf8" });
}

const work = mkdtempSync(join(tmpdir(), "extract-conformance-"));
const imageDir = join(work, "images");
const dumpDir = join(work, "dumps");
const priorPath = join(work, "prior.d2bp");
const N_IMAGES = 108;

describe("conformance with the pruning engine", () => {
  beforeAll(() => {
    const paths = generateCorpus(imageDir, N_IMAGES, 64, 42);
    expect(paths.length).toBe(N_IMAGES);
    // one deliberately non-patchifiable image: must be reported and skipped
    writePgm(join(imageDir, "odd.pgm"), generateImage(999, 60));
    const manifest = extractDirectory(defaultSpec(), imageDir, dumpDir);
    const ok = manifest.filter((e) => e.status === "ok");
    const skipped = manifest.filter((e) => e.status === "skipped");
    expect(ok.length).toBe(N_IMAGES);
    expect(skipped.length).toBe(1);
    expect(skipped[0].image).toBe("odd.pgm");
  }, 300_000);

  it("writes one dump and one sidecar per usable image", () => {
    const names = readdirSync(dumpDir);
    expect(names.filter((n) => n.endsWith(".d2td")).length).toBe(N_IMAGES);
    expect(names.filter((n) => n.endsWith(".meta.json")).length).toBe(N_IMAGES);
    expect(names).toContain("manifest.tsv");
    const manifest = readFileSync(join(dumpDir, "manifest.tsv"), "utf8");
    expect(manifest).toMatch(/odd\.pgm\t-\tskipped/);
  });

  it("every dump passes engine validation via calibrate", () => {
    // cmd_calibrate parses and validates each dump in the directory
    const res = runEngine(["calibrate", "--dumps", dumpDir,
                           "--out", priorPath]);
    expect(res.status, res.stderr).toBe(0);
    expect(res.stdout).toContain(`sample_count: ${N_IMAGES}`);
  });

  it("calibrated prior is visibly non-uniform (bottom-heavy)", () => {
    const prior = readPrior(priorPath);
    expect(prior.sampleCount).toBe(N_IMAGES);
    const rowMean = (r: number) => {
      let s = 0;
      for (let c = 0; c < prior.w; c++) s += prior.values[r * prior.w + c];
      return s / prior.w;
    };
    const top = rowMean(0);
    const bottom = rowMean(prior.h - 1);
    expect(bottom).toBeGreaterThan(1.5 * top);

    const render = runEngine(["render", "--in", priorPath,
                              "--out", join(work, "prior.pgm")]);
    expect(render.status, render.stderr).toBe(0);
    const pgm = readFileSync(join(work, "prior.pgm"));
    expect(pgm.subarray(0, 3).toString("ascii")).toBe("P5\n");
    const body = pgm.subarray(pgm.length - prior.h * prior.w);
    const spread = Math.max(...body) - Math.min(...body);
    expect(spread).toBeGreaterThan(64); // far from flat gray
  });

  it("a dump survives the full prune pipeline", () => {
    const dump = readdirSync(dumpDir).filter((n) => n.endsWith(".d2td"))[0];
    const report = join(work, "report.json");
    const res = runEngine(["prune", "--dump", join(dumpDir, dump),
                           "--prior", priorPath, "--keep", "0.25",
                           "--out", report,
                           "--render-dir", join(work, "render")]);
    expect(res.status, res.stderr).toBe(0);
    const doc = JSON.parse(readFileSync(report, "utf8"));
    expect(doc.kept.length).toBe(16); // 64 tokens * 0.25
    expect(existsSync(join(work, "render", "a_rel.pgm"))).toBe(true);
  });

  it("attention rows stay within softmax mass bounds after f32 cast", () => {
    for (const name of readdirSync(dumpDir)) {
      if (!name.endsWith(".d2td")) continue;
      const buf = readFileSync(join(dumpDir, name));
      const h = buf.readUInt32LE(5);
      const w = buf.readUInt32LE(9);
      const d = buf.readUInt32LE(13);
      let mass = 0;
      const attnOff = 17 + 4 * h * w * d;
      for (let i = 0; i < h * w; i++) {
        const v = buf.readFloatLE(attnOff + 4 * i);
        expect(v).toBeGreaterThanOrEqual(0);
        mass += v;
      }
      expect(mass).toBeLessThanOrEqual(1 + 1e-3);
    }
  });
});
