import { describe, expect, it } from "vitest";

import { defaultSpec } from "../src/extract.js";
import { generateImage } from "../src/gen.js";
import { DEFAULT_CONFIG, ToyRuntime } from "../src/runtime.js";

const PROMPT = "Please describe the provided image.";

describe("toy runtime", () => {
  it("recovers the patch grid from image dimensions", () => {
    const rt = new ToyRuntime();
    const cap = rt.forward(generateImage(1, 64), PROMPT, 2);
    expect(cap.gridH).toBe(8);
    expect(cap.gridW).toBe(8);
    expect(cap.hidden.length).toBe(64 * DEFAULT_CONFIG.dim);
    expect(cap.attention.length).toBe(64);
  });

  it("rejects images that do not patchify", () => {
    const rt = new ToyRuntime();
    expect(() => rt.forward(generateImage(2, 60), PROMPT, 2))
      .toThrow(/not rectangular/);
  });

  it("is deterministic across runs", () => {
    const img = generateImage(7, 64);
    const a = new ToyRuntime().forward(img, PROMPT, 2);
    const b = new ToyRuntime().forward(img, PROMPT, 2);
    expect(a.attention).toEqual(b.attention);
    expect(a.hidden).toEqual(b.hidden);
    // well inside the 1e-4 reproducibility contract
    for (let i = 0; i < a.attention.length; i++) {
      expect(Math.abs(a.attention[i] - b.attention[i])).toBeLessThan(1e-4);
    }
  });

  it("attention over the visual span is a sub-distribution", () => {
    const rt = new ToyRuntime();
    for (const seed of [1, 2, 3]) {
      const cap = rt.forward(generateImage(seed, 64), PROMPT, 2);
      let mass = 0;
      for (const v of cap.attention) {
        expect(v).toBeGreaterThanOrEqual(0);
        mass += v;
      }
      expect(mass).toBeLessThanOrEqual(1 + 1e-3);
    }
  });

  it("positional logit bias pulls attention toward bottom rows", () => {
    const rt = new ToyRuntime();
    const { gridW, gridH, attention } =
      rt.forward(generateImage(11, 64), PROMPT, 2);
    const rowMean = (r: number) => {
      let s = 0;
      for (let c = 0; c < gridW; c++) s += attention[r * gridW + c];
      return s / gridW;
    };
    expect(rowMean(gridH - 1)).toBeGreaterThan(rowMean(0));
  });

  it("different prompts shift the attention row", () => {
    const img = generateImage(5, 64);
    const rt = new ToyRuntime();
    const a = rt.forward(img, PROMPT, 2).attention;
    const b = rt.forward(img, "Where is the cat?", 2).attention;
    expect(a).not.toEqual(b);
  });

  it("validates the layer range", () => {
    const rt = new ToyRuntime();
    const img = generateImage(1, 64);
    expect(() => rt.forward(img, PROMPT, 1)).toThrow(/range/);
    expect(() => rt.forward(img, PROMPT, 99)).toThrow(/range/);
  });

  it("extraction defaults are the calibration conventions", () => {
    const spec = defaultSpec();
    expect(spec.layerK).toBe(2);
    expect(spec.prompt).toBe(PROMPT);
    expect(spec.headAggregation).toBe("mean");
  });
});
