/**
 * A small deterministic multimodal decoder used as the extraction target.
 *
 * No real checkpoint is involved: weights are generated from a seed, the
 * tokenizer is byte-level, and positional structure enters through two
 * channels: per-cell embeddings added to patch features and, crucially, an
 * additive attention-logit bias on visual keys that grows toward the bottom
 * rows of the grid.  The logit bias plays the role a learned position prior
 * plays in production decoders: attention from any query drifts toward
 * certain grid positions regardless of pixel content, which is exactly the
 * artifact the pruning engine's calibration is meant to expose and divide
 * out.
 *
 * The forward pass is a standard pre-LN causal transformer.  Extraction
 * runs layers 1..K-1 and captures (a) the hidden states of the visual span
 * after layer K-1 and (b) the final text position's post-softmax attention
 * row over the visual span inside layer K-1, averaged over heads.
 */

import { Rng, mixSeed } from "./rng.js";
import type { GrayImage } from "./image.js";

export interface RuntimeConfig {
  modelId: string;
  patchSize: number;
  dim: number;
  heads: number;
  layers: number;
  /** Strength of the bottom-heavy attention-logit bias on visual keys. */
  posBiasStrength: number;
  seed: number;
}

export const DEFAULT_CONFIG: RuntimeConfig = {
  modelId: "toy-mmdec-32x2",
  patchSize: 8,
  dim: 32,
  heads: 4,
  layers: 2,
  posBiasStrength: 3.0,
  seed: 1234,
};

interface LayerWeights {
  wq: Float64Array;
  wk: Float64Array;
  wv: Float64Array;
  wo: Float64Array;
  w1: Float64Array; // dim -> 4*dim
  w2: Float64Array; // 4*dim -> dim
}

export interface ForwardCapture {
  gridH: number;
  gridW: number;
  /** Visual-span hidden states after layer K-1, row-major (N x dim). */
  hidden: Float64Array;
  /** Final text token -> visual tokens attention, head mean, post-softmax. */
  attention: Float64Array;
}

function matvec(w: Float64Array, x: Float64Array, rows: number, cols: number,
                out: Float64Array): void {
  for (let r = 0; r < rows; r++) {
    let acc = 0;
    const base = r * cols;
    for (let c = 0; c < cols; c++) acc += w[base + c] * x[c];
    out[r] = acc;
  }
}

function layerNorm(x: Float64Array, dim: number, out: Float64Array): void {
  let mean = 0;
  for (let i = 0; i < dim; i++) mean += x[i];
  mean /= dim;
  let varsum = 0;
  for (let i = 0; i < dim; i++) {
    const d = x[i] - mean;
    varsum += d * d;
  }
  const inv = 1.0 / Math.sqrt(varsum / dim + 1e-5);
  for (let i = 0; i < dim; i++) out[i] = (x[i] - mean) * inv;
}

export class ToyRuntime {
  readonly cfg: RuntimeConfig;
  private patchW: Float64Array;       // dim x patchSize^2
  private textEmbed: Float64Array;    // 256 x dim
  private layersW: LayerWeights[];

  constructor(cfg: RuntimeConfig = DEFAULT_CONFIG) {
    if (cfg.dim % cfg.heads !== 0) {
      throw new Error("dim must be divisible by heads");
    }
    this.cfg = cfg;
    const rng = new Rng(cfg.seed);
    const d = cfg.dim;
    const scale = 1.0 / Math.sqrt(d);
    this.patchW = rng.normalArray(d * cfg.patchSize * cfg.patchSize, scale);
    this.textEmbed = rng.normalArray(256 * d, 1.0);
    this.layersW = [];
    for (let l = 0; l < cfg.layers; l++) {
      this.layersW.push({
        wq: rng.normalArray(d * d, scale),
        wk: rng.normalArray(d * d, scale),
        wv: rng.normalArray(d * d, scale),
        wo: rng.normalArray(d * d, scale),
        w1: rng.normalArray(4 * d * d, scale),
        w2: rng.normalArray(d * 4 * d, 1.0 / Math.sqrt(4 * d)),
      });
    }
  }

  /** Per-cell visual embedding, deterministic in (row, col). */
  private visualPos(row: number, col: number): Float64Array {
    return new Rng(mixSeed(row * 4096 + col, this.cfg.seed)).normalArray(
      this.cfg.dim, 0.5);
  }

  private textPos(index: number): Float64Array {
    return new Rng(mixSeed(0x70000000 + index, this.cfg.seed)).normalArray(
      this.cfg.dim, 0.5);
  }

  gridFor(img: GrayImage): { h: number; w: number } | null {
    const p = this.cfg.patchSize;
    if (img.width % p !== 0 || img.height % p !== 0) return null;
    return { h: img.height / p, w: img.width / p };
  }

  /** Run layers 1..K-1 and capture the extraction quantities. */
  forward(img: GrayImage, prompt: string, layerK: number): ForwardCapture {
    const cfg = this.cfg;
    if (layerK < 2 || layerK > cfg.layers + 1) {
      throw new Error(
        `layer K=${layerK} outside this runtime's range [2, ${cfg.layers + 1}]`);
    }
    const grid = this.gridFor(img);
    if (grid === null) {
      throw new Error(
        `image ${img.width}x${img.height} does not patchify at ` +
        `${cfg.patchSize}: visual grid not rectangular`);
    }
    const { h, w } = grid;
    const n = h * w;
    const d = cfg.dim;
    const p = cfg.patchSize;

    const promptBytes = Buffer.from(prompt, "utf8");
    if (promptBytes.length === 0) throw new Error("prompt must be nonempty");
    const seqLen = n + promptBytes.length;

    // token embeddings
    const states = new Float64Array(seqLen * d);
    const patch = new Float64Array(p * p);
    const emb = new Float64Array(d);
    for (let r = 0; r < h; r++) {
      for (let c = 0; c < w; c++) {
        for (let pr = 0; pr < p; pr++) {
          for (let pc = 0; pc < p; pc++) {
            patch[pr * p + pc] =
              img.pixels[(r * p + pr) * img.width + (c * p + pc)];
          }
        }
        matvec(this.patchW, patch, d, p * p, emb);
        const pos = this.visualPos(r, c);
        const base = (r * w + c) * d;
        for (let i = 0; i < d; i++) states[base + i] = emb[i] + pos[i];
      }
    }
    for (let t = 0; t < promptBytes.length; t++) {
      const base = (n + t) * d;
      const tok = promptBytes[t] * d;
      const pos = this.textPos(t);
      for (let i = 0; i < d; i++) {
        states[base + i] = this.textEmbed[tok + i] + pos[i];
      }
    }

    // bottom-heavy additive logit bias on visual keys
    const keyBias = new Float64Array(seqLen);
    for (let i = 0; i < n; i++) {
      const row = Math.floor(i / w);
      keyBias[i] = cfg.posBiasStrength * (h > 1 ? row / (h - 1) : 0);
    }

    let attention: Float64Array | null = null;
    const heads = cfg.heads;
    const hd = d / heads;
    const normed = new Float64Array(seqLen * d);
    const q = new Float64Array(seqLen * d);
    const k = new Float64Array(seqLen * d);
    const v = new Float64Array(seqLen * d);
    const attnOut = new Float64Array(seqLen * d);
    const tmpIn = new Float64Array(d);
    const tmpOut = new Float64Array(d);
    const tmpHidden = new Float64Array(4 * d);

    for (let layer = 0; layer < layerK - 1; layer++) {
      const lw = this.layersW[layer];
      // pre-LN projections
      for (let t = 0; t < seqLen; t++) {
        layerNorm(states.subarray(t * d, (t + 1) * d), d, tmpIn);
        normed.set(tmpIn, t * d);
        matvec(lw.wq, tmpIn, d, d, tmpOut);
        q.set(tmpOut, t * d);
        matvec(lw.wk, tmpIn, d, d, tmpOut);
        k.set(tmpOut, t * d);
        matvec(lw.wv, tmpIn, d, d, tmpOut);
        v.set(tmpOut, t * d);
      }
      attnOut.fill(0);
      const probs = new Float64Array(seqLen);
      const headMeanFinal = new Float64Array(seqLen);
      for (let head = 0; head < heads; head++) {
        const hoff = head * hd;
        for (let t = 0; t < seqLen; t++) {
          // causal: position t attends to 0..t
          let maxLogit = -Infinity;
          for (let s = 0; s <= t; s++) {
            let dot = 0;
            for (let i = 0; i < hd; i++) {
              dot += q[t * d + hoff + i] * k[s * d + hoff + i];
            }
            const logit = dot / Math.sqrt(hd) + keyBias[s];
            probs[s] = logit;
            if (logit > maxLogit) maxLogit = logit;
          }
          let z = 0;
          for (let s = 0; s <= t; s++) {
            probs[s] = Math.exp(probs[s] - maxLogit);
            z += probs[s];
          }
          for (let s = 0; s <= t; s++) {
            probs[s] /= z;
            for (let i = 0; i < hd; i++) {
              attnOut[t * d + hoff + i] += probs[s] * v[s * d + hoff + i];
            }
          }
          if (layer === layerK - 2 && t === seqLen - 1) {
            for (let s = 0; s < seqLen; s++) {
              headMeanFinal[s] += (s <= t ? probs[s] : 0) / heads;
            }
          }
        }
      }
      if (layer === layerK - 2) {
        attention = headMeanFinal.slice(0, n);
      }
      // residual + output projection, then MLP block
      for (let t = 0; t < seqLen; t++) {
        matvec(lw.wo, attnOut.subarray(t * d, (t + 1) * d), d, d, tmpOut);
        for (let i = 0; i < d; i++) states[t * d + i] += tmpOut[i];
        layerNorm(states.subarray(t * d, (t + 1) * d), d, tmpIn);
        matvec(lw.w1, tmpIn, 4 * d, d, tmpHidden);
        for (let i = 0; i < 4 * d; i++) {
          tmpHidden[i] = tmpHidden[i] > 0 ? tmpHidden[i] : 0; // ReLU
        }
        matvec(lw.w2, tmpHidden, d, 4 * d, tmpOut);
        for (let i = 0; i < d; i++) states[t * d + i] += tmpOut[i];
      }
    }

    if (attention === null) {
      throw new Error("attention capture failed: no layers executed");
    }
    return {
      gridH: h,
      gridW: w,
      hidden: states.slice(0, n * d),
      attention,
    };
  }
}
