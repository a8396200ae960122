/**
 * Writers/readers for the pruning engine's wire formats.
 *
 * Token dump: "D2TD" | u8 version=1 | u32le h | u32le w | u32le D |
 *             h*w*D f32le features (row-major) | h*w f32le attention
 * Bias prior: "D2BP" | u8 version=1 | u32le h | u32le w |
 *             u32le sample_count | h*w f32le values
 */

import { readFileSync, writeFileSync } from "node:fs";

export const DUMP_MAGIC = "D2TD";
export const PRIOR_MAGIC = "D2BP";
export const FORMAT_VERSION = 1;

export interface TokenDump {
  h: number;
  w: number;
  dim: number;
  features: Float32Array; // length h*w*dim
  attention: Float32Array; // length h*w
}

export interface BiasPrior {
  h: number;
  w: number;
  sampleCount: number;
  values: Float32Array;
}

function checkFinite(arr: Float32Array, name: string): void {
  for (let i = 0; i < arr.length; i++) {
    if (!Number.isFinite(arr[i])) throw new Error(`${name}[${i}] is not finite`);
  }
}

export function encodeDump(dump: TokenDump): Buffer {
  const { h, w, dim, features, attention } = dump;
  if (features.length !== h * w * dim || attention.length !== h * w) {
    throw new Error("dump field lengths do not match the grid");
  }
  checkFinite(features, "features");
  checkFinite(attention, "attention");
  for (let i = 0; i < attention.length; i++) {
    if (attention[i] < 0) throw new Error(`attention[${i}] is negative`);
  }
  const buf = Buffer.alloc(17 + 4 * features.length + 4 * attention.length);
  buf.write(DUMP_MAGIC, 0, "ascii");
  buf.writeUInt8(FORMAT_VERSION, 4);
  buf.writeUInt32LE(h, 5);
  buf.writeUInt32LE(w, 9);
  buf.writeUInt32LE(dim, 13);
  let off = 17;
  for (let i = 0; i < features.length; i++, off += 4) buf.writeFloatLE(features[i], off);
  for (let i = 0; i < attention.length; i++, off += 4) buf.writeFloatLE(attention[i], off);
  return buf;
}

export function writeDump(path: string, dump: TokenDump): void {
  writeFileSync(path, encodeDump(dump));
}

export function readDump(path: string): TokenDump {
  const buf = readFileSync(path);
  if (buf.length < 17) throw new Error(`${path}: shorter than header`);
  if (buf.subarray(0, 4).toString("ascii") !== DUMP_MAGIC) {
    throw new Error(`${path}: bad magic`);
  }
  if (buf.readUInt8(4) !== FORMAT_VERSION) {
    throw new Error(`${path}: unsupported version`);
  }
  const h = buf.readUInt32LE(5);
  const w = buf.readUInt32LE(9);
  const dim = buf.readUInt32LE(13);
  const n = h * w;
  if (buf.length !== 17 + 4 * n * dim + 4 * n) {
    throw new Error(`${path}: payload length mismatch`);
  }
  const features = new Float32Array(n * dim);
  const attention = new Float32Array(n);
  let off = 17;
  for (let i = 0; i < features.length; i++, off += 4) features[i] = buf.readFloatLE(off);
  for (let i = 0; i < attention.length; i++, off += 4) attention[i] = buf.readFloatLE(off);
  return { h, w, dim, features, attention };
}

export function encodePrior(prior: BiasPrior): Buffer {
  const { h, w, sampleCount, values } = prior;
  if (values.length !== h * w) throw new Error("prior length mismatch");
  checkFinite(values, "prior");
  const buf = Buffer.alloc(17 + 4 * values.length);
  buf.write(PRIOR_MAGIC, 0, "ascii");
  buf.writeUInt8(FORMAT_VERSION, 4);
  buf.writeUInt32LE(h, 5);
  buf.writeUInt32LE(w, 9);
  buf.writeUInt32LE(sampleCount, 13);
  for (let i = 0; i < values.length; i++) buf.writeFloatLE(values[i], 17 + 4 * i);
  return buf;
}

export function writePrior(path: string, prior: BiasPrior): void {
  writeFileSync(path, encodePrior(prior));
}

export function readPrior(path: string): BiasPrior {
  const buf = readFileSync(path);
  if (buf.length < 17) throw new Error(`${path}: shorter than header`);
  if (buf.subarray(0, 4).toString("ascii") !== PRIOR_MAGIC) {
    throw new Error(`${path}: bad magic`);
  }
  if (buf.readUInt8(4) !== FORMAT_VERSION) {
    throw new Error(`${path}: unsupported version`);
  }
  const h = buf.readUInt32LE(5);
  const w = buf.readUInt32LE(9);
  const sampleCount = buf.readUInt32LE(13);
  if (buf.length !== 17 + 4 * h * w) {
    throw new Error(`${path}: payload length mismatch`);
  }
  const values = new Float32Array(h * w);
  for (let i = 0; i < values.length; i++) values[i] = buf.readFloatLE(17 + 4 * i);
  return { h, w, sampleCount, values };
}
