/**
 * Minimal binary PGM (P5) / PPM (P6) reader and PGM writer.
 *
 * Color input is collapsed to grayscale (channel mean); pixel values are
 * normalized to [0, 1].
 */

import { readFileSync, writeFileSync } from "node:fs";

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major grayscale pixels in [0, 1]. */
  pixels: Float64Array;
}

function parseHeader(buf: Buffer): { magic: string; fields: number[]; offset: number } {
  const magic = buf.subarray(0, 2).toString("ascii");
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    // skip whitespace and comment lines
    while (pos < buf.length && /\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (buf[pos] === 0x23) {
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) pos++;
    fields.push(parseInt(buf.subarray(start, pos).toString("ascii"), 10));
  }
  pos++; // single whitespace after maxval
  return { magic, fields, offset: pos };
}

export function readImage(path: string): GrayImage {
  const buf = readFileSync(path);
  const { magic, fields, offset } = parseHeader(buf);
  const [width, height, maxval] = fields;
  if (!Number.isFinite(width) || !Number.isFinite(height) || maxval <= 0) {
    throw new Error(`${path}: malformed netpbm header`);
  }
  const channels = magic === "P5" ? 1 : magic === "P6" ? 3 : 0;
  if (channels === 0) {
    throw new Error(`${path}: unsupported format ${magic} (want P5 or P6)`);
  }
  const expected = width * height * channels;
  if (buf.length - offset < expected) {
    throw new Error(`${path}: truncated pixel payload`);
  }
  const pixels = new Float64Array(width * height);
  for (let i = 0; i < width * height; i++) {
    let v = 0;
    for (let c = 0; c < channels; c++) v += buf[offset + i * channels + c];
    pixels[i] = v / (channels * maxval);
  }
  return { width, height, pixels };
}

export function writePgm(path: string, img: GrayImage): void {
  const header = Buffer.from(`P5\n${img.width} ${img.height}\n255\n`, "ascii");
  const body = Buffer.alloc(img.width * img.height);
  for (let i = 0; i < body.length; i++) {
    body[i] = Math.max(0, Math.min(255, Math.round(img.pixels[i] * 255)));
  }
  writeFileSync(path, Buffer.concat([header, body]));
}
