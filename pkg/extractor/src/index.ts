export { Rng, mixSeed } from "./rng.js";
export { readImage, writePgm, type GrayImage } from "./image.js";
export {
  DUMP_MAGIC,
  PRIOR_MAGIC,
  FORMAT_VERSION,
  encodeDump,
  writeDump,
  readDump,
  encodePrior,
  writePrior,
  readPrior,
  type TokenDump,
  type BiasPrior,
} from "./format.js";
export {
  DEFAULT_CONFIG,
  ToyRuntime,
  type RuntimeConfig,
  type ForwardCapture,
} from "./runtime.js";
export {
  CALIBRATION_PROMPT,
  defaultSpec,
  extractDump,
  extractDirectory,
  type ExtractionSpec,
  type ManifestEntry,
} from "./extract.js";
export { generateImage, generateCorpus } from "./gen.js";
