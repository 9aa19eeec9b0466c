/** Dense row-major T x M feature matrix plus its timing metadata. */
export interface FeatureMatrix {
  /** row-major frames x mels buffer; length must equal frames * mels */
  data: Float64Array;
  frames: number;
  mels: number;
  domain: "linear_magnitude" | "log_magnitude";
  hopSeconds: number;
  clipDurationSeconds: number;
}

/** Frame-level class posteriors (T x C) plus the clip-level weak vector. */
export interface ScoreMatrix {
  /** row-major frames x classes buffer in [0, 1] */
  data: Float64Array;
  frames: number;
  classNames: string[];
  /** one clip-level score per class, in [0, 1] */
  weak: Float64Array;
  hopSeconds: number;
  clipDurationSeconds: number;
}

/** Binary class-activity grid (C x T), the intermediate decoding product. */
export interface BinaryGrid {
  /** row-major classes x frames buffer of 0/1 */
  data: Uint8Array;
  classNames: string[];
  frames: number;
  hopSeconds: number;
  clipDurationSeconds: number;
  clipId: string;
}

export interface EventRecord {
  className: string;
  /** seconds, 3-decimal resolution on the wire */
  onset: number;
  offset: number;
}

export interface FilterAugmentConfig {
  dbMin?: number;
  dbMax?: number;
  bandMin?: number;
  bandMax?: number;
}

/** Mirrors the native augmentation config; omitted fields keep native defaults. */
export interface AugmentConfig {
  filterAug?: FilterAugmentConfig | null;
  freqMaskMaxBins?: number;
  timeMaskMinFrames?: number;
  timeMaskMaxFrames?: number;
  frameshiftMaxFrames?: number;
  mixupProb?: number;
  mixupAlpha?: number;
  noiseSnrDb?: [number, number] | null;
}

/** Per-clip frame labels (C x T in [0, 1]) with the weak vector. */
export interface LabelMatrix {
  data: Float64Array;
  classNames: string[];
  frames: number;
  weak: Float64Array;
}

export interface ViewsResult {
  student: FeatureMatrix[];
  teacher: FeatureMatrix[];
  labels: (LabelMatrix | null)[];
}

export interface GroundTruth {
  events: { clipId: string; className: string; onset: number; offset: number }[];
  /** clip id -> duration in seconds */
  durations: Record<string, number>;
}

export interface ScenarioConfig {
  rhoDtc: number;
  rhoGtc: number;
  rhoCttc?: number | null;
  alphaCt?: number;
  alphaSt?: number;
  eMax?: number;
}

export interface EvaluateOptions {
  scenario: ScenarioConfig;
  thresholds?: number[];
  medianLen?: number;
  weakMasking?: boolean;
  decoder?: "strong" | "weak_sed";
}

export interface PsdsReport {
  psds: number;
  classNames: string[];
  points: {
    threshold: number[];
    tp: number[];
    fp: number[];
    nGt: number[];
    ct: number[][];
    efpr: number[];
    tpr: number[];
  }[];
  perClassRoc: Record<string, [number, number][]>;
}

/** Raised before any native call when a buffer or shape is malformed. */
export class BoundaryError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BoundaryError";
  }
}

/** A native-side failure; `name` carries the native error class. */
export class SedkitNativeError extends Error {
  constructor(nativeName: string, message: string) {
    super(message);
    this.name = nativeName;
  }
}
