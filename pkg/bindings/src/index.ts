// TypeScript bindings for the sedkit sound event detection toolkit.
//
// Each function marshals typed arrays into the toolkit's documented file
// formats, runs one `sedkit bound-call`, and parses the results back, so
// outputs are bit-identical to the native operations with the same seed.
// Shape and contiguity problems throw BoundaryError before anything runs;
// native failures surface as exceptions whose `name` is the native error
// class (DomainMismatch, InvalidConfig, ...).

import * as fs from "node:fs";
import * as path from "node:path";

import { boundCall, nativeVersion, NATIVE_VERSION } from "./native.js";
import {
  AugmentConfig,
  BinaryGrid,
  BoundaryError,
  EvaluateOptions,
  EventRecord,
  FeatureMatrix,
  FilterAugmentConfig,
  GroundTruth,
  LabelMatrix,
  PsdsReport,
  ScoreMatrix,
  SedkitNativeError,
  ViewsResult,
} from "./types.js";
import {
  readEventsTsv,
  readFeatureCsv,
  readGridCsv,
  readLabelCsv,
  sidecarPath,
  validateFeatureMatrix,
  validateScoreMatrix,
  writeEventsTsv,
  writeFeatureCsv,
  writeGridCsv,
  writeLabelCsv,
  writeScoreCsv,
} from "./wire.js";

export * from "./types.js";
export { nativeVersion, NATIVE_VERSION };

function filterAugToNative(cfg: FilterAugmentConfig): Record<string, number> {
  const out: Record<string, number> = {};
  if (cfg.dbMin !== undefined) out.db_min = cfg.dbMin;
  if (cfg.dbMax !== undefined) out.db_max = cfg.dbMax;
  if (cfg.bandMin !== undefined) out.band_min = cfg.bandMin;
  if (cfg.bandMax !== undefined) out.band_max = cfg.bandMax;
  return out;
}

function augmentToNative(cfg: AugmentConfig): Record<string, unknown> {
  const out: Record<string, unknown> = {};
  if (cfg.filterAug !== undefined) {
    out.filter_aug = cfg.filterAug === null ? null : filterAugToNative(cfg.filterAug);
  }
  if (cfg.freqMaskMaxBins !== undefined) out.freq_mask_max_bins = cfg.freqMaskMaxBins;
  if (cfg.timeMaskMinFrames !== undefined) out.time_mask_min_frames = cfg.timeMaskMinFrames;
  if (cfg.timeMaskMaxFrames !== undefined) out.time_mask_max_frames = cfg.timeMaskMaxFrames;
  if (cfg.frameshiftMaxFrames !== undefined) out.frameshift_max_frames = cfg.frameshiftMaxFrames;
  if (cfg.mixupProb !== undefined) out.mixup_prob = cfg.mixupProb;
  if (cfg.mixupAlpha !== undefined) out.mixup_alpha = cfg.mixupAlpha;
  if (cfg.noiseSnrDb !== undefined) out.noise_snr_db = cfg.noiseSnrDb;
  return out;
}

/**
 * FilterAugment: multiply random dB gains onto random contiguous mel bands
 * of a linear-domain feature matrix. Same (seed, stream) always draws the
 * same bands and gains as the native op.
 */
export function filterAugment(
  features: FeatureMatrix,
  config: FilterAugmentConfig = {},
  seed: number | bigint = 0,
  stream: number | bigint = 0
): FeatureMatrix {
  validateFeatureMatrix(features);
  return boundCall({
    op: "filter_augment",
    config: filterAugToNative(config),
    seed,
    stream,
    prepare: (inDir) => writeFeatureCsv(features, path.join(inDir, "feature.csv")),
    collect: (outDir) => readFeatureCsv(path.join(outDir, "feature.csv")) as never,
  });
}

/**
 * Build paired student/teacher views over a batch. Label-altering ops run
 * once with shared draws (one label set per item); label-preserving ops
 * draw independently per view. Items without labels pass `labels: null`.
 */
export function makeStudentTeacherViews(
  batch: { features: FeatureMatrix; labels?: LabelMatrix | null }[],
  config: AugmentConfig = {},
  seed: number | bigint = 0,
  stream: number | bigint = 0
): ViewsResult {
  if (batch.length === 0) {
    throw new BoundaryError("batch must be non-empty");
  }
  batch.forEach((item, i) => {
    validateFeatureMatrix(item.features);
    if (item.labels && item.labels.frames !== item.features.frames) {
      throw new BoundaryError(`item ${i}: labels and features disagree on frame count`);
    }
  });
  const names = batch.map((_, i) => `item_${String(i).padStart(4, "0")}`);
  return boundCall({
    op: "make_student_teacher_views",
    config: augmentToNative(config),
    seed,
    stream,
    prepare: (inDir) => {
      batch.forEach((item, i) => {
        writeFeatureCsv(item.features, path.join(inDir, `${names[i]}.csv`));
        if (item.labels) {
          writeLabelCsv(
            item.labels,
            path.join(inDir, `${names[i]}.labels.csv`),
            names[i],
            item.features.hopSeconds,
            item.features.clipDurationSeconds
          );
        }
      });
    },
    collect: (outDir) => {
      const student = names.map((n) => readFeatureCsv(path.join(outDir, "student", `${n}.csv`)));
      const teacher = names.map((n) => readFeatureCsv(path.join(outDir, "teacher", `${n}.csv`)));
      const labels = names.map((n) => {
        const labPath = path.join(outDir, "labels", `${n}.csv`);
        return fs.existsSync(labPath) ? readLabelCsv(labPath) : null;
      });
      return { student, teacher, labels } as never;
    },
  });
}

/**
 * Threshold frame scores into a binary grid, zeroing every class whose
 * clip-level weak score does not clear the same threshold.
 */
export function applyWeakMasking(
  scores: ScoreMatrix,
  threshold: number | number[] = 0.5,
  clipId = "clip"
): BinaryGrid {
  validateScoreMatrix(scores);
  return boundCall({
    op: "apply_weak_masking",
    config: { threshold },
    prepare: (inDir) => writeScoreCsv(scores, path.join(inDir, "scores.csv"), clipId),
    collect: (outDir) => readGridCsv(path.join(outDir, "grid.csv")) as never,
  });
}

/** One full-clip event per class whose weak score clears the threshold. */
export function weakSedEvents(
  scores: ScoreMatrix,
  threshold: number | number[] = 0.5,
  clipId = "clip"
): EventRecord[] {
  validateScoreMatrix(scores);
  return boundCall({
    op: "weak_sed_events",
    config: { threshold },
    prepare: (inDir) => writeScoreCsv(scores, path.join(inDir, "scores.csv"), clipId),
    collect: (outDir) => readEventsTsv(path.join(outDir, "events.tsv")) as never,
  });
}

/** Majority-vote median filter along time; outside the clip counts as 0. */
export function medianFilter(grid: BinaryGrid, medianLen: number): BinaryGrid {
  if (!Number.isInteger(medianLen)) {
    throw new BoundaryError(`medianLen must be an integer, got ${medianLen}`);
  }
  return boundCall({
    op: "median_filter",
    config: { median_len: medianLen },
    prepare: (inDir) => writeGridCsv(grid, path.join(inDir, "grid.csv")),
    collect: (outDir) => readGridCsv(path.join(outDir, "grid.csv")) as never,
  });
}

/** Maximal runs of active frames become events, clamped to the clip end. */
export function decodeEvents(grid: BinaryGrid): EventRecord[] {
  return boundCall({
    op: "decode_events",
    prepare: (inDir) => writeGridCsv(grid, path.join(inDir, "grid.csv")),
    collect: (outDir) => readEventsTsv(path.join(outDir, "events.tsv")) as never,
  });
}

/**
 * Sweep thresholds, decode every clip, and integrate the PSD-ROC. Scores
 * map clip id to a ScoreMatrix; every ground-truth clip needs one.
 */
export function evaluateSystem(
  scores: Record<string, ScoreMatrix>,
  groundTruth: GroundTruth,
  options: EvaluateOptions
): PsdsReport {
  for (const [clipId, s] of Object.entries(scores)) {
    try {
      validateScoreMatrix(s);
    } catch (err) {
      throw new BoundaryError(`scores[${clipId}]: ${(err as Error).message}`);
    }
  }
  const sc = options.scenario;
  const config = {
    scenario: {
      rho_dtc: sc.rhoDtc,
      rho_gtc: sc.rhoGtc,
      rho_cttc: sc.rhoCttc ?? null,
      alpha_ct: sc.alphaCt ?? 0,
      alpha_st: sc.alphaSt ?? 0,
      e_max: sc.eMax ?? 100,
    },
    ...(options.thresholds ? { thresholds: options.thresholds } : {}),
    median_len: options.medianLen ?? 7,
    weak_masking: options.weakMasking ?? true,
    decoder: options.decoder ?? "strong",
  };
  return boundCall({
    op: "evaluate_system",
    config,
    prepare: (inDir) => {
      writeEventsTsv(
        groundTruth.events.map((e) => ({
          clipId: e.clipId,
          event: { className: e.className, onset: e.onset, offset: e.offset },
        })),
        path.join(inDir, "gt.tsv")
      );
      const durLines = ["filename,duration"];
      for (const [clipId, seconds] of Object.entries(groundTruth.durations)) {
        durLines.push(`${clipId},${seconds.toString()}`);
      }
      fs.writeFileSync(path.join(inDir, "durations.csv"), durLines.join("\n") + "\n");
      const scoreDir = path.join(inDir, "scores");
      fs.mkdirSync(scoreDir);
      let index = 0;
      for (const [clipId, s] of Object.entries(scores)) {
        const name = `scores_${String(index++).padStart(4, "0")}.csv`;
        writeScoreCsv(s, path.join(scoreDir, name), clipId);
      }
    },
    collect: (outDir) => {
      const raw = JSON.parse(fs.readFileSync(path.join(outDir, "report.json"), "utf8"));
      const report: PsdsReport = {
        psds: raw.psds,
        classNames: raw.class_names,
        points: raw.points.map((p: Record<string, unknown>) => ({
          threshold: p.threshold,
          tp: p.tp,
          fp: p.fp,
          nGt: p.n_gt,
          ct: p.ct,
          efpr: p.efpr,
          tpr: p.tpr,
        })),
        perClassRoc: raw.per_class_roc,
      };
      return report as never;
    },
  });
}

// re-exported so hosts can branch on the exact error type
export { SedkitNativeError as NativeError };
export { sidecarPath };
