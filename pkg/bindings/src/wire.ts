// Marshalling between typed arrays and the toolkit's documented file
// formats. Floats cross as shortest round-trip decimal strings
// (Number.prototype.toString here, repr on the native side), so a value
// survives the text boundary bit-exactly in both directions.

import * as fs from "node:fs";
import * as path from "node:path";

import {
  BinaryGrid,
  BoundaryError,
  EventRecord,
  FeatureMatrix,
  LabelMatrix,
  ScoreMatrix,
} from "./types.js";

function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    throw new BoundaryError(`non-finite value ${value} cannot cross the boundary`);
  }
  return value.toString();
}

export function validateFeatureMatrix(m: FeatureMatrix): void {
  if (!(m.data instanceof Float64Array)) {
    throw new BoundaryError("feature data must be a Float64Array (row-major, contiguous)");
  }
  if (!Number.isInteger(m.frames) || !Number.isInteger(m.mels) || m.frames <= 0 || m.mels <= 0) {
    throw new BoundaryError(`bad feature shape ${m.frames} x ${m.mels}`);
  }
  if (m.data.length !== m.frames * m.mels) {
    throw new BoundaryError(
      `feature buffer length ${m.data.length} does not match frames * mels = ${m.frames * m.mels}`
    );
  }
  if (m.domain !== "linear_magnitude" && m.domain !== "log_magnitude") {
    throw new BoundaryError(`unknown feature domain ${String(m.domain)}`);
  }
  if (!(m.hopSeconds > 0) || !(m.clipDurationSeconds > 0)) {
    throw new BoundaryError("hopSeconds and clipDurationSeconds must be positive");
  }
}

export function validateScoreMatrix(s: ScoreMatrix): void {
  if (!(s.data instanceof Float64Array) || !(s.weak instanceof Float64Array)) {
    throw new BoundaryError("score data and weak must be Float64Array");
  }
  const c = s.classNames.length;
  if (c === 0 || s.weak.length !== c) {
    throw new BoundaryError("classNames and weak vector must agree and be non-empty");
  }
  if (!Number.isInteger(s.frames) || s.frames <= 0 || s.data.length !== s.frames * c) {
    throw new BoundaryError(
      `score buffer length ${s.data.length} does not match frames * classes = ${s.frames * c}`
    );
  }
  if (!(s.hopSeconds > 0) || !(s.clipDurationSeconds > 0)) {
    throw new BoundaryError("hopSeconds and clipDurationSeconds must be positive");
  }
}

export function writeFeatureCsv(m: FeatureMatrix, csvPath: string): void {
  validateFeatureMatrix(m);
  const header = Array.from({ length: m.mels }, (_, i) => `mel_${String(i).padStart(3, "0")}`);
  const lines = [header.join(",")];
  for (let t = 0; t < m.frames; t++) {
    const row = new Array<string>(m.mels);
    for (let j = 0; j < m.mels; j++) {
      row[j] = fmt(m.data[t * m.mels + j]);
    }
    lines.push(row.join(","));
  }
  fs.writeFileSync(csvPath, lines.join("\n") + "\n");
  const sidecar = {
    hop_seconds: m.hopSeconds,
    clip_duration_seconds: m.clipDurationSeconds,
    domain: m.domain,
    n_mels: m.mels,
  };
  fs.writeFileSync(sidecarPath(csvPath), JSON.stringify(sidecar, null, 2) + "\n");
}

export function readFeatureCsv(csvPath: string): FeatureMatrix {
  const meta = JSON.parse(fs.readFileSync(sidecarPath(csvPath), "utf8"));
  const lines = fs.readFileSync(csvPath, "utf8").trim().split("\n");
  const frames = lines.length - 1;
  const mels: number = meta.n_mels;
  const data = new Float64Array(frames * mels);
  for (let t = 0; t < frames; t++) {
    const cells = lines[t + 1].split(",");
    for (let j = 0; j < mels; j++) {
      data[t * mels + j] = Number(cells[j]);
    }
  }
  return {
    data,
    frames,
    mels,
    domain: meta.domain,
    hopSeconds: meta.hop_seconds,
    clipDurationSeconds: meta.clip_duration_seconds,
  };
}

export function writeScoreCsv(s: ScoreMatrix, csvPath: string, clipId: string): void {
  validateScoreMatrix(s);
  const c = s.classNames.length;
  const lines = ["time_s," + s.classNames.join(",")];
  for (let t = 0; t < s.frames; t++) {
    const row = new Array<string>(c + 1);
    row[0] = fmt(t * s.hopSeconds);
    for (let j = 0; j < c; j++) {
      row[j + 1] = fmt(s.data[t * c + j]);
    }
    lines.push(row.join(","));
  }
  fs.writeFileSync(csvPath, lines.join("\n") + "\n");
  const weak: Record<string, number> = {};
  s.classNames.forEach((name, i) => {
    weak[name] = s.weak[i];
  });
  const sidecar = {
    clip_id: clipId,
    hop_seconds: s.hopSeconds,
    clip_duration_seconds: s.clipDurationSeconds,
    weak,
  };
  fs.writeFileSync(sidecarPath(csvPath), JSON.stringify(sidecar, null, 2) + "\n");
}

export function writeLabelCsv(
  labels: LabelMatrix,
  csvPath: string,
  clipId: string,
  hopSeconds: number,
  clipDurationSeconds: number
): void {
  const c = labels.classNames.length;
  if (!(labels.data instanceof Float64Array) || labels.data.length !== c * labels.frames) {
    throw new BoundaryError("label buffer length must equal classes * frames");
  }
  // labels are stored C x T; the score wire format wants T x C rows
  const transposed = new Float64Array(labels.frames * c);
  for (let k = 0; k < c; k++) {
    for (let t = 0; t < labels.frames; t++) {
      transposed[t * c + k] = labels.data[k * labels.frames + t];
    }
  }
  writeScoreCsv(
    {
      data: transposed,
      frames: labels.frames,
      classNames: labels.classNames,
      weak: labels.weak,
      hopSeconds,
      clipDurationSeconds,
    },
    csvPath,
    clipId
  );
}

export function readLabelCsv(csvPath: string): LabelMatrix {
  const meta = JSON.parse(fs.readFileSync(sidecarPath(csvPath), "utf8"));
  const lines = fs.readFileSync(csvPath, "utf8").trim().split("\n");
  const classNames = lines[0].split(",").slice(1);
  const frames = lines.length - 1;
  const c = classNames.length;
  const data = new Float64Array(c * frames);
  for (let t = 0; t < frames; t++) {
    const cells = lines[t + 1].split(",");
    for (let k = 0; k < c; k++) {
      data[k * frames + t] = Number(cells[k + 1]);
    }
  }
  const weak = new Float64Array(classNames.map((n) => meta.weak[n]));
  return { data, classNames, frames, weak };
}

export function readGridCsv(csvPath: string): BinaryGrid {
  const meta = JSON.parse(fs.readFileSync(sidecarPath(csvPath), "utf8"));
  const lines = fs.readFileSync(csvPath, "utf8").trim().split("\n");
  const classNames = lines[0].split(",").slice(1);
  const frames = lines.length - 1;
  const c = classNames.length;
  const data = new Uint8Array(c * frames);
  for (let t = 0; t < frames; t++) {
    const cells = lines[t + 1].split(",");
    for (let k = 0; k < c; k++) {
      data[k * frames + t] = Number(cells[k + 1]) ? 1 : 0;
    }
  }
  return {
    data,
    classNames,
    frames,
    hopSeconds: meta.hop_seconds,
    clipDurationSeconds: meta.clip_duration_seconds,
    clipId: meta.clip_id,
  };
}

export function writeGridCsv(grid: BinaryGrid, csvPath: string): void {
  const c = grid.classNames.length;
  if (!(grid.data instanceof Uint8Array) || grid.data.length !== c * grid.frames) {
    throw new BoundaryError("grid buffer length must equal classes * frames");
  }
  const lines = ["time_s," + grid.classNames.join(",")];
  for (let t = 0; t < grid.frames; t++) {
    const row = new Array<string>(c + 1);
    row[0] = fmt(t * grid.hopSeconds);
    for (let k = 0; k < c; k++) {
      row[k + 1] = String(grid.data[k * grid.frames + t]);
    }
    lines.push(row.join(","));
  }
  fs.writeFileSync(csvPath, lines.join("\n") + "\n");
  const sidecar = {
    clip_id: grid.clipId,
    hop_seconds: grid.hopSeconds,
    clip_duration_seconds: grid.clipDurationSeconds,
  };
  fs.writeFileSync(sidecarPath(csvPath), JSON.stringify(sidecar, null, 2) + "\n");
}

export function readEventsTsv(tsvPath: string): EventRecord[] {
  const lines = fs.readFileSync(tsvPath, "utf8").trim().split("\n");
  const out: EventRecord[] = [];
  for (const line of lines.slice(1)) {
    if (!line.trim()) continue;
    const [, onset, offset, label] = line.split("\t");
    out.push({ className: label, onset: Number(onset), offset: Number(offset) });
  }
  return out;
}

export function writeEventsTsv(
  rows: { clipId: string; event: EventRecord }[],
  tsvPath: string
): void {
  const lines = ["filename\tonset\toffset\tevent_label"];
  for (const { clipId, event } of rows) {
    lines.push(
      `${clipId}\t${event.onset.toFixed(3)}\t${event.offset.toFixed(3)}\t${event.className}`
    );
  }
  fs.writeFileSync(tsvPath, lines.join("\n") + "\n");
}

export function sidecarPath(csvPath: string): string {
  const parsed = path.parse(csvPath);
  return path.join(parsed.dir, parsed.name + ".json");
}
