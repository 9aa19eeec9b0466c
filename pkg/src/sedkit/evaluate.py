"""Intersection-criterion PSDS and collar-based event F1.

A detection is valid (DTC) when the summed overlap with same-class ground
truth, relative to the detection's own duration, reaches rho_dtc; a ground
truth counts as detected (GTC) when its overlap with valid detections,
relative to its own duration, reaches rho_gtc. Invalid detections are false
positives, and (optionally) cross-trigger counts against other classes.
Per-class rates are swept over operating points into a staircase ROC whose
normalized area, after the cross-class mean-minus-stdev penalty and the
cross-trigger term, is the PSDS.

All criteria use the non-strict ">=" convention, so e.g. a full 10 s
detection over a single ground truth of length L passes a 0.1 tolerance
exactly when L >= 1 s.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    InvalidConfig,
    InvalidGroundTruth,
    NoOperatingPoints,
    UnknownClass,
    UnknownClip,
)
from .postprocess import (
    DecodeConfig,
    Event,
    ScoreMatrix,
    decode_clip,
    read_events_tsv,
    weak_sed_events,
)

#: default operating-point sweep: 50 shared thresholds across (0, 1)
DEFAULT_THRESHOLDS: tuple[float, ...] = tuple(np.linspace(0.01, 0.99, 50))


@dataclass(frozen=True)
class GroundTruth:
    events: tuple[tuple[str, Event], ...]
    clip_durations: dict[str, float]
    class_names: tuple[str, ...]

    def __post_init__(self):
        events = tuple(self.events)
        names = tuple(self.class_names)
        known = set(names)
        for clip_id, ev in events:
            if clip_id not in self.clip_durations:
                raise UnknownClip(f"ground truth references unknown clip {clip_id!r}")
            if ev.class_name not in known:
                raise UnknownClass(f"ground truth references unknown class {ev.class_name!r}")
            if ev.offset > self.clip_durations[clip_id] + 1e-9:
                raise InvalidGroundTruth(
                    f"{clip_id}: event [{ev.onset}, {ev.offset}) exceeds clip duration"
                )
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "class_names", names)

    def events_in(self, clip_id: str) -> list[Event]:
        return [ev for cid, ev in self.events if cid == clip_id]

    def total_duration_hours(self) -> float:
        return sum(self.clip_durations.values()) / 3600.0

    def class_duration_hours(self) -> np.ndarray:
        idx = {n: i for i, n in enumerate(self.class_names)}
        out = np.zeros(len(self.class_names))
        for _, ev in self.events:
            out[idx[ev.class_name]] += ev.duration
        return out / 3600.0

    def class_counts(self) -> np.ndarray:
        idx = {n: i for i, n in enumerate(self.class_names)}
        out = np.zeros(len(self.class_names), dtype=np.int64)
        for _, ev in self.events:
            out[idx[ev.class_name]] += 1
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    rho_dtc: float
    rho_gtc: float
    rho_cttc: float | None = None
    alpha_ct: float = 0.0
    alpha_st: float = 0.0
    e_max: float = 100.0

    def validate(self) -> None:
        for name, rho in (("rho_dtc", self.rho_dtc), ("rho_gtc", self.rho_gtc)):
            if not (0.0 < rho <= 1.0):
                raise InvalidConfig(f"{name} must lie in (0, 1], got {rho}")
        if self.rho_cttc is not None and not (0.0 < self.rho_cttc <= 1.0):
            raise InvalidConfig(f"rho_cttc must lie in (0, 1], got {self.rho_cttc}")
        if self.alpha_ct < 0 or self.alpha_st < 0:
            raise InvalidConfig("alpha_ct and alpha_st must be >= 0")
        if self.alpha_ct > 0 and self.rho_cttc is None:
            raise InvalidConfig("alpha_ct > 0 requires rho_cttc")
        if self.e_max <= 0:
            raise InvalidConfig("e_max must be positive")

    def to_json(self) -> dict:
        return {
            "rho_dtc": self.rho_dtc,
            "rho_gtc": self.rho_gtc,
            "rho_cttc": self.rho_cttc,
            "alpha_ct": self.alpha_ct,
            "alpha_st": self.alpha_st,
            "e_max": self.e_max,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioConfig":
        sc = cls(
            rho_dtc=float(obj["rho_dtc"]),
            rho_gtc=float(obj["rho_gtc"]),
            rho_cttc=None if obj.get("rho_cttc") is None else float(obj["rho_cttc"]),
            alpha_ct=float(obj.get("alpha_ct", 0.0)),
            alpha_st=float(obj.get("alpha_st", 0.0)),
            e_max=float(obj.get("e_max", 100.0)),
        )
        sc.validate()
        return sc


def scenario1() -> ScenarioConfig:
    """Timestamp-sensitive scenario: tight 0.7 tolerances, no cross-trigger term."""
    return ScenarioConfig(rho_dtc=0.7, rho_gtc=0.7, rho_cttc=None, alpha_ct=0.0, alpha_st=1.0)


def scenario2() -> ScenarioConfig:
    """Presence-oriented scenario: loose 0.1 tolerances, cross-triggers penalized."""
    return ScenarioConfig(rho_dtc=0.1, rho_gtc=0.1, rho_cttc=0.3, alpha_ct=0.5, alpha_st=1.0)


@dataclass(frozen=True)
class OperatingPointCounts:
    threshold: tuple[float, ...]
    tp: np.ndarray
    fp: np.ndarray
    n_gt: np.ndarray
    ct: np.ndarray  # C x C, [triggering class, cross-triggered class]


@dataclass(frozen=True)
class PSDSReport:
    scenario: ScenarioConfig
    class_names: tuple[str, ...]
    points: tuple[OperatingPointCounts, ...]
    rates: tuple[tuple[np.ndarray, np.ndarray], ...]  # (efpr, tpr) per point
    per_class_roc: dict[str, list[tuple[float, float]]]
    psds: float


def intersect(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Overlap length in seconds of two [onset, offset] intervals."""
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def match_operating_point(
    dets_by_clip: Mapping[str, list[Event]],
    gt: GroundTruth,
    sc: ScenarioConfig,
    threshold=(0.5,),
) -> OperatingPointCounts:
    """Count TP / FP / cross-triggers for one set of detections.

    DTC: detection d is valid iff sum of its overlaps with same-class ground
    truth >= rho_dtc * dur(d). GTC: truth g is detected iff its overlap with
    valid same-class detections >= rho_gtc * dur(g). Each invalid detection
    is one FP; when rho_cttc is set, every (invalid detection, other-class
    truth) pair with overlap >= rho_cttc * dur(d) increments ct.
    """
    sc.validate()
    names = gt.class_names
    idx = {n: i for i, n in enumerate(names)}
    c_count = len(names)
    tp = np.zeros(c_count, dtype=np.int64)
    fp = np.zeros(c_count, dtype=np.int64)
    ct = np.zeros((c_count, c_count), dtype=np.int64)

    for clip_id, dets in dets_by_clip.items():
        if clip_id not in gt.clip_durations:
            raise UnknownClip(f"detections reference unknown clip {clip_id!r}")
        gt_events = gt.events_in(clip_id)
        by_class: dict[str, list[Event]] = {n: [] for n in names}
        for ev in gt_events:
            by_class[ev.class_name].append(ev)

        failing: list[Event] = []
        valid_by_class: dict[str, list[Event]] = {n: [] for n in names}
        for d in dets:
            if d.class_name not in idx:
                raise UnknownClass(f"detection class {d.class_name!r} not in ground truth vocabulary")
            c = idx[d.class_name]
            overlap = sum(intersect((d.onset, d.offset), (g.onset, g.offset)) for g in by_class[d.class_name])
            if overlap / d.duration >= sc.rho_dtc:
                valid_by_class[d.class_name].append(d)
            else:
                fp[c] += 1
                failing.append(d)

        for g in gt_events:
            c = idx[g.class_name]
            covered = sum(
                intersect((g.onset, g.offset), (d.onset, d.offset)) for d in valid_by_class[g.class_name]
            )
            if covered / g.duration >= sc.rho_gtc:
                tp[c] += 1

        if sc.rho_cttc is not None:
            for d in failing:
                c = idx[d.class_name]
                for g in gt_events:
                    k = idx[g.class_name]
                    if k == c:
                        continue
                    if intersect((d.onset, d.offset), (g.onset, g.offset)) / d.duration >= sc.rho_cttc:
                        ct[c, k] += 1

    thr = tuple(np.atleast_1d(np.asarray(threshold, dtype=np.float64)).tolist())
    return OperatingPointCounts(threshold=thr, tp=tp, fp=fp, n_gt=gt.class_counts(), ct=ct)


def effective_rates(
    counts: OperatingPointCounts, gt: GroundTruth, sc: ScenarioConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class (effective FP per hour, TP ratio) for one operating point."""
    d_hours = gt.total_duration_hours()
    if d_hours <= 0:
        raise InvalidGroundTruth("dataset duration must be positive")
    c_count = len(gt.class_names)
    with np.errstate(invalid="ignore", divide="ignore"):
        tpr = np.where(counts.n_gt > 0, counts.tp / np.maximum(counts.n_gt, 1), 0.0)
    fpr = counts.fp / d_hours
    efpr = fpr.astype(np.float64)
    if sc.alpha_ct > 0 and c_count > 1:
        cls_hours = gt.class_duration_hours()
        ctr = np.zeros((c_count, c_count))
        nonzero = cls_hours > 0
        ctr[:, nonzero] = counts.ct[:, nonzero] / cls_hours[nonzero]
        np.fill_diagonal(ctr, 0.0)
        efpr = fpr + sc.alpha_ct * ctr.sum(axis=1) / (c_count - 1)
    return efpr, tpr


def psd_roc(
    rates: list[tuple[np.ndarray, np.ndarray]], sc: ScenarioConfig
) -> tuple[list[tuple[float, float]], float]:
    """Exact staircase integration of the effective TPR over [0, e_max].

    Per class, r_c(e) is the best TPR among operating points with effective
    FPR <= e (0 when none). The effective TPR is mean_c - alpha_st * stdev_c
    (population stdev), clamped to [0, 1]; the PSDS is its mean over the
    e axis.
    """
    sc.validate()
    if not rates:
        raise NoOperatingPoints("at least one operating point is required")
    efpr = np.stack([np.asarray(e, dtype=np.float64) for e, _ in rates])  # P x C
    tpr = np.stack([np.asarray(t, dtype=np.float64) for _, t in rates])  # P x C

    breaks = np.unique(np.concatenate([efpr.ravel(), [0.0, sc.e_max]]))
    breaks = breaks[(breaks >= 0.0) & (breaks <= sc.e_max)]

    # r_c at every breakpoint: max TPR among points with eFPR <= break
    reach = efpr[:, :, None] <= breaks[None, None, :]  # P x C x B
    r = np.where(reach, tpr[:, :, None], 0.0).max(axis=0)  # C x B
    mean = r.mean(axis=0)
    std = r.std(axis=0)
    etpr = np.clip(mean - sc.alpha_st * std, 0.0, 1.0)

    widths = np.diff(breaks)
    psds = float((etpr[:-1] * widths).sum() / sc.e_max)
    curve = [(float(b), float(v)) for b, v in zip(breaks, etpr)]
    return curve, psds


def per_class_staircase(
    rates: list[tuple[np.ndarray, np.ndarray]], class_index: int, sc: ScenarioConfig
) -> list[tuple[float, float]]:
    """(eFPR, TPR) staircase vertices for one class, for reports and plots."""
    pts = sorted(
        (float(e[class_index]), float(t[class_index])) for e, t in rates if e[class_index] <= sc.e_max
    )
    out: list[tuple[float, float]] = []
    best = 0.0
    for e, t in pts:
        best = max(best, t)
        if out and out[-1][0] == e:
            out[-1] = (e, best)
        elif not out or best > out[-1][1]:
            out.append((e, best))
    return out


def evaluate_system(
    scores_by_clip: Mapping[str, ScoreMatrix],
    gt: GroundTruth,
    sc: ScenarioConfig,
    decode: DecodeConfig | None = None,
    thresholds=DEFAULT_THRESHOLDS,
    decoder: str = "strong",
) -> PSDSReport:
    """Sweep thresholds, decode each clip, match, and integrate the PSD-ROC.

    decoder="strong" runs the frame-level decode chain (threshold, optional
    weak masking, median filter); decoder="weak_sed" emits one full-clip
    event per class whose weak prediction clears the threshold.
    """
    sc.validate()
    decode = decode or DecodeConfig()
    decode.validate()
    if decoder not in ("strong", "weak_sed"):
        raise InvalidConfig(f"unknown decoder {decoder!r}")
    missing = set(gt.clip_durations) - set(scores_by_clip)
    if missing:
        raise UnknownClip(f"no scores for clips: {sorted(missing)}")

    points: list[OperatingPointCounts] = []
    rates: list[tuple[np.ndarray, np.ndarray]] = []
    for thr in thresholds:
        dets_by_clip: dict[str, list[Event]] = {}
        for clip_id in sorted(gt.clip_durations):
            scores = scores_by_clip[clip_id]
            if decoder == "weak_sed":
                dets_by_clip[clip_id] = weak_sed_events(scores, thr)
            else:
                cfg = DecodeConfig(threshold=thr, median_len=decode.median_len, weak_masking=decode.weak_masking)
                dets_by_clip[clip_id] = decode_clip(scores, cfg)
        counts = match_operating_point(dets_by_clip, gt, sc, threshold=(thr,))
        points.append(counts)
        rates.append(effective_rates(counts, gt, sc))

    _, psds = psd_roc(rates, sc)
    roc = {
        name: per_class_staircase(rates, i, sc) for i, name in enumerate(gt.class_names)
    }
    return PSDSReport(
        scenario=sc,
        class_names=gt.class_names,
        points=tuple(points),
        rates=tuple(rates),
        per_class_roc=roc,
        psds=psds,
    )


# ---------------------------------------------------------------------------
# event-based F1
# ---------------------------------------------------------------------------


def _collar_match(d: Event, g: Event, onset_collar: float, offset_collar_ratio: float) -> bool:
    offset_collar = max(onset_collar, offset_collar_ratio * g.duration)
    return abs(d.onset - g.onset) <= onset_collar and abs(d.offset - g.offset) <= offset_collar


def event_f1(
    dets_by_clip: Mapping[str, list[Event]],
    gt: GroundTruth,
    onset_collar: float = 0.2,
    offset_collar_ratio: float = 0.2,
) -> dict:
    """Greedy one-to-one collar matching; per-class and macro F1.

    Detections are visited in onset order (clips in lexicographic order) and
    each takes the earliest-onset unmatched ground truth it fits.
    """
    names = gt.class_names
    idx = {n: i for i, n in enumerate(names)}
    tp = np.zeros(len(names), dtype=np.int64)
    fp = np.zeros(len(names), dtype=np.int64)
    fn = np.zeros(len(names), dtype=np.int64)

    for clip_id in sorted(set(gt.clip_durations) | set(dets_by_clip)):
        if clip_id not in gt.clip_durations:
            raise UnknownClip(f"detections reference unknown clip {clip_id!r}")
        gt_events = sorted(gt.events_in(clip_id), key=lambda e: (e.onset, e.offset))
        dets = sorted(dets_by_clip.get(clip_id, []), key=lambda e: (e.onset, e.offset))
        matched = [False] * len(gt_events)
        for d in dets:
            if d.class_name not in idx:
                raise UnknownClass(f"detection class {d.class_name!r} not in ground truth vocabulary")
            hit = None
            for j, g in enumerate(gt_events):
                if matched[j] or g.class_name != d.class_name:
                    continue
                if _collar_match(d, g, onset_collar, offset_collar_ratio):
                    hit = j
                    break
            if hit is None:
                fp[idx[d.class_name]] += 1
            else:
                matched[hit] = True
                tp[idx[d.class_name]] += 1
        for j, g in enumerate(gt_events):
            if not matched[j]:
                fn[idx[g.class_name]] += 1

    denom = 2 * tp + fp + fn
    with np.errstate(invalid="ignore"):
        f1 = np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    return {
        "per_class": {n: float(f1[i]) for i, n in enumerate(names)},
        "macro_f1": float(f1.mean()) if len(names) else 0.0,
        "tp": {n: int(tp[i]) for i, n in enumerate(names)},
        "fp": {n: int(fp[i]) for i, n in enumerate(names)},
        "fn": {n: int(fn[i]) for i, n in enumerate(names)},
    }


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def read_ground_truth(gt_tsv, durations_csv) -> GroundTruth:
    rows = read_events_tsv(gt_tsv)
    durations: dict[str, float] = {}
    for line_no, line in enumerate(Path(durations_csv).read_text().splitlines()):
        if not line.strip():
            continue
        name, _, value = line.partition(",")
        if line_no == 0 and name == "filename":
            continue
        durations[name] = float(value)
    names = tuple(sorted({ev.class_name for _, ev in rows}))
    return GroundTruth(events=tuple(rows), clip_durations=durations, class_names=names)


def events_by_clip(rows: list[tuple[str, Event]], clip_ids) -> dict[str, list[Event]]:
    out: dict[str, list[Event]] = {cid: [] for cid in clip_ids}
    for clip_id, ev in rows:
        out.setdefault(clip_id, []).append(ev)
    return out


def report_to_json(report: PSDSReport) -> dict:
    points = []
    for counts, (efpr, tpr) in zip(report.points, report.rates):
        points.append(
            {
                "threshold": list(counts.threshold),
                "tp": counts.tp.tolist(),
                "fp": counts.fp.tolist(),
                "n_gt": counts.n_gt.tolist(),
                "ct": counts.ct.tolist(),
                "efpr": efpr.tolist(),
                "tpr": tpr.tolist(),
            }
        )
    return {
        "scenario": report.scenario.to_json(),
        "psds": report.psds,
        "class_names": list(report.class_names),
        "points": points,
        "per_class_roc": {n: [[e, t] for e, t in pts] for n, pts in report.per_class_roc.items()},
    }


def write_report(report: PSDSReport, path) -> None:
    Path(path).write_text(json.dumps(report_to_json(report), indent=2) + "\n")


def write_roc_svg(report: PSDSReport, path) -> None:
    """Small standalone SVG of the per-class staircases, no plotting deps."""
    width, height, margin = 640, 440, 50
    e_max = report.scenario.e_max
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

    def sx(e: float) -> float:
        return margin + (width - 2 * margin) * (e / e_max)

    def sy(t: float) -> float:
        return height - margin - (height - 2 * margin) * t

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" font-size="12" text-anchor="middle">effective FP per hour (0..{e_max:g})</text>',
        f'<text x="14" y="{height // 2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {height // 2})">TP ratio</text>',
        f'<text x="{width // 2}" y="24" font-size="13" text-anchor="middle">PSD-ROC, psds={report.psds:.4f}</text>',
    ]
    for i, name in enumerate(report.class_names):
        color = palette[i % len(palette)]
        pts = report.per_class_roc[name]
        path_cmds = [f"M {sx(0):.2f} {sy(0):.2f}"]
        level = 0.0
        for e, t in pts:
            path_cmds.append(f"L {sx(e):.2f} {sy(level):.2f}")
            path_cmds.append(f"L {sx(e):.2f} {sy(t):.2f}")
            level = t
        path_cmds.append(f"L {sx(e_max):.2f} {sy(level):.2f}")
        parts.append(f'<path d="{" ".join(path_cmds)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - margin - 150}" y="{margin + 16 * i}" font-size="11" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
