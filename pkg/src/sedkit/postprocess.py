"""Frame scores to event lists.

Decoding runs: threshold (optionally gated by the clip-level weak
prediction), majority-vote median filter along time, then maximal runs of
active frames become events. Weak-SED decoding ignores frame scores
entirely and emits one full-clip event per class whose weak prediction
clears the threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidConfig, InvalidScores


@dataclass(frozen=True)
class ScoreMatrix:
    """Frame-level posteriors (T x C) plus a clip-level weak vector."""

    strong: np.ndarray
    weak: np.ndarray
    hop_seconds: float
    clip_duration_seconds: float
    class_names: tuple[str, ...]

    def __post_init__(self):
        strong = np.asarray(self.strong, dtype=np.float64)
        weak = np.asarray(self.weak, dtype=np.float64)
        names = tuple(self.class_names)
        if strong.ndim != 2 or strong.shape[1] != len(names):
            raise InvalidScores(f"strong scores must be T x {len(names)}, got {strong.shape}")
        if weak.shape != (len(names),):
            raise InvalidScores("weak vector length must match class count")
        if np.any(strong < 0) or np.any(strong > 1) or np.any(weak < 0) or np.any(weak > 1):
            raise InvalidScores("scores must lie in [0, 1]")
        if self.hop_seconds <= 0 or self.clip_duration_seconds <= 0:
            raise InvalidScores("hop_seconds and clip_duration_seconds must be positive")
        if strong.shape[0] * self.hop_seconds < self.clip_duration_seconds - self.hop_seconds:
            raise InvalidScores("frame grid does not cover the clip duration")
        object.__setattr__(self, "strong", strong)
        object.__setattr__(self, "weak", weak)
        object.__setattr__(self, "class_names", names)

    @property
    def n_frames(self) -> int:
        return self.strong.shape[0]

    @property
    def n_classes(self) -> int:
        return self.strong.shape[1]


@dataclass(frozen=True)
class Event:
    class_name: str
    onset: float
    offset: float

    def __post_init__(self):
        if not (0.0 <= self.onset < self.offset):
            raise InvalidScores(f"bad event interval [{self.onset}, {self.offset})")

    @property
    def duration(self) -> float:
        return self.offset - self.onset


@dataclass(frozen=True)
class DecodeConfig:
    threshold: float | tuple[float, ...] = 0.5
    median_len: int = 7
    weak_masking: bool = True

    def validate(self) -> None:
        thr = np.atleast_1d(np.asarray(self.threshold, dtype=np.float64))
        if np.any(thr <= 0) or np.any(thr >= 1):
            raise InvalidConfig("thresholds must lie in (0, 1)")
        if self.median_len < 1 or self.median_len % 2 == 0:
            raise InvalidConfig(f"median_len must be an odd positive integer, got {self.median_len}")


def _per_class_thresholds(threshold, n_classes: int) -> np.ndarray:
    thr = np.atleast_1d(np.asarray(threshold, dtype=np.float64))
    if thr.shape == (1,):
        thr = np.full(n_classes, thr[0])
    if thr.shape != (n_classes,):
        raise InvalidConfig(f"need 1 or {n_classes} thresholds, got shape {thr.shape}")
    if np.any(thr <= 0) or np.any(thr >= 1):
        raise InvalidConfig("thresholds must lie in (0, 1)")
    return thr


def binarize(scores: ScoreMatrix, threshold) -> np.ndarray:
    """C x T activity grid; a score equal to the threshold counts as active."""
    thr = _per_class_thresholds(threshold, scores.n_classes)
    return (scores.strong.T >= thr[:, None]).astype(np.uint8)


def apply_weak_masking(scores: ScoreMatrix, threshold) -> np.ndarray:
    """Binarize, but force a class row to zero unless its weak score also clears
    the same threshold."""
    thr = _per_class_thresholds(threshold, scores.n_classes)
    exists = scores.weak >= thr
    return (binarize(scores, threshold) & exists[:, None].astype(np.uint8)).astype(np.uint8)


def median_filter(grid: np.ndarray, median_len: int) -> np.ndarray:
    """Per-class 1-D median along time; frames outside the clip count as 0.

    On binary input the median is a majority vote over the window, so active
    runs shorter than (median_len + 1) / 2 with enough silence around them
    are removed and same-size gaps are filled.
    """
    if median_len < 1 or median_len % 2 == 0:
        raise InvalidConfig(f"median_len must be an odd positive integer, got {median_len}")
    grid = np.asarray(grid)
    if median_len == 1:
        return grid.astype(np.uint8)
    half = median_len // 2
    padded = np.pad(grid.astype(np.int64), ((0, 0), (half, half)))
    counts = sliding_window_view(padded, median_len, axis=1).sum(axis=2)
    return (counts >= half + 1).astype(np.uint8)


def decode_events(
    grid: np.ndarray,
    hop_seconds: float,
    clip_duration_seconds: float,
    class_names,
) -> list[Event]:
    """Maximal runs of active frames become events, clamped to the clip end.

    Frame t spans [t * hop, (t + 1) * hop); runs whose clamped interval
    collapses to zero length are dropped. Output is sorted by (class, onset).
    """
    grid = np.asarray(grid)
    names = list(class_names)
    if grid.ndim != 2 or grid.shape[0] != len(names):
        raise InvalidScores(f"grid must be C x T with C={len(names)}, got {grid.shape}")
    events: list[Event] = []
    for c, name in enumerate(names):
        padded = np.concatenate(([0], grid[c].astype(np.int8), [0]))
        edges = np.flatnonzero(np.diff(padded))
        for t0, t1 in zip(edges[::2], edges[1::2]):
            onset = t0 * hop_seconds
            offset = min(t1 * hop_seconds, clip_duration_seconds)
            if offset > onset:
                events.append(Event(name, onset, offset))
    events.sort(key=lambda e: (e.class_name, e.onset, e.offset))
    return events


def weak_sed_events(scores: ScoreMatrix, threshold) -> list[Event]:
    """Full-clip event per class whose weak score clears its threshold."""
    thr = _per_class_thresholds(threshold, scores.n_classes)
    return [
        Event(name, 0.0, scores.clip_duration_seconds)
        for name, w, t in zip(scores.class_names, scores.weak, thr)
        if w >= t
    ]


def decode_clip(scores: ScoreMatrix, cfg: DecodeConfig) -> list[Event]:
    """threshold (+ optional weak masking) -> median filter -> events."""
    cfg.validate()
    grid = apply_weak_masking(scores, cfg.threshold) if cfg.weak_masking else binarize(scores, cfg.threshold)
    grid = median_filter(grid, cfg.median_len)
    return decode_events(grid, scores.hop_seconds, scores.clip_duration_seconds, scores.class_names)


def rasterize_events(
    events: list[Event], class_names, n_frames: int, hop_seconds: float
) -> np.ndarray:
    """Inverse of decode_events on the same frame grid (C x T binary)."""
    names = list(class_names)
    index = {n: i for i, n in enumerate(names)}
    grid = np.zeros((len(names), n_frames), dtype=np.uint8)
    for ev in events:
        c = index[ev.class_name]
        t0 = int(round(ev.onset / hop_seconds))
        t1 = int(round(ev.offset / hop_seconds))
        grid[c, max(t0, 0) : min(max(t1, t0 + 1), n_frames)] = 1
    return grid


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def write_scores(scores: ScoreMatrix, csv_path, clip_id: str) -> None:
    """Strong scores as CSV (time_s + one column per class); weak vector and
    timing metadata in a JSON sidecar."""
    csv_path = Path(csv_path)
    header = "time_s," + ",".join(scores.class_names)
    lines = [header]
    for t, row in enumerate(scores.strong):
        time_s = t * scores.hop_seconds
        lines.append(repr(float(time_s)) + "," + ",".join(repr(float(v)) for v in row))
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = {
        "clip_id": clip_id,
        "hop_seconds": scores.hop_seconds,
        "clip_duration_seconds": scores.clip_duration_seconds,
        "weak": {name: float(w) for name, w in zip(scores.class_names, scores.weak)},
    }
    csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_scores(csv_path) -> tuple[str, ScoreMatrix]:
    csv_path = Path(csv_path)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    with csv_path.open() as fh:
        header = fh.readline().strip().split(",")
    if header[:1] != ["time_s"]:
        raise InvalidScores(f"{csv_path}: first column must be time_s")
    names = tuple(header[1:])
    body = np.loadtxt(csv_path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2)
    weak = np.array([meta["weak"][n] for n in names], dtype=np.float64)
    scores = ScoreMatrix(
        strong=body[:, 1:],
        weak=weak,
        hop_seconds=meta["hop_seconds"],
        clip_duration_seconds=meta["clip_duration_seconds"],
        class_names=names,
    )
    return meta["clip_id"], scores


def write_events_tsv(rows: list[tuple[str, Event]], path) -> None:
    """Event list TSV: filename, onset, offset (3 decimals), event_label."""
    lines = ["filename\tonset\toffset\tevent_label"]
    for clip_id, ev in rows:
        lines.append(f"{clip_id}\t{ev.onset:.3f}\t{ev.offset:.3f}\t{ev.class_name}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_events_tsv(path) -> list[tuple[str, Event]]:
    rows: list[tuple[str, Event]] = []
    for line_no, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip():
            continue
        parts = line.split("\t")
        if line_no == 0 and parts[0] == "filename":
            continue
        if len(parts) != 4:
            raise InvalidScores(f"{path}:{line_no + 1}: expected 4 tab-separated fields")
        clip_id, onset, offset, label = parts
        rows.append((clip_id, Event(label, float(onset), float(offset))))
    return rows
