"""Desk-scale fixtures: synthetic scenes and a deterministic toy detector.

Scenes are background Gaussian noise with parametric foreground events
(pure tones or band-limited noise bursts, 10 ms raised-cosine edges)
placed on the feature frame grid, so the emitted strong labels are exact
by construction. The toy detector scores each class from the energy in a
fixed mel-band template; it exists to drive the decode/evaluate stack,
not to be good.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._parallel import parallel_map
from .augment import AugmentConfig, augment_features, get_preset
from .errors import InvalidConfig, PlacementFailure
from .evaluate import (
    DEFAULT_THRESHOLDS,
    GroundTruth,
    ScenarioConfig,
    evaluate_system,
    scenario1,
    scenario2,
)
from .frontend import (
    FrontendConfig,
    MelSpec,
    Waveform,
    filterbank_peak_hz,
    linear_mel,
    normalize_waveform,
    write_wav,
)
from .postprocess import DecodeConfig, Event, ScoreMatrix
from .rng import Rng


@dataclass(frozen=True)
class EventPrototype:
    """One synthetic event class: a tone or a band-limited noise burst."""

    name: str
    kind: str  # "tone" | "noise_burst"
    freq_hz: float | None = None
    band_hz: tuple[float, float] | None = None
    duration_range: tuple[float, float] = (1.0, 3.0)

    def validate(self, clip_seconds: float) -> None:
        if self.kind not in ("tone", "noise_burst"):
            raise InvalidConfig(f"unknown prototype kind {self.kind!r}")
        if self.kind == "tone" and (self.freq_hz is None or self.freq_hz <= 0):
            raise InvalidConfig(f"tone prototype {self.name!r} needs a positive freq_hz")
        if self.kind == "noise_burst":
            if self.band_hz is None or not (0 <= self.band_hz[0] < self.band_hz[1]):
                raise InvalidConfig(f"noise prototype {self.name!r} needs a valid band_hz")
        lo, hi = self.duration_range
        if not (0 < lo <= hi <= clip_seconds):
            raise InvalidConfig(f"prototype {self.name!r} durations must fit the clip")


@dataclass(frozen=True)
class SceneSpec:
    n_clips: int
    classes: tuple[EventPrototype, ...]
    clip_seconds: float = 10.0
    events_per_clip: tuple[int, int] = (1, 2)
    background_snr_db: float = 30.0
    seed: int = 0
    sample_rate: int = 16000
    hop: int = 256
    min_gap_frames: int = 4  # keeps same-class events separable after median filtering

    def validate(self) -> None:
        if self.n_clips <= 0 or not self.classes:
            raise InvalidConfig("need at least one clip and one event class")
        if self.events_per_clip[0] < 0 or self.events_per_clip[0] > self.events_per_clip[1]:
            raise InvalidConfig("events_per_clip must be a (min <= max) pair of nonnegatives")
        for proto in self.classes:
            proto.validate(self.clip_seconds)

    @property
    def hop_seconds(self) -> float:
        return self.hop / self.sample_rate

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.classes)

    def to_json(self) -> dict:
        return {
            "n_clips": self.n_clips,
            "clip_seconds": self.clip_seconds,
            "events_per_clip": list(self.events_per_clip),
            "background_snr_db": self.background_snr_db,
            "seed": self.seed,
            "sample_rate": self.sample_rate,
            "hop": self.hop,
            "min_gap_frames": self.min_gap_frames,
            "classes": [
                {
                    "name": p.name,
                    "kind": p.kind,
                    "freq_hz": p.freq_hz,
                    "band_hz": None if p.band_hz is None else list(p.band_hz),
                    "duration_range": list(p.duration_range),
                }
                for p in self.classes
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SceneSpec":
        protos = tuple(
            EventPrototype(
                name=p["name"],
                kind=p["kind"],
                freq_hz=p.get("freq_hz"),
                band_hz=None if p.get("band_hz") is None else tuple(p["band_hz"]),
                duration_range=tuple(p.get("duration_range", (1.0, 3.0))),
            )
            for p in obj["classes"]
        )
        spec = cls(
            n_clips=int(obj["n_clips"]),
            classes=protos,
            clip_seconds=float(obj.get("clip_seconds", 10.0)),
            events_per_clip=tuple(obj.get("events_per_clip", (1, 2))),
            background_snr_db=float(obj.get("background_snr_db", 30.0)),
            seed=int(obj.get("seed", 0)),
            sample_rate=int(obj.get("sample_rate", 16000)),
            hop=int(obj.get("hop", 256)),
            min_gap_frames=int(obj.get("min_gap_frames", 4)),
        )
        spec.validate()
        return spec


def load_scene(path) -> SceneSpec:
    return SceneSpec.from_json(json.loads(Path(path).read_text()))


_EVENT_AMP = 0.3  # peak amplitude of a synthetic event before edges
_EDGE_SECONDS = 0.010


def _raised_cosine_edges(n: int, sr: int) -> np.ndarray:
    env = np.ones(n)
    edge = min(int(_EDGE_SECONDS * sr), n // 2)
    if edge > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
        env[:edge] = ramp
        env[-edge:] = ramp[::-1]
    return env


def _event_samples(proto: EventPrototype, n: int, sr: int, gen: np.random.Generator) -> np.ndarray:
    if proto.kind == "tone":
        phase = gen.uniform(0.0, 2.0 * np.pi)
        t = np.arange(n) / sr
        sig = _EVENT_AMP * np.sin(2.0 * np.pi * proto.freq_hz * t + phase)
    else:
        spectrum = np.zeros(n // 2 + 1, dtype=np.complex128)
        freqs = np.arange(n // 2 + 1) * (sr / n)
        band = (freqs >= proto.band_hz[0]) & (freqs <= proto.band_hz[1])
        if not band.any():
            raise InvalidConfig(f"noise band {proto.band_hz} too narrow for {n} samples")
        spectrum[band] = gen.standard_normal(int(band.sum())) + 1j * gen.standard_normal(int(band.sum()))
        sig = np.fft.irfft(spectrum, n=n)
        rms = float(np.sqrt(np.mean(sig**2)))
        sig = sig * (_EVENT_AMP / math.sqrt(2.0) / rms)
    return sig * _raised_cosine_edges(n, sr)


@dataclass(frozen=True)
class SynthClip:
    clip_id: str
    waveform: Waveform
    events: tuple[Event, ...]


def _place_events(spec: SceneSpec, gen: np.random.Generator) -> list[tuple[int, int, int]]:
    """Choose (class_index, onset_frame, n_frames) tuples on the frame grid.

    Same-class events keep at least min_gap_frames of silence between them;
    repeated rejection beyond the attempt budget raises PlacementFailure.
    """
    hop_s = spec.hop_seconds
    total_frames = int(round(spec.clip_seconds / hop_s))
    n_events = int(gen.integers(spec.events_per_clip[0], spec.events_per_clip[1] + 1))
    placed: list[tuple[int, int, int]] = []
    for _ in range(n_events):
        ok = False
        for _attempt in range(200):
            c = int(gen.integers(0, len(spec.classes)))
            lo, hi = spec.classes[c].duration_range
            dur_frames = max(1, int(round(gen.uniform(lo, hi) / hop_s)))
            if dur_frames > total_frames:
                continue
            onset_frame = int(gen.integers(0, total_frames - dur_frames + 1))
            clash = any(
                pc == c
                and not (
                    onset_frame + dur_frames + spec.min_gap_frames <= po
                    or po + pf + spec.min_gap_frames <= onset_frame
                )
                for pc, po, pf in placed
            )
            if not clash:
                placed.append((c, onset_frame, dur_frames))
                ok = True
                break
        if not ok:
            raise PlacementFailure(
                f"could not place {n_events} events of {len(spec.classes)} classes "
                f"in {spec.clip_seconds} s"
            )
    return placed


def generate_clip(spec: SceneSpec, clip_index: int) -> SynthClip:
    """One deterministic clip; the Rng stream depends only on (seed, index)."""
    gen = Rng(spec.seed).child(clip_index).generator()
    sr = spec.sample_rate
    n = int(round(spec.clip_seconds * sr))
    sigma = (_EVENT_AMP / math.sqrt(2.0)) * 10.0 ** (-spec.background_snr_db / 20.0)
    samples = sigma * gen.standard_normal(n)

    events: list[Event] = []
    for c, onset_frame, dur_frames in _place_events(spec, gen):
        start = onset_frame * spec.hop
        length = dur_frames * spec.hop
        length = min(length, n - start)
        samples[start : start + length] += _event_samples(spec.classes[c], length, sr, gen)
        onset = onset_frame * spec.hop_seconds
        offset = (onset_frame + dur_frames) * spec.hop_seconds
        events.append(Event(spec.classes[c].name, onset, min(offset, spec.clip_seconds)))
    events.sort(key=lambda e: (e.onset, e.class_name))
    return SynthClip(
        clip_id=f"clip_{clip_index:04d}.wav",
        waveform=Waveform(np.clip(samples, -1.0, 1.0), sr),
        events=tuple(events),
    )


def generate_scene(spec: SceneSpec) -> tuple[list[SynthClip], GroundTruth]:
    spec.validate()
    clips = parallel_map(lambda i: generate_clip(spec, i), range(spec.n_clips))
    events = tuple((c.clip_id, ev) for c in clips for ev in c.events)
    gt = GroundTruth(
        events=events,
        clip_durations={c.clip_id: spec.clip_seconds for c in clips},
        class_names=spec.class_names,
    )
    return clips, gt


def synth_dataset(spec: SceneSpec, out_dir) -> GroundTruth:
    """Write WAVs plus gt.tsv / weak.tsv / durations.csv under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    clips, gt = generate_scene(spec)

    audio_dir = out_dir / "audio"
    audio_dir.mkdir(exist_ok=True)
    for clip in clips:
        write_wav(audio_dir / clip.clip_id, clip.waveform)

    gt_lines = ["filename\tonset\toffset\tevent_label"]
    for clip in clips:
        for ev in clip.events:
            gt_lines.append(f"{clip.clip_id}\t{ev.onset:.3f}\t{ev.offset:.3f}\t{ev.class_name}")
    (out_dir / "gt.tsv").write_text("\n".join(gt_lines) + "\n")

    weak_lines = ["filename\tevent_labels"]
    for clip in clips:
        present = sorted({ev.class_name for ev in clip.events})
        weak_lines.append(f"{clip.clip_id}\t{','.join(present)}")
    (out_dir / "weak.tsv").write_text("\n".join(weak_lines) + "\n")

    dur_lines = ["filename,duration"]
    for clip in clips:
        dur_lines.append(f"{clip.clip_id},{repr(float(spec.clip_seconds))}")
    (out_dir / "durations.csv").write_text("\n".join(dur_lines) + "\n")
    return gt


# ---------------------------------------------------------------------------
# toy detector
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ToyDetectorConfig:
    """Per-class mel-band templates plus the score shaping parameters."""

    templates: tuple[tuple[str, int, int], ...]  # (class, first bin, end bin)
    temperature: float = 4.0
    weak_pooling: str = "max"

    def validate(self, n_mels: int) -> None:
        if not self.templates:
            raise InvalidConfig("toy detector needs at least one class template")
        for name, lo, hi in self.templates:
            if not (0 <= lo < hi <= n_mels):
                raise InvalidConfig(f"template for {name!r} is empty or out of range: [{lo}, {hi})")
        if self.temperature <= 0:
            raise InvalidConfig("temperature must be positive")
        if self.weak_pooling not in ("max", "mean"):
            raise InvalidConfig(f"unknown weak_pooling {self.weak_pooling!r}")

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(name for name, _, _ in self.templates)

    def to_json(self) -> dict:
        return {
            "templates": [[n, lo, hi] for n, lo, hi in self.templates],
            "temperature": self.temperature,
            "weak_pooling": self.weak_pooling,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ToyDetectorConfig":
        return cls(
            templates=tuple((str(n), int(lo), int(hi)) for n, lo, hi in obj["templates"]),
            temperature=float(obj.get("temperature", 4.0)),
            weak_pooling=str(obj.get("weak_pooling", "max")),
        )


def load_toy_config(path) -> ToyDetectorConfig:
    return ToyDetectorConfig.from_json(json.loads(Path(path).read_text()))


def default_toy_config(spec: SceneSpec, frontend: FrontendConfig | None = None, half_width: int = 3) -> ToyDetectorConfig:
    """Map each scene prototype to the mel rows around its center frequency."""
    frontend = frontend or FrontendConfig(sample_rate=spec.sample_rate, hop=spec.hop)
    peaks = filterbank_peak_hz(frontend)
    templates = []
    for proto in spec.classes:
        center = proto.freq_hz if proto.kind == "tone" else 0.5 * (proto.band_hz[0] + proto.band_hz[1])
        row = int(np.argmin(np.abs(peaks - center)))
        lo = max(0, row - half_width)
        hi = min(frontend.n_mels, row + half_width + 1)
        templates.append((proto.name, lo, hi))
    return ToyDetectorConfig(templates=tuple(templates))


def toy_detect(spec: MelSpec, cfg: ToyDetectorConfig) -> ScoreMatrix:
    """Logistic of the per-clip standardized template-band energy, per frame.

    Standardization statistics are pooled over all template bands of the
    clip: a band without events then stays near score 0.5 while an event
    band saturates, so the pooled weak score separates present from absent
    classes. Per-band statistics would score pure noise as confident.
    """
    cfg.validate(spec.n_mels)
    bands = np.stack([spec.data[:, lo:hi].mean(axis=1) for _, lo, hi in cfg.templates], axis=1)
    std = float(bands.std())
    z = (bands - bands.mean()) / std if std > 0 else np.zeros_like(bands)
    strong = 1.0 / (1.0 + np.exp(-cfg.temperature * z))
    weak = strong.max(axis=0) if cfg.weak_pooling == "max" else strong.mean(axis=0)
    return ScoreMatrix(
        strong=strong,
        weak=weak,
        hop_seconds=spec.hop_seconds,
        clip_duration_seconds=spec.clip_duration_seconds,
        class_names=cfg.class_names,
    )


# ---------------------------------------------------------------------------
# ablation grid
# ---------------------------------------------------------------------------


def ablation_scores(
    scene: SceneSpec,
    preset: AugmentConfig,
    row_index: int,
    detector: ToyDetectorConfig | None = None,
) -> tuple[dict[str, ScoreMatrix], GroundTruth]:
    """Features + preset augmentation + toy detection for one grid row.

    The augmentation stream is derived from (scene.seed, row_index, clip
    index), so a row is reproducible in isolation.
    """
    frontend = FrontendConfig(sample_rate=scene.sample_rate, hop=scene.hop)
    detector = detector or default_toy_config(scene, frontend)
    clips, gt = generate_scene(scene)
    row_rng = Rng(scene.seed).child(10_000 + row_index)

    def score_one(item: tuple[int, SynthClip]) -> tuple[str, ScoreMatrix]:
        i, clip = item
        feats = linear_mel(normalize_waveform(clip.waveform), frontend)
        feats = augment_features(feats, preset, row_rng.child(i))
        return clip.clip_id, toy_detect(feats, detector)

    scored = parallel_map(score_one, list(enumerate(clips)))
    return dict(scored), gt


def run_ablation(
    grid: list[str],
    scene: SceneSpec,
    thresholds=DEFAULT_THRESHOLDS,
    decode: DecodeConfig | None = None,
    scenarios: tuple[ScenarioConfig, ScenarioConfig] | None = None,
    detector: ToyDetectorConfig | None = None,
) -> list[tuple[str, float, float]]:
    """Evaluate each named preset on the same scene; rows keep grid order.

    Absolute numbers only describe the toy harness; the point is the
    deterministic, like-for-like comparison across presets.
    """
    scene.validate()
    sc1, sc2 = scenarios or (scenario1(), scenario2())
    decode = decode or DecodeConfig()
    rows: list[tuple[str, float, float]] = []
    for row_index, name in enumerate(grid):
        preset = get_preset(name)
        scores, gt = ablation_scores(scene, preset, row_index, detector)
        psds1 = evaluate_system(scores, gt, sc1, decode, thresholds).psds
        psds2 = evaluate_system(scores, gt, sc2, decode, thresholds).psds
        rows.append((name, psds1, psds2))
    return rows


def write_ablation_csv(rows: list[tuple[str, float, float]], path) -> None:
    lines = ["method,psds1,psds2"]
    for name, p1, p2 in rows:
        lines.append(f"{name},{repr(float(p1))},{repr(float(p2))}")
    Path(path).write_text("\n".join(lines) + "\n")
