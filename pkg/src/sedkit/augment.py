"""Spectrogram augmentations and the student/teacher dual-view policy.

FilterAugment multiplies random dB gains onto random contiguous mel bands,
imitating varied microphones, positions and room coloration. Alongside it:
frequency masking, time masking, frameshift, mixup and Gaussian noise.

Ops that move or mix label mass (frameshift, mixup, time masking) must hit
a consistency-trained student and teacher identically, so the dual-view
builder applies them once with shared draws; label-preserving ops
(FilterAugment, frequency masking, noise) are drawn independently per view.

Every op is a pure function of (inputs, rng). Child stream tags used by
the batch pipelines, fixed as a compatibility contract:

  batch level:  0 mixup partner permutation
  per item i (under child(1).child(i)):
    1 frameshift   2 mixup apply/lambda   3 time mask
    4/5/6 student filter/freq-mask/noise  7/8/9 teacher filter/freq-mask/noise
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DomainMismatch, InvalidConfig, ShapeMismatch, NoSignalPower
from .frontend import LINEAR, MelSpec
from .rng import Rng

_DB_TO_LOG = math.log(10.0) / 20.0


@dataclass(frozen=True)
class LabelSet:
    """Frame-level class activity plus a clip-level weak vector."""

    strong: np.ndarray  # C x T in [0, 1]
    weak: np.ndarray  # length C in [0, 1]
    class_names: tuple[str, ...]

    def __post_init__(self):
        strong = np.asarray(self.strong, dtype=np.float64)
        weak = np.asarray(self.weak, dtype=np.float64)
        names = tuple(self.class_names)
        if strong.ndim != 2:
            raise ShapeMismatch(f"strong labels must be C x T, got {strong.shape}")
        if weak.shape != (strong.shape[0],) or len(names) != strong.shape[0]:
            raise ShapeMismatch("weak vector / class_names length must match strong rows")
        if np.any(strong < 0) or np.any(strong > 1) or np.any(weak < 0) or np.any(weak > 1):
            raise ShapeMismatch("label entries must lie in [0, 1]")
        object.__setattr__(self, "strong", strong)
        object.__setattr__(self, "weak", weak)
        object.__setattr__(self, "class_names", names)

    @property
    def n_classes(self) -> int:
        return self.strong.shape[0]

    @property
    def n_frames(self) -> int:
        return self.strong.shape[1]

    def is_hard(self) -> bool:
        return bool(np.all((self.strong == 0.0) | (self.strong == 1.0)))


def empty_labels(class_names, n_frames: int) -> LabelSet:
    names = tuple(class_names)
    return LabelSet(np.zeros((len(names), n_frames)), np.zeros(len(names)), names)


@dataclass(frozen=True)
class FilterAugmentConfig:
    db_min: float = -7.5
    db_max: float = 6.0
    band_min: int = 2
    band_max: int = 4

    def validate(self, n_mels: int | None = None) -> None:
        if self.db_min > self.db_max:
            raise InvalidConfig(f"db_min ({self.db_min}) > db_max ({self.db_max})")
        if not (1 <= self.band_min <= self.band_max):
            raise InvalidConfig(f"need 1 <= band_min <= band_max, got {self.band_min}~{self.band_max}")
        if n_mels is not None and self.band_max > n_mels:
            raise InvalidConfig(f"band_max ({self.band_max}) exceeds mel bins ({n_mels})")


@dataclass(frozen=True)
class AugmentConfig:
    """Which augmentations run, and their ranges. None / zero disables an op."""

    filter_aug: FilterAugmentConfig | None = None
    freq_mask_max_bins: int = 0
    time_mask_min_frames: int = 7
    time_mask_max_frames: int = 30
    frameshift_max_frames: int = 54
    mixup_prob: float = 0.5
    mixup_alpha: float = 0.2
    noise_snr_db: tuple[float, float] | None = None

    def validate(self) -> None:
        if self.filter_aug is not None:
            self.filter_aug.validate()
        if self.freq_mask_max_bins < 0:
            raise InvalidConfig("freq_mask_max_bins must be >= 0")
        if self.time_mask_min_frames > self.time_mask_max_frames:
            raise InvalidConfig("time_mask_min_frames > time_mask_max_frames")
        if self.time_mask_min_frames < 0 or self.frameshift_max_frames < 0:
            raise InvalidConfig("frame counts must be >= 0")
        if not (0.0 <= self.mixup_prob <= 1.0):
            raise InvalidConfig("mixup_prob must lie in [0, 1]")
        if self.mixup_alpha <= 0:
            raise InvalidConfig("mixup_alpha must be positive")
        if self.noise_snr_db is not None and self.noise_snr_db[0] > self.noise_snr_db[1]:
            raise InvalidConfig("noise snr lo > hi")

    @classmethod
    def none(cls) -> "AugmentConfig":
        """All ops disabled; the dual-view builder becomes the identity."""
        return cls(
            filter_aug=None,
            freq_mask_max_bins=0,
            time_mask_min_frames=0,
            time_mask_max_frames=0,
            frameshift_max_frames=0,
            mixup_prob=0.0,
            noise_snr_db=None,
        )

    def to_json(self) -> dict:
        fa = self.filter_aug
        return {
            "filter_aug": None
            if fa is None
            else {"db_min": fa.db_min, "db_max": fa.db_max, "band_min": fa.band_min, "band_max": fa.band_max},
            "freq_mask_max_bins": self.freq_mask_max_bins,
            "time_mask_min_frames": self.time_mask_min_frames,
            "time_mask_max_frames": self.time_mask_max_frames,
            "frameshift_max_frames": self.frameshift_max_frames,
            "mixup_prob": self.mixup_prob,
            "mixup_alpha": self.mixup_alpha,
            "noise_snr_db": None if self.noise_snr_db is None else list(self.noise_snr_db),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AugmentConfig":
        known = {
            "filter_aug",
            "freq_mask_max_bins",
            "time_mask_min_frames",
            "time_mask_max_frames",
            "frameshift_max_frames",
            "mixup_prob",
            "mixup_alpha",
            "noise_snr_db",
        }
        unknown = set(obj) - known
        if unknown:
            raise InvalidConfig(f"unknown augment config fields: {sorted(unknown)}")
        fa = obj.get("filter_aug")
        base = cls()
        cfg = cls(
            filter_aug=None if fa is None else FilterAugmentConfig(**fa),
            freq_mask_max_bins=int(obj.get("freq_mask_max_bins", 0)),
            time_mask_min_frames=int(obj.get("time_mask_min_frames", base.time_mask_min_frames)),
            time_mask_max_frames=int(obj.get("time_mask_max_frames", base.time_mask_max_frames)),
            frameshift_max_frames=int(obj.get("frameshift_max_frames", base.frameshift_max_frames)),
            mixup_prob=float(obj.get("mixup_prob", base.mixup_prob)),
            mixup_alpha=float(obj.get("mixup_alpha", base.mixup_alpha)),
            noise_snr_db=None
            if obj.get("noise_snr_db") is None
            else (float(obj["noise_snr_db"][0]), float(obj["noise_snr_db"][1])),
        )
        cfg.validate()
        return cfg


def load_augment_config(path) -> AugmentConfig:
    return AugmentConfig.from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# individual ops
# ---------------------------------------------------------------------------


def _filter_profile_db(n_mels: int, cfg: FilterAugmentConfig, gen: np.random.Generator) -> np.ndarray:
    """Draw the per-bin dB gain profile: bands, boundaries, band gains."""
    n_bands = int(gen.integers(cfg.band_min, cfg.band_max + 1))
    if n_bands > 1:
        inner = np.sort(gen.choice(np.arange(1, n_mels), size=n_bands - 1, replace=False))
    else:
        inner = np.empty(0, dtype=np.int64)
    edges = np.concatenate(([0], inner, [n_mels]))
    gains = gen.uniform(cfg.db_min, cfg.db_max, size=n_bands)
    return np.repeat(gains, np.diff(edges))


def filter_augment(spec: MelSpec, cfg: FilterAugmentConfig, rng: Rng) -> MelSpec:
    """Multiply a random per-band amplitude gain onto a linear-domain spectrogram.

    Band count is uniform on [band_min, band_max]; boundaries are distinct
    mel-bin indices; each band's gain is uniform on [db_min, db_max] dB and
    applied as the amplitude factor 10**(dB / 20) to all frames.
    """
    if spec.domain != LINEAR:
        raise DomainMismatch("filter_augment needs linear-domain features; see make_student_teacher_views for log inputs")
    cfg.validate(spec.n_mels)
    db = _filter_profile_db(spec.n_mels, cfg, rng.generator())
    return spec.with_data(spec.data * (10.0 ** (db / 20.0))[None, :])


def _filter_augment_any_domain(spec: MelSpec, cfg: FilterAugmentConfig, rng: Rng) -> MelSpec:
    """FilterAugment with the exact additive equivalent on log-domain input."""
    cfg.validate(spec.n_mels)
    db = _filter_profile_db(spec.n_mels, cfg, rng.generator())
    if spec.domain == LINEAR:
        return spec.with_data(spec.data * (10.0 ** (db / 20.0))[None, :])
    return spec.with_data(spec.data + (db * _DB_TO_LOG)[None, :])


def freq_mask(spec: MelSpec, max_bins: int, rng: Rng) -> MelSpec:
    """Zero (or floor) one contiguous mel-bin span of random width <= max_bins."""
    if not (0 <= max_bins <= spec.n_mels):
        raise InvalidConfig(f"max_bins ({max_bins}) must lie in [0, {spec.n_mels}]")
    gen = rng.generator()
    width = int(gen.integers(0, max_bins + 1))
    start = int(gen.integers(0, spec.n_mels - width + 1))
    if width == 0:
        return spec
    data = spec.data.copy()
    data[:, start : start + width] = spec.mask_value
    return spec.with_data(data)


def _recompute_weak(labels: LabelSet, was_hard: bool) -> LabelSet:
    if not was_hard:
        return labels
    return replace(labels, weak=labels.strong.max(axis=1) if labels.n_frames else labels.weak * 0.0)


def time_mask(
    spec: MelSpec, labels: LabelSet, cfg: AugmentConfig, rng: Rng
) -> tuple[MelSpec, LabelSet]:
    """Mask a random frame span in the features and zero the labels there."""
    if labels.n_frames != spec.n_frames:
        raise ShapeMismatch("labels and features disagree on frame count")
    cfg.validate()
    was_hard = labels.is_hard()
    gen = rng.generator()
    length = int(gen.integers(cfg.time_mask_min_frames, cfg.time_mask_max_frames + 1))
    length = min(length, spec.n_frames)
    start = int(gen.integers(0, spec.n_frames - length + 1))
    if length == 0:
        return spec, labels
    data = spec.data.copy()
    data[start : start + length, :] = spec.mask_value
    strong = labels.strong.copy()
    strong[:, start : start + length] = 0.0
    return spec.with_data(data), _recompute_weak(replace(labels, strong=strong), was_hard)


def frame_shift(
    spec: MelSpec, labels: LabelSet, max_frames: int, rng: Rng
) -> tuple[MelSpec, LabelSet]:
    """Shift features and strong labels by the same random frame offset.

    Vacated frames take the feature mask value / zero labels; content pushed
    past either end is dropped (no wrap-around).
    """
    t = spec.n_frames
    if not (0 <= max_frames < t):
        raise InvalidConfig(f"max_frames ({max_frames}) must lie in [0, T) with T={t}")
    if labels.n_frames != t:
        raise ShapeMismatch("labels and features disagree on frame count")
    was_hard = labels.is_hard()
    gen = rng.generator()
    s = int(gen.integers(-max_frames, max_frames + 1))
    if s == 0:
        return spec, labels
    data = np.full_like(spec.data, spec.mask_value)
    strong = np.zeros_like(labels.strong)
    if s > 0:
        data[s:, :] = spec.data[: t - s, :]
        strong[:, s:] = labels.strong[:, : t - s]
    else:
        data[: t + s, :] = spec.data[-s:, :]
        strong[:, : t + s] = labels.strong[:, -s:]
    return spec.with_data(data), _recompute_weak(replace(labels, strong=strong), was_hard)


def mixup(
    a: tuple[MelSpec, LabelSet],
    b: tuple[MelSpec, LabelSet],
    cfg: AugmentConfig,
    rng: Rng,
) -> tuple[MelSpec, LabelSet]:
    """Convex-mix features and labels with one shared Beta(alpha, alpha) ratio.

    With probability 1 - mixup_prob the pair is left alone and ``a`` returns
    unchanged. The same lambda weights features, strong and weak labels.
    """
    spec_a, lab_a = a
    spec_b, lab_b = b
    if spec_a.data.shape != spec_b.data.shape or spec_a.domain != spec_b.domain:
        raise ShapeMismatch("mixup inputs must share feature shape and domain")
    if lab_a.strong.shape != lab_b.strong.shape or lab_a.class_names != lab_b.class_names:
        raise ShapeMismatch("mixup inputs must share label shape and classes")
    cfg.validate()
    gen = rng.generator()
    if gen.uniform() >= cfg.mixup_prob:
        return a
    lam = float(gen.beta(cfg.mixup_alpha, cfg.mixup_alpha))
    mixed_spec = spec_a.with_data(lam * spec_a.data + (1.0 - lam) * spec_b.data)
    mixed_labels = LabelSet(
        lam * lab_a.strong + (1.0 - lam) * lab_b.strong,
        lam * lab_a.weak + (1.0 - lam) * lab_b.weak,
        lab_a.class_names,
    )
    return mixed_spec, mixed_labels


def add_gaussian_noise(spec: MelSpec, snr_db: tuple[float, float], rng: Rng) -> MelSpec:
    """Add white Gaussian noise at a target SNR drawn uniformly from [lo, hi] dB.

    Noise variance is P * 10**(-snr/10) where P is the mean square of the
    feature entries, measured in whatever domain the features carry. Linear
    magnitudes are clamped at 0 afterwards (they cannot go negative), which
    slightly truncates the noise at near-zero entries.
    """
    lo, hi = float(snr_db[0]), float(snr_db[1])
    if lo > hi:
        raise InvalidConfig(f"snr range lo ({lo}) > hi ({hi})")
    power = float(np.mean(spec.data**2))
    if power == 0.0:
        raise NoSignalPower("feature matrix has zero power; SNR undefined")
    gen = rng.generator()
    snr = gen.uniform(lo, hi)
    sigma = math.sqrt(power * 10.0 ** (-snr / 10.0))
    noisy = spec.data + sigma * gen.standard_normal(spec.data.shape)
    if spec.domain == LINEAR:
        noisy = np.maximum(noisy, 0.0)
    return spec.with_data(noisy)


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

_TAG_BATCH_MIXUP_PERM = 0
_TAG_ITEMS = 1
_TAG_FRAMESHIFT = 1
_TAG_MIXUP = 2
_TAG_TIME_MASK = 3
_TAG_STUDENT = (4, 5, 6)
_TAG_TEACHER = (7, 8, 9)


def _apply_label_preserving(
    spec: MelSpec, cfg: AugmentConfig, rngs: tuple[Rng, Rng, Rng]
) -> MelSpec:
    r_filter, r_freq, r_noise = rngs
    if cfg.filter_aug is not None:
        spec = _filter_augment_any_domain(spec, cfg.filter_aug, r_filter)
    if cfg.freq_mask_max_bins > 0:
        spec = freq_mask(spec, cfg.freq_mask_max_bins, r_freq)
    if cfg.noise_snr_db is not None:
        spec = add_gaussian_noise(spec, cfg.noise_snr_db, r_noise)
    return spec


def augment_features(spec: MelSpec, cfg: AugmentConfig, rng: Rng) -> MelSpec:
    """Single-view application of the label-preserving ops in cfg."""
    cfg.validate()
    return _apply_label_preserving(spec, cfg, (rng.child(0), rng.child(1), rng.child(2)))


def make_student_teacher_views(
    batch: list[tuple[MelSpec, LabelSet]], cfg: AugmentConfig, rng: Rng
) -> tuple[list[MelSpec], list[MelSpec], list[LabelSet]]:
    """Build paired student/teacher inputs over one batch.

    Label-altering ops (frameshift, mixup, time mask) run once per item with
    shared draws, so both views see identical placement and one shared label
    set. Label-preserving ops then run per view with independent draws.
    """
    if not batch:
        raise InvalidConfig("batch must be non-empty")
    cfg.validate()
    shapes = {(s.data.shape, s.domain) for s, _ in batch}
    if len(shapes) != 1:
        raise ShapeMismatch(f"batch features disagree on shape/domain: {sorted(map(str, shapes))}")
    for spec, labels in batch:
        if labels.n_frames != spec.n_frames:
            raise ShapeMismatch("labels and features disagree on frame count")

    n = len(batch)
    items_root = rng.child(_TAG_ITEMS)
    item_rngs = [items_root.child(i) for i in range(n)]

    shared: list[tuple[MelSpec, LabelSet]] = []
    if cfg.frameshift_max_frames > 0:
        t = batch[0][0].n_frames
        shift_max = min(cfg.frameshift_max_frames, t - 1)  # short clips clamp the range
        for i, (spec, labels) in enumerate(batch):
            shared.append(frame_shift(spec, labels, shift_max, item_rngs[i].child(_TAG_FRAMESHIFT)))
    else:
        shared = list(batch)

    if cfg.mixup_prob > 0.0 and n > 1:
        perm = rng.child(_TAG_BATCH_MIXUP_PERM).generator().permutation(n)
        pre_mix = list(shared)
        shared = [
            mixup(pre_mix[i], pre_mix[int(perm[i])], cfg, item_rngs[i].child(_TAG_MIXUP))
            for i in range(n)
        ]

    if cfg.time_mask_max_frames > 0:
        shared = [
            time_mask(spec, labels, cfg, item_rngs[i].child(_TAG_TIME_MASK))
            for i, (spec, labels) in enumerate(shared)
        ]

    labels_out = [labels for _, labels in shared]
    student = [
        _apply_label_preserving(spec, cfg, tuple(item_rngs[i].child(t) for t in _TAG_STUDENT))
        for i, (spec, _) in enumerate(shared)
    ]
    teacher = [
        _apply_label_preserving(spec, cfg, tuple(item_rngs[i].child(t) for t in _TAG_TEACHER))
        for i, (spec, _) in enumerate(shared)
    ]
    return student, teacher, labels_out


# ---------------------------------------------------------------------------
# named presets (the bundled hyperparameter grid)
# ---------------------------------------------------------------------------


def _preset(**kwargs) -> AugmentConfig:
    return replace(AugmentConfig.none(), **kwargs)


PRESETS: dict[str, AugmentConfig] = {
    "none": AugmentConfig.none(),
    "noise_30_50": _preset(noise_snr_db=(30.0, 50.0)),
    "noise_30_45": _preset(noise_snr_db=(30.0, 45.0)),
    "noise_35_45": _preset(noise_snr_db=(35.0, 45.0)),
    "noise_35_40": _preset(noise_snr_db=(35.0, 40.0)),
    "freqmask_8": _preset(freq_mask_max_bins=8),
    "freqmask_12": _preset(freq_mask_max_bins=12),
    "freqmask_16": _preset(freq_mask_max_bins=16),
    "freqmask_32": _preset(freq_mask_max_bins=32),
    "filtaug_-6_4.5_b2-4": _preset(filter_aug=FilterAugmentConfig(-6.0, 4.5, 2, 4)),
    "filtaug_-6_6_b2-4": _preset(filter_aug=FilterAugmentConfig(-6.0, 6.0, 2, 4)),
    "filtaug_-7.5_6_b2-4": _preset(filter_aug=FilterAugmentConfig(-7.5, 6.0, 2, 4)),
    "filtaug_-7.5_6_b2-3": _preset(filter_aug=FilterAugmentConfig(-7.5, 6.0, 2, 3)),
    "freqmask_16+filtaug_-7.5_6_b2-4": _preset(
        freq_mask_max_bins=16, filter_aug=FilterAugmentConfig(-7.5, 6.0, 2, 4)
    ),
    "freqmask_16+filtaug_-6_4.5_b2-4": _preset(
        freq_mask_max_bins=16, filter_aug=FilterAugmentConfig(-6.0, 4.5, 2, 4)
    ),
    "freqmask_4+filtaug_-7.5_6_b2-4": _preset(
        freq_mask_max_bins=4, filter_aug=FilterAugmentConfig(-7.5, 6.0, 2, 4)
    ),
    "freqmask_4+filtaug_-6_4.5_b2-4": _preset(
        freq_mask_max_bins=4, filter_aug=FilterAugmentConfig(-6.0, 4.5, 2, 4)
    ),
}

#: the 16 bundled grid rows (everything except the no-augmentation baseline)
ABLATION_GRID: tuple[str, ...] = tuple(k for k in PRESETS if k != "none")


def get_preset(name: str) -> AugmentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidConfig(f"unknown augment preset {name!r}; known: {', '.join(PRESETS)}") from None
