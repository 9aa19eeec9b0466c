import math

import numpy as np
import pytest

from sedkit.augment import (
    PRESETS,
    ABLATION_GRID,
    AugmentConfig,
    FilterAugmentConfig,
    LabelSet,
    add_gaussian_noise,
    augment_features,
    filter_augment,
    frame_shift,
    freq_mask,
    get_preset,
    make_student_teacher_views,
    mixup,
    time_mask,
)
from sedkit.errors import DomainMismatch, InvalidConfig, NoSignalPower, ShapeMismatch
from sedkit.frontend import LINEAR, LOG, LOG_MASK_VALUE, MelSpec
from sedkit.rng import Rng

HOP_S = 256 / 16000


def lin_spec(t=40, m=128, seed=0, zeros=False):
    gen = np.random.default_rng(seed)
    data = gen.uniform(0.5, 50.0, size=(t, m))
    if zeros:
        data[gen.uniform(size=(t, m)) < 0.1] = 0.0
    return MelSpec(data, LINEAR, HOP_S, t * HOP_S)


def log_spec(t=40, m=128, seed=0):
    gen = np.random.default_rng(seed)
    return MelSpec(gen.uniform(-11.0, 2.0, size=(t, m)), LOG, HOP_S, t * HOP_S)


def hard_labels(strong):
    strong = np.asarray(strong, dtype=np.float64)
    names = tuple(f"c{i}" for i in range(strong.shape[0]))
    return LabelSet(strong, strong.max(axis=1), names)


# ---------------------------------------------------------------------------
# Rng
# ---------------------------------------------------------------------------


def test_rng_repeatable_and_splittable():
    a = Rng(7, 3).generator().uniform(size=8)
    b = Rng(7, 3).generator().uniform(size=8)
    assert np.array_equal(a, b)
    c = Rng(7, 4).generator().uniform(size=8)
    assert not np.array_equal(a, c)
    assert Rng(7).child(2) == Rng(7).child(2)
    assert Rng(7).child(2) != Rng(7).child(3)


# ---------------------------------------------------------------------------
# filter_augment
# ---------------------------------------------------------------------------


def test_filter_augment_zero_db_identity():
    spec = lin_spec(seed=1)
    out = filter_augment(spec, FilterAugmentConfig(0.0, 0.0, 2, 4), Rng(5))
    assert np.array_equal(out.data, spec.data)


def test_filter_augment_single_band_scalar():
    spec = lin_spec(seed=2)
    out = filter_augment(spec, FilterAugmentConfig(-7.5, 6.0, 1, 1), Rng(9))
    ratio = out.data / spec.data
    assert ratio.max() - ratio.min() < 1e-12
    g = 20.0 * math.log10(ratio.mean())
    assert -7.5 <= g <= 6.0


def test_filter_augment_ratio_bounds_default():
    spec = lin_spec(seed=3)
    lo, hi = 10 ** (-7.5 / 20.0), 10 ** (6.0 / 20.0)
    for trial in range(200):
        out = filter_augment(spec, FilterAugmentConfig(), Rng(100, trial))
        ratio = out.data / spec.data
        assert ratio.min() >= lo and ratio.max() <= hi


def test_filter_augment_bands_contiguous_and_flat():
    spec = lin_spec(seed=4)
    out = filter_augment(spec, FilterAugmentConfig(-7.5, 6.0, 2, 4), Rng(11))
    ratio = out.data / spec.data
    # constant over time within each bin
    assert np.max(ratio.max(axis=0) - ratio.min(axis=0)) < 1e-12
    col = ratio[0]
    changes = np.flatnonzero(np.abs(np.diff(col)) > 1e-12)
    assert 1 <= changes.size + 1 <= 4  # 2..4 bands means 1..3 boundaries


def test_filter_augment_preserves_zero_pattern_and_sign():
    spec = lin_spec(seed=5, zeros=True)
    out = filter_augment(spec, FilterAugmentConfig(), Rng(13))
    assert np.array_equal(out.data == 0.0, spec.data == 0.0)
    assert np.all(out.data >= 0.0)


def test_filter_augment_log_domain_rejected():
    with pytest.raises(DomainMismatch):
        filter_augment(log_spec(), FilterAugmentConfig(), Rng(1))


def test_filter_augment_band_max_exceeds_bins():
    spec = lin_spec(m=8)
    with pytest.raises(InvalidConfig):
        filter_augment(spec, FilterAugmentConfig(-6, 6, 2, 9), Rng(1))


def test_filter_augment_log_additive_equivalent():
    # log(filter_augment(exp(X))) - X is bin-piecewise-constant, time-constant
    x = log_spec(seed=6)
    lin = MelSpec(np.exp(x.data), LINEAR, x.hop_seconds, x.clip_duration_seconds)
    out = filter_augment(lin, FilterAugmentConfig(), Rng(21))
    delta = np.log(out.data) - x.data
    assert np.max(delta.max(axis=0) - delta.min(axis=0)) < 1e-10
    profile = delta[0]
    assert np.unique(np.round(profile, 9)).size <= 4


def test_filter_augment_deterministic():
    spec = lin_spec(seed=7)
    a = filter_augment(spec, FilterAugmentConfig(), Rng(3, 14))
    b = filter_augment(spec, FilterAugmentConfig(), Rng(3, 14))
    assert np.array_equal(a.data, b.data)


# ---------------------------------------------------------------------------
# freq_mask
# ---------------------------------------------------------------------------


def test_freq_mask_zero_identity():
    spec = lin_spec(seed=8)
    out = freq_mask(spec, 0, Rng(2))
    assert np.array_equal(out.data, spec.data)


def test_freq_mask_span_and_fill():
    spec = lin_spec(seed=9)
    out = freq_mask(spec, 16, Rng(4))
    changed = np.flatnonzero(np.any(out.data != spec.data, axis=0))
    assert changed.size <= 16
    if changed.size:
        assert np.array_equal(changed, np.arange(changed[0], changed[-1] + 1))
        assert np.all(out.data[:, changed] == 0.0)
    untouched = np.setdiff1d(np.arange(spec.n_mels), changed)
    assert np.array_equal(out.data[:, untouched], spec.data[:, untouched])


def test_freq_mask_log_fill_value():
    spec = log_spec(seed=10)
    for trial in range(20):
        out = freq_mask(spec, 30, Rng(6, trial))
        changed = np.any(out.data != spec.data, axis=0)
        assert np.all(out.data[:, changed] == LOG_MASK_VALUE)


def test_freq_mask_full_width_possible():
    spec = lin_spec(m=4, seed=11)
    hit = False
    for trial in range(80):
        out = freq_mask(spec, 4, Rng(8, trial))
        if np.all(out.data == 0.0):
            hit = True
            break
    assert hit


def test_freq_mask_invalid_config():
    with pytest.raises(InvalidConfig):
        freq_mask(lin_spec(m=8), 9, Rng(1))


# ---------------------------------------------------------------------------
# time_mask
# ---------------------------------------------------------------------------


def test_time_mask_zero_identity():
    spec = lin_spec(seed=12)
    labels = hard_labels(np.zeros((2, spec.n_frames)))
    cfg = AugmentConfig(time_mask_min_frames=0, time_mask_max_frames=0)
    out_spec, out_labels = time_mask(spec, labels, cfg, Rng(3))
    assert np.array_equal(out_spec.data, spec.data)
    assert np.array_equal(out_labels.strong, labels.strong)


def test_time_mask_masks_features_and_labels_together():
    spec = lin_spec(seed=13)
    strong = np.zeros((2, spec.n_frames))
    strong[0, 5:15] = 1.0
    labels = hard_labels(strong)
    cfg = AugmentConfig(time_mask_min_frames=10, time_mask_max_frames=10)
    out_spec, out_labels = time_mask(spec, labels, cfg, Rng(17))
    masked = np.flatnonzero(np.all(out_spec.data == 0.0, axis=1))
    assert masked.size == 10
    assert np.array_equal(masked, np.arange(masked[0], masked[0] + 10))
    assert np.all(out_labels.strong[:, masked] == 0.0)
    keep = np.setdiff1d(np.arange(spec.n_frames), masked)
    assert np.array_equal(out_labels.strong[:, keep], labels.strong[:, keep])


def test_time_mask_recomputes_weak_for_hard_labels():
    spec = lin_spec(t=30, seed=14)
    strong = np.zeros((2, 30))
    strong[1, 4:9] = 1.0  # the only event; weak must drop when it dies
    labels = hard_labels(strong)
    cfg = AugmentConfig(time_mask_min_frames=30, time_mask_max_frames=30)
    _, out_labels = time_mask(spec, labels, cfg, Rng(19))
    assert np.array_equal(out_labels.weak, [0.0, 0.0])


def test_time_mask_soft_labels_keep_weak():
    spec = lin_spec(t=30, seed=15)
    strong = np.full((1, 30), 0.25)
    labels = LabelSet(strong, np.array([0.7]), ("c0",))
    cfg = AugmentConfig(time_mask_min_frames=30, time_mask_max_frames=30)
    _, out_labels = time_mask(spec, labels, cfg, Rng(23))
    assert np.array_equal(out_labels.weak, [0.7])


def test_time_mask_length_clamped_to_clip():
    spec = lin_spec(t=10, seed=16)
    labels = hard_labels(np.ones((1, 10)))
    cfg = AugmentConfig(time_mask_min_frames=50, time_mask_max_frames=80)
    out_spec, out_labels = time_mask(spec, labels, cfg, Rng(29))
    assert np.all(out_spec.data == 0.0)
    assert np.all(out_labels.strong == 0.0)


# ---------------------------------------------------------------------------
# frame_shift
# ---------------------------------------------------------------------------


def _reference_shift(data, s, fill):
    out = np.full_like(data, fill)
    t = data.shape[0]
    if s > 0:
        out[s:] = data[: t - s]
    elif s < 0:
        out[: t + s] = data[-s:]
    else:
        out[:] = data
    return out


def test_frame_shift_zero_max_identity():
    spec = lin_spec(seed=17)
    labels = hard_labels(np.zeros((1, spec.n_frames)))
    out_spec, out_labels = frame_shift(spec, labels, 0, Rng(1))
    assert np.array_equal(out_spec.data, spec.data)
    assert np.array_equal(out_labels.strong, labels.strong)


def test_frame_shift_semantics_match_reference():
    t = 24
    spec = lin_spec(t=t, seed=18)
    strong = np.zeros((2, t))
    strong[0, 5:8] = 1.0
    labels = hard_labels(strong)
    for trial in range(40):
        out_spec, out_labels = frame_shift(spec, labels, 6, Rng(31, trial))
        # recover the shift from the feature placement and check everything
        diffs = [s for s in range(-6, 7) if np.array_equal(out_spec.data, _reference_shift(spec.data, s, 0.0))]
        assert len(diffs) >= 1
        s = diffs[0]
        assert np.array_equal(out_labels.strong, _reference_shift(strong.T, s, 0.0).T)
        assert np.array_equal(out_labels.weak, out_labels.strong.max(axis=1))


def test_frame_shift_event_at_edge_drops_weak():
    t = 10
    spec = lin_spec(t=t, seed=19)
    strong = np.zeros((1, t))
    strong[0, 0:2] = 1.0
    labels = hard_labels(strong)
    dropped = False
    for trial in range(500):
        _, out_labels = frame_shift(spec, labels, t - 1, Rng(37, trial))
        if out_labels.weak[0] == 0.0:
            dropped = True
            break
    assert dropped


def test_frame_shift_example_plus_three():
    t = 16
    spec = lin_spec(t=t, seed=20)
    strong = np.zeros((1, t))
    strong[0, 5:8] = 1.0
    labels = hard_labels(strong)
    for trial in range(200):
        out_spec, out_labels = frame_shift(spec, labels, 3, Rng(41, trial))
        if np.array_equal(out_spec.data, _reference_shift(spec.data, 3, 0.0)):
            assert np.array_equal(np.flatnonzero(out_labels.strong[0]), [8, 9, 10])
            return
    pytest.fail("shift of +3 never drawn in 200 trials")


# ---------------------------------------------------------------------------
# mixup
# ---------------------------------------------------------------------------


def pair(seed, t=20, m=16, c=2):
    gen = np.random.default_rng(seed)
    spec = MelSpec(gen.uniform(0, 5, size=(t, m)), LINEAR, HOP_S, t * HOP_S)
    strong = (gen.uniform(size=(c, t)) < 0.3).astype(np.float64)
    return spec, hard_labels(strong)


def test_mixup_prob_zero_returns_first_unchanged():
    a, b = pair(1), pair(2)
    cfg = AugmentConfig(mixup_prob=0.0)
    out_spec, out_labels = mixup(a, b, cfg, Rng(43))
    assert out_spec is a[0] and out_labels is a[1]


def test_mixup_convex_combination():
    a, b = pair(3), pair(4)
    cfg = AugmentConfig(mixup_prob=1.0, mixup_alpha=0.2)
    out_spec, out_labels = mixup(a, b, cfg, Rng(47))
    # recover lambda from one feature cell and verify globally
    i, j = 3, 5
    lam = (out_spec.data[i, j] - b[0].data[i, j]) / (a[0].data[i, j] - b[0].data[i, j])
    assert 0.0 <= lam <= 1.0
    assert np.allclose(out_spec.data, lam * a[0].data + (1 - lam) * b[0].data, atol=1e-12)
    assert np.allclose(out_labels.strong, lam * a[1].strong + (1 - lam) * b[1].strong, atol=1e-12)
    assert np.allclose(out_labels.weak, lam * a[1].weak + (1 - lam) * b[1].weak, atol=1e-12)
    assert np.all(out_labels.strong >= 0) and np.all(out_labels.strong <= 1)


def test_mixup_shape_mismatch():
    a = pair(5)
    b = pair(6, t=21)
    with pytest.raises(ShapeMismatch):
        mixup(a, b, AugmentConfig(mixup_prob=1.0), Rng(1))


# ---------------------------------------------------------------------------
# add_gaussian_noise
# ---------------------------------------------------------------------------


def test_noise_vanishes_at_huge_snr():
    spec = lin_spec(seed=21)
    out = add_gaussian_noise(spec, (300.0, 300.0), Rng(53))
    assert np.max(np.abs(out.data - spec.data)) < 1e-10


def test_noise_power_matches_snr():
    gen = np.random.default_rng(22)
    data = gen.uniform(0.5, 2.0, size=(1000, 1000))
    spec = MelSpec(data, LINEAR, HOP_S, 1000 * HOP_S)
    out = add_gaussian_noise(spec, (30.0, 30.0), Rng(59))
    noise = out.data - spec.data
    ratio = np.mean(noise**2) / np.mean(spec.data**2)
    assert abs(ratio - 1e-3) < 1e-4  # within 10 percent


def test_noise_snr_always_inside_range():
    spec = lin_spec(t=60, m=64, seed=23)
    p = np.mean(spec.data**2)
    for trial in range(200):
        out = add_gaussian_noise(spec, (30.0, 50.0), Rng(61, trial))
        ratio = np.mean((out.data - spec.data) ** 2) / p
        # sampling slack around [1e-5, 1e-3]
        assert 0.5e-5 < ratio < 2e-3


def test_noise_zero_power_rejected():
    spec = MelSpec(np.zeros((4, 4)), LINEAR, HOP_S, 4 * HOP_S)
    with pytest.raises(NoSignalPower):
        add_gaussian_noise(spec, (30.0, 50.0), Rng(1))


# ---------------------------------------------------------------------------
# make_student_teacher_views
# ---------------------------------------------------------------------------


def batch(seed, n=3, t=30, m=32, c=2, domain=LINEAR):
    gen = np.random.default_rng(seed)
    items = []
    for _ in range(n):
        data = gen.uniform(0.5, 5.0, size=(t, m))
        if domain == LOG:
            data = np.log(data)
        spec = MelSpec(data, domain, HOP_S, t * HOP_S)
        strong = (gen.uniform(size=(c, t)) < 0.2).astype(np.float64)
        items.append((spec, hard_labels(strong)))
    return items


def test_views_empty_config_is_identity():
    items = batch(31)
    student, teacher, labels = make_student_teacher_views(items, AugmentConfig.none(), Rng(67))
    for (spec, lab), s, te, lo in zip(items, student, teacher, labels):
        assert np.array_equal(s.data, spec.data)
        assert np.array_equal(te.data, spec.data)
        assert np.array_equal(lo.strong, lab.strong)


def test_views_label_altering_only_makes_equal_views():
    items = batch(32)
    cfg = AugmentConfig.none()
    cfg = AugmentConfig(
        filter_aug=None,
        freq_mask_max_bins=0,
        time_mask_min_frames=3,
        time_mask_max_frames=8,
        frameshift_max_frames=5,
        mixup_prob=0.5,
        noise_snr_db=None,
    )
    student, teacher, labels = make_student_teacher_views(items, cfg, Rng(71))
    for s, te in zip(student, teacher):
        assert np.array_equal(s.data, te.data)
    # masked feature frames carry zeroed labels
    for s, lab in zip(student, labels):
        assert np.all(lab.strong >= 0) and np.all(lab.strong <= 1)


def test_views_label_preserving_only_keeps_labels_and_differs():
    items = batch(33)
    cfg = AugmentConfig(
        filter_aug=FilterAugmentConfig(),
        freq_mask_max_bins=0,
        time_mask_min_frames=0,
        time_mask_max_frames=0,
        frameshift_max_frames=0,
        mixup_prob=0.0,
        noise_snr_db=None,
    )
    student, teacher, labels = make_student_teacher_views(items, cfg, Rng(73))
    lo, hi = 10 ** (-7.5 / 20.0), 10 ** (6.0 / 20.0)
    any_differ = False
    for (spec, lab), s, te, lout in zip(items, student, teacher, labels):
        assert lout is lab  # labels pass through untouched
        for view in (s, te):
            ratio = view.data / spec.data
            assert ratio.min() >= lo - 1e-12 and ratio.max() <= hi + 1e-12
        if not np.array_equal(s.data, te.data):
            any_differ = True
    assert any_differ


def test_views_log_domain_filter_aug_additive():
    items = batch(34, domain=LOG)
    cfg = AugmentConfig(
        filter_aug=FilterAugmentConfig(),
        time_mask_min_frames=0,
        time_mask_max_frames=0,
        frameshift_max_frames=0,
        mixup_prob=0.0,
    )
    student, _, _ = make_student_teacher_views(items, cfg, Rng(79))
    lo, hi = -7.5 * math.log(10) / 20.0, 6.0 * math.log(10) / 20.0
    for (spec, _), s in zip(items, student):
        delta = s.data - spec.data
        assert delta.min() >= lo - 1e-12 and delta.max() <= hi + 1e-12
        assert np.max(delta.max(axis=0) - delta.min(axis=0)) < 1e-12


def test_views_deterministic():
    items = batch(35)
    cfg = AugmentConfig(filter_aug=FilterAugmentConfig(), noise_snr_db=(30.0, 50.0), freq_mask_max_bins=8)
    s1, t1, l1 = make_student_teacher_views(items, cfg, Rng(83))
    s2, t2, l2 = make_student_teacher_views(items, cfg, Rng(83))
    for a, b in zip(s1 + t1, s2 + t2):
        assert np.array_equal(a.data, b.data)
    for a, b in zip(l1, l2):
        assert np.array_equal(a.strong, b.strong)


def test_views_shape_mismatch_rejected():
    items = batch(36) + batch(37, t=31)
    with pytest.raises(ShapeMismatch):
        make_student_teacher_views(items, AugmentConfig.none(), Rng(1))


def test_views_empty_batch_rejected():
    with pytest.raises(InvalidConfig):
        make_student_teacher_views([], AugmentConfig.none(), Rng(1))


def test_augment_features_matches_presets():
    spec = lin_spec(seed=38)
    out = augment_features(spec, get_preset("freqmask_16"), Rng(89))
    changed = np.flatnonzero(np.any(out.data != spec.data, axis=0))
    assert changed.size <= 16


# ---------------------------------------------------------------------------
# config and presets
# ---------------------------------------------------------------------------


def test_augment_config_json_round_trip():
    cfg = AugmentConfig(
        filter_aug=FilterAugmentConfig(-6.0, 4.5, 2, 3),
        freq_mask_max_bins=16,
        time_mask_min_frames=7,
        time_mask_max_frames=30,
        frameshift_max_frames=54,
        mixup_prob=0.8,
        mixup_alpha=0.2,
        noise_snr_db=(30.0, 50.0),
    )
    assert AugmentConfig.from_json(cfg.to_json()) == cfg


def test_augment_config_rejects_unknown_fields():
    with pytest.raises(InvalidConfig):
        AugmentConfig.from_json({"freq_mask_bins": 3})


def test_presets_cover_published_grid():
    assert len(ABLATION_GRID) == 16
    for name in ("filtaug_-7.5_6_b2-4", "freqmask_16", "noise_30_50"):
        assert name in PRESETS
    assert "none" in PRESETS and "none" not in ABLATION_GRID
    for name in ABLATION_GRID:
        cfg = get_preset(name)
        # presets only configure label-preserving ops
        assert cfg.time_mask_max_frames == 0
        assert cfg.frameshift_max_frames == 0
        assert cfg.mixup_prob == 0.0
    fa = get_preset("filtaug_-7.5_6_b2-4").filter_aug
    assert (fa.db_min, fa.db_max, fa.band_min, fa.band_max) == (-7.5, 6.0, 2, 4)
    assert get_preset("freqmask_16").freq_mask_max_bins == 16
    assert get_preset("noise_30_50").noise_snr_db == (30.0, 50.0)


def test_get_preset_unknown():
    with pytest.raises(InvalidConfig):
        get_preset("nope")


def test_invalid_configs():
    with pytest.raises(InvalidConfig):
        FilterAugmentConfig(6.0, -7.5).validate()
    with pytest.raises(InvalidConfig):
        FilterAugmentConfig(band_min=0).validate()
    with pytest.raises(InvalidConfig):
        AugmentConfig(time_mask_min_frames=9, time_mask_max_frames=3).validate()
    with pytest.raises(InvalidConfig):
        AugmentConfig(noise_snr_db=(50.0, 30.0)).validate()
