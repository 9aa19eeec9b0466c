import numpy as np
import pytest
from scipy.signal import medfilt

from sedkit.errors import InvalidConfig, InvalidScores
from sedkit.postprocess import (
    DecodeConfig,
    Event,
    ScoreMatrix,
    apply_weak_masking,
    binarize,
    decode_clip,
    decode_events,
    median_filter,
    rasterize_events,
    read_events_tsv,
    read_scores,
    weak_sed_events,
    write_events_tsv,
    write_scores,
)

HOP = 0.25


def scores_from(strong, weak, hop=HOP, duration=None, names=None):
    strong = np.asarray(strong, dtype=np.float64)
    names = tuple(names or (f"c{i}" for i in range(strong.shape[1])))
    duration = duration if duration is not None else strong.shape[0] * hop
    return ScoreMatrix(strong, np.asarray(weak, dtype=np.float64), hop, duration, names)


def random_scores(gen, t=20, c=3):
    return scores_from(gen.uniform(size=(t, c)), gen.uniform(size=c))


# ---------------------------------------------------------------------------
# binarize / weak masking
# ---------------------------------------------------------------------------


def test_binarize_all_active():
    s = scores_from(np.full((4, 2), 0.9), [0.9, 0.9])
    assert np.all(binarize(s, 0.5) == 1)


def test_binarize_boundary_is_active():
    s = scores_from([[0.5], [0.49]], [1.0])
    assert np.array_equal(binarize(s, 0.5), [[1, 0]])


def test_binarize_column_example():
    s = scores_from([[0.4], [0.6], [0.5]], [1.0])
    assert np.array_equal(binarize(s, 0.5), [[0, 1, 1]])


def test_weak_masking_kills_low_weak_class():
    strong = np.tile([[0.9, 0.9]], (5, 1))
    s = scores_from(strong, [0.9, 0.2])
    grid = apply_weak_masking(s, 0.5)
    assert np.all(grid[0] == 1)
    assert np.all(grid[1] == 0)


def test_weak_masking_all_pass_equals_binarize():
    gen = np.random.default_rng(0)
    s = scores_from(gen.uniform(size=(10, 3)), [0.9, 0.8, 0.99])
    assert np.array_equal(apply_weak_masking(s, 0.5), binarize(s, 0.5))


def test_weak_masking_subset_property_randomized():
    gen = np.random.default_rng(1)
    for _ in range(100):
        s = random_scores(gen)
        thr = float(gen.uniform(0.05, 0.95))
        masked = apply_weak_masking(s, thr)
        plain = binarize(s, thr)
        assert np.all(masked <= plain)
        for c in range(s.n_classes):  # all-or-nothing per class
            assert np.array_equal(masked[c], plain[c]) or not masked[c].any()


def test_per_class_thresholds():
    s = scores_from([[0.4, 0.4]], [1.0, 1.0])
    assert np.array_equal(binarize(s, (0.3, 0.5)), [[1], [0]])
    with pytest.raises(InvalidConfig):
        binarize(s, (0.3, 0.5, 0.7))


# ---------------------------------------------------------------------------
# median filter
# ---------------------------------------------------------------------------


def test_median_removes_isolated_spike():
    assert np.array_equal(median_filter(np.array([[0, 1, 0]]), 3), [[0, 0, 0]])


def test_median_fills_single_gap():
    assert np.array_equal(median_filter(np.array([[1, 1, 0, 1, 1]]), 3), [[1, 1, 1, 1, 1]])


def test_median_len_one_identity():
    gen = np.random.default_rng(2)
    grid = (gen.uniform(size=(3, 30)) < 0.5).astype(np.uint8)
    assert np.array_equal(median_filter(grid, 1), grid)


def test_median_even_length_rejected():
    with pytest.raises(InvalidConfig):
        median_filter(np.zeros((1, 5), dtype=np.uint8), 4)


def test_median_matches_scipy_zero_padded():
    gen = np.random.default_rng(3)
    for _ in range(50):
        row = (gen.uniform(size=60) < gen.uniform(0.2, 0.8)).astype(np.uint8)
        for length in (3, 5, 7, 9):
            ours = median_filter(row[None, :], length)[0]
            ref = medfilt(row.astype(float), length).astype(np.uint8)
            assert np.array_equal(ours, ref)


def test_median_removes_short_flanked_runs():
    # runs shorter than (L+1)/2 flanked by >= (L-1)/2 zeros must vanish
    gen = np.random.default_rng(4)
    for length in (3, 5, 7):
        run_max = (length + 1) // 2 - 1
        flank = (length - 1) // 2
        for _ in range(25):
            run = int(gen.integers(1, run_max + 1)) if run_max >= 1 else 0
            if run == 0:
                continue
            start = int(gen.integers(flank, 40 - run - flank))
            row = np.zeros(40, dtype=np.uint8)
            row[start : start + run] = 1
            out = median_filter(row[None, :], length)[0]
            assert not out.any()


# ---------------------------------------------------------------------------
# decode / rasterize
# ---------------------------------------------------------------------------


def test_decode_empty_grid():
    assert decode_events(np.zeros((2, 10), dtype=np.uint8), HOP, 2.5, ["a", "b"]) == []


def test_decode_single_run():
    grid = np.zeros((1, 10), dtype=np.uint8)
    grid[0, 2:5] = 1
    events = decode_events(grid, 0.25, 2.5, ["a"])
    assert events == [Event("a", 0.5, 1.25)]


def test_decode_two_runs_split_by_single_zero():
    grid = np.array([[1, 1, 0, 1]], dtype=np.uint8)
    events = decode_events(grid, 0.25, 1.0, ["a"])
    assert len(events) == 2


def test_decode_offsets_clamped_to_duration():
    grid = np.ones((1, 5), dtype=np.uint8)
    events = decode_events(grid, 0.25, 1.1, ["a"])
    assert events == [Event("a", 0.0, 1.1)]


def test_decode_drops_zero_length_tail_run():
    # final frame starts exactly at the clip end on this grid
    grid = np.zeros((1, 626), dtype=np.uint8)
    grid[0, 625] = 1
    events = decode_events(grid, 256 / 16000, 10.0, ["a"])
    assert events == []


def test_decode_sorted_by_class_then_onset():
    grid = np.zeros((2, 12), dtype=np.uint8)
    grid[1, 0:2] = 1
    grid[0, 4:6] = 1
    grid[0, 8:9] = 1
    events = decode_events(grid, 0.25, 3.0, ["a", "b"])
    assert [(e.class_name, e.onset) for e in events] == [("a", 1.0), ("a", 2.0), ("b", 0.0)]


def test_decode_rasterize_round_trip():
    gen = np.random.default_rng(5)
    names = ["a", "b", "c"]
    for _ in range(50):
        grid = (gen.uniform(size=(3, 40)) < 0.35).astype(np.uint8)
        events = decode_events(grid, HOP, 40 * HOP, names)
        back = rasterize_events(events, names, 40, HOP)
        assert np.array_equal(back, grid)


# ---------------------------------------------------------------------------
# weak SED
# ---------------------------------------------------------------------------


def test_weak_sed_basic():
    s = scores_from(np.zeros((4, 2)), [0.8, 0.1], hop=2.5, duration=10.0)
    events = weak_sed_events(s, 0.5)
    assert events == [Event("c0", 0.0, 10.0)]


def test_weak_sed_none_above():
    s = scores_from(np.ones((4, 2)), [0.1, 0.2])
    assert weak_sed_events(s, 0.5) == []


def test_weak_sed_all_above():
    s = scores_from(np.zeros((4, 3)), [0.9, 0.8, 0.7], hop=2.0, duration=7.5)
    events = weak_sed_events(s, 0.5)
    assert len(events) == 3
    assert all(e.onset == 0.0 and e.offset == 7.5 for e in events)


# ---------------------------------------------------------------------------
# decode_clip + config
# ---------------------------------------------------------------------------


def test_decode_config_validation():
    with pytest.raises(InvalidConfig):
        DecodeConfig(median_len=4).validate()
    with pytest.raises(InvalidConfig):
        DecodeConfig(threshold=0.0).validate()
    DecodeConfig(threshold=(0.4, 0.6), median_len=5).validate()


def test_decode_clip_chain():
    strong = np.zeros((30, 2))
    strong[5:15, 0] = 0.9
    strong[20:21, 0] = 0.9  # isolated spike, removed by median 7
    strong[2:29, 1] = 0.9  # masked away by weak
    s = scores_from(strong, [0.9, 0.1])
    events = decode_clip(s, DecodeConfig(threshold=0.5, median_len=7, weak_masking=True))
    assert events == [Event("c0", 5 * HOP, 15 * HOP)]


def test_decode_clip_weak_masked_subset_of_unmasked():
    gen = np.random.default_rng(6)
    for _ in range(50):
        s = random_scores(gen, t=40)
        masked = decode_clip(s, DecodeConfig(threshold=0.5, median_len=3, weak_masking=True))
        plain = decode_clip(s, DecodeConfig(threshold=0.5, median_len=3, weak_masking=False))
        plain_by_class = {}
        for ev in plain:
            plain_by_class.setdefault(ev.class_name, []).append(ev)
        masked_by_class = {}
        for ev in masked:
            masked_by_class.setdefault(ev.class_name, []).append(ev)
        for cls, evs in masked_by_class.items():
            assert evs == plain_by_class.get(cls, [])


# ---------------------------------------------------------------------------
# io
# ---------------------------------------------------------------------------


def test_scores_round_trip(tmp_path):
    gen = np.random.default_rng(7)
    s = random_scores(gen, t=12, c=2)
    write_scores(s, tmp_path / "clip.csv", clip_id="clip_0000.wav")
    clip_id, back = read_scores(tmp_path / "clip.csv")
    assert clip_id == "clip_0000.wav"
    assert np.array_equal(back.strong, s.strong)
    assert np.array_equal(back.weak, s.weak)
    assert back.class_names == s.class_names
    assert back.hop_seconds == s.hop_seconds


def test_events_tsv_round_trip(tmp_path):
    rows = [
        ("clip_0000.wav", Event("dog", 1.0, 2.5)),
        ("clip_0001.wav", Event("cat", 0.125, 0.75)),
    ]
    write_events_tsv(rows, tmp_path / "events.tsv")
    text = (tmp_path / "events.tsv").read_text()
    assert text.splitlines()[0] == "filename\tonset\toffset\tevent_label"
    assert "1.000\t2.500" in text and "0.125\t0.750" in text
    back = read_events_tsv(tmp_path / "events.tsv")
    assert back == rows


def test_score_matrix_validation():
    with pytest.raises(InvalidScores):
        scores_from(np.full((3, 1), 1.5), [0.5])
    with pytest.raises(InvalidScores):
        scores_from(np.full((3, 1), 0.5), [0.5], duration=100.0)
    with pytest.raises(InvalidScores):
        Event("a", 2.0, 1.0)
