#!/usr/bin/env python3
# Weak predictions at decode time: masking and weak SED.
#
# A detector emits frame-level scores (strong) and one clip-level score per
# class (weak). Two ways to use the weak side:
#   1. weak prediction masking: only decode classes whose weak score clears
#      the threshold; frame scores of the other classes are discarded.
#   2. weak SED: ignore frame timing entirely and emit one full-clip event
#      per class that clears the threshold.

import numpy as np

from sedkit import DecodeConfig, ScoreMatrix, decode_clip, weak_sed_events

HOP = 0.016
T = 625  # 10 s clip

# --- fabricate scores: class "dog" really happens at 2..4 s; class "car"
# has spurious frame activity but its weak score stays low
strong = np.random.default_rng(1).uniform(0.0, 0.35, size=(T, 2))
strong[125:250, 0] = 0.95
strong[300:320, 1] = 0.9  # a confident-looking false burst for "car"
scores = ScoreMatrix(
    strong=strong,
    weak=np.array([0.97, 0.30]),
    hop_seconds=HOP,
    clip_duration_seconds=10.0,
    class_names=("dog", "car"),
)

plain = decode_clip(scores, DecodeConfig(threshold=0.5, median_len=7, weak_masking=False))
masked = decode_clip(scores, DecodeConfig(threshold=0.5, median_len=7, weak_masking=True))

print("decode without weak masking:")
for ev in plain:
    print(f"  {ev.class_name:4s} {ev.onset:6.3f} .. {ev.offset:6.3f}")
print("decode with weak masking (car's weak score 0.30 < 0.5, so its row is dropped):")
for ev in masked:
    print(f"  {ev.class_name:4s} {ev.onset:6.3f} .. {ev.offset:6.3f}")

# --- weak SED: timestamps become the whole clip
ws = weak_sed_events(scores, 0.5)
print("weak SED events (full-clip timestamps):")
for ev in ws:
    print(f"  {ev.class_name:4s} {ev.onset:6.3f} .. {ev.offset:6.3f}")

print(
    "\nweak SED trades timing away: against a tolerance of 0.1 a 10 s event\n"
    "counts as a true positive whenever >= 1 s of same-class truth exists,\n"
    "but against 0.7 it needs >= 7 s, which short events never provide"
)
